#include "mvbayes/data_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mvbayes/errors.hpp"
#include "mvbayes/mv_optimizer.hpp"

namespace mvbayes {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_value(std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  const auto y = parse_value<int>(s.substr(0, 4));
  const auto m = parse_value<unsigned>(s.substr(5, 2));
  const auto d = parse_value<unsigned>(s.substr(8, 2));
  if (!y || !m || !d) return false;
  return std::chrono::year_month_day{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}}.ok();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void config_error(const std::string& key, std::string_view value, const std::string& why) {
  throw ConfigError("config key '" + key + "': invalid value '" + std::string(value) + "' (" + why + ")");
}

double config_double(const std::string& key, std::string_view value) {
  const auto v = parse_value<double>(trim(value));
  if (!v || !std::isfinite(*v)) config_error(key, value, "expected a number");
  return *v;
}

long long config_integer(const std::string& key, std::string_view value) {
  const auto v = parse_value<long long>(trim(value));
  if (!v) config_error(key, value, "expected an integer");
  return *v;
}

std::size_t config_count(const std::string& key, std::string_view value) {
  const long long v = config_integer(key, value);
  if (v < 0) config_error(key, value, "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Prices

PriceSeries parse_prices(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  PriceSeries out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw DataError(source + ": empty file");
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "date") {
    throw DataError(source + ":" + std::to_string(line_no) + ": header must be 'date,<ticker>,...'");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty ticker name");
    out.tickers.emplace_back(header[j]);
  }
  const std::size_t n = out.tickers.size();

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != n + 1) {
      throw DataError(where + ": expected " + std::to_string(n + 1) + " fields, found " +
                      std::to_string(fields.size()));
    }
    if (!valid_iso_date(fields[0])) {
      throw DataError(where + ": '" + std::string(fields[0]) + "' is not an ISO-8601 date (YYYY-MM-DD)");
    }
    if (!out.dates.empty() && std::string(fields[0]) <= out.dates.back()) {
      throw DataError(where + ": dates must be strictly increasing");
    }
    bool missing = false;
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto cell = fields[j + 1];
      if (cell.empty()) {
        missing = true;
        continue;
      }
      const auto v = parse_value<double>(cell);
      if (!v || !std::isfinite(*v)) {
        throw DataError(where + ", column '" + out.tickers[j] + "': cannot parse price '" + std::string(cell) + "'");
      }
      if (*v <= 0.0) {
        throw DataError(where + ", column '" + out.tickers[j] + "': price must be > 0");
      }
      row[j] = *v;
    }
    if (missing) continue;
    out.dates.emplace_back(fields[0]);
    values.insert(values.end(), row.begin(), row.end());
  }
  out.prices = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(out.dates.size()), static_cast<Eigen::Index>(n));
  return out;
}

PriceSeries load_prices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file " + path.string());
  return parse_prices(in, path.string());
}

void write_prices(std::ostream& out, const PriceSeries& series) {
  out << "date";
  for (const auto& t : series.tickers) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.dates[i];
    for (Eigen::Index j = 0; j < series.prices.cols(); ++j) {
      out << ',' << format_double(series.prices(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

void write_prices(const std::filesystem::path& path, const PriceSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write price file " + path.string());
  write_prices(out, series);
}

PriceSeries align(const std::vector<PriceSeries>& parts) {
  if (parts.empty()) throw std::invalid_argument("align: no series given");
  std::vector<std::map<std::string, Eigen::Index>> index(parts.size());
  for (std::size_t s = 0; s < parts.size(); ++s) {
    for (std::size_t i = 0; i < parts[s].size(); ++i) index[s][parts[s].dates[i]] = static_cast<Eigen::Index>(i);
  }
  PriceSeries out;
  for (const auto& part : parts) out.tickers.insert(out.tickers.end(), part.tickers.begin(), part.tickers.end());
  std::vector<std::vector<Eigen::Index>> rows(parts.size());
  for (const auto& date : parts.front().dates) {
    bool everywhere = true;
    for (std::size_t s = 1; s < parts.size() && everywhere; ++s) everywhere = index[s].count(date) > 0;
    if (!everywhere) continue;
    out.dates.push_back(date);
    for (std::size_t s = 0; s < parts.size(); ++s) rows[s].push_back(index[s].at(date));
  }
  out.prices.resize(static_cast<Eigen::Index>(out.dates.size()), static_cast<Eigen::Index>(out.tickers.size()));
  Eigen::Index col = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    for (Eigen::Index j = 0; j < parts[s].prices.cols(); ++j, ++col) {
      for (std::size_t i = 0; i < rows[s].size(); ++i) {
        out.prices(static_cast<Eigen::Index>(i), col) = parts[s].prices(rows[s][i], j);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Returns

Convention parse_convention(std::string_view text) {
  const auto t = trim(text);
  if (t == "gross") return Convention::kGross;
  if (t == "net") return Convention::kNet;
  throw ConfigError("return convention must be 'gross' or 'net', got '" + std::string(text) + "'");
}

std::string_view to_string(Convention c) noexcept { return c == Convention::kGross ? "gross" : "net"; }

double gross_offset(Convention c) noexcept { return c == Convention::kGross ? 0.0 : 1.0; }

Eigen::MatrixXd to_returns(const PriceSeries& prices, Convention convention) {
  if (prices.size() < 2) throw DataError("to_returns: need at least two price observations");
  const Eigen::Index rows = prices.prices.rows() - 1;
  Eigen::MatrixXd out = prices.prices.bottomRows(rows).array() / prices.prices.topRows(rows).array();
  if (convention == Convention::kNet) out.array() -= 1.0;
  return out;
}

Split split(const Eigen::MatrixXd& series, std::size_t estimation_len, std::size_t update_len) {
  const auto available = static_cast<std::size_t>(series.rows());
  if (estimation_len + update_len > available) {
    throw DataError("split: need " + std::to_string(estimation_len) + " + " + std::to_string(update_len) + " = " +
                    std::to_string(estimation_len + update_len) + " periods, only " + std::to_string(available) +
                    " available");
  }
  const auto e = static_cast<Eigen::Index>(estimation_len);
  const auto u = static_cast<Eigen::Index>(update_len);
  return {series.topRows(e), series.middleRows(e, u)};
}

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "convention", "horizon", "x0",    "riskfree_net", "exit",  "omega",          "seed",
      "est_len",    "upd_len", "order", "p_max",        "samples", "n_sims", "alpha", "vref_multiplier",
      "grid_points"};
  return keys;
}

void apply_override(RunConfig& c, std::string_view key_view, std::string_view raw) {
  const std::string key(trim(key_view));
  const std::string_view value = trim(raw);
  if (key == "convention") {
    c.convention = parse_convention(value);
  } else if (key == "horizon") {
    c.horizon = static_cast<int>(config_integer(key, value));
  } else if (key == "x0") {
    c.x0 = config_double(key, value);
  } else if (key == "riskfree_net") {
    c.riskfree_net = config_double(key, value);
  } else if (key == "exit") {
    c.exit = std::string(value);
  } else if (key == "omega") {
    c.omega.clear();
    for (auto item : split_fields(value)) c.omega.push_back(config_double(key, item));
  } else if (key == "seed") {
    const auto v = parse_value<std::uint64_t>(value);
    if (!v) config_error(key, value, "expected a non-negative integer");
    c.seed = *v;
  } else if (key == "est_len") {
    c.est_len = config_count(key, value);
  } else if (key == "upd_len") {
    c.upd_len = config_count(key, value);
  } else if (key == "order") {
    c.order = static_cast<int>(config_integer(key, value));
  } else if (key == "p_max") {
    c.p_max = static_cast<int>(config_integer(key, value));
  } else if (key == "samples") {
    c.samples = config_count(key, value);
  } else if (key == "n_sims") {
    c.n_sims = config_count(key, value);
  } else if (key == "alpha") {
    c.alpha = config_double(key, value);
  } else if (key == "vref_multiplier") {
    c.vref_multiplier = config_double(key, value);
  } else if (key == "grid_points") {
    c.grid_points = static_cast<int>(config_integer(key, value));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_override(c, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void validate(const RunConfig& c) {
  if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(c.x0 > 0.0)) throw ConfigError("x0 must be > 0");
  if (!(c.riskfree_net > -1.0)) throw ConfigError("riskfree_net must be > -1");
  if (c.omega.empty()) throw ConfigError("omega must list at least one value");
  for (double w : c.omega) {
    if (!(w > 0.0)) throw ConfigError("every omega must be > 0");
  }
  try {
    ExitDistribution::parse(c.exit, c.horizon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("exit: ") + e.what());
  }
  if (c.order < 0) throw ConfigError("order must be >= 0 (0 selects by AIC)");
  if (c.p_max < 1) throw ConfigError("p_max must be >= 1");
  if (c.samples < 1) throw ConfigError("samples must be >= 1");
  if (c.n_sims < 1) throw ConfigError("n_sims must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(c.vref_multiplier >= 1.0)) throw ConfigError("vref_multiplier must be >= 1");
  if (c.grid_points < 2) throw ConfigError("grid_points must be >= 2");
}

std::string to_string(const RunConfig& c) {
  std::ostringstream out;
  out << "convention = " << to_string(c.convention) << '\n'
      << "horizon = " << c.horizon << '\n'
      << "x0 = " << format_double(c.x0) << '\n'
      << "riskfree_net = " << format_double(c.riskfree_net) << '\n'
      << "exit = " << c.exit << '\n'
      << "omega = ";
  for (std::size_t i = 0; i < c.omega.size(); ++i) out << (i ? "," : "") << format_double(c.omega[i]);
  out << '\n';
  if (c.seed) out << "seed = " << *c.seed << '\n';
  out << "est_len = " << c.est_len << '\n'
      << "upd_len = " << c.upd_len << '\n'
      << "order = " << c.order << '\n'
      << "p_max = " << c.p_max << '\n'
      << "samples = " << c.samples << '\n'
      << "n_sims = " << c.n_sims << '\n'
      << "alpha = " << format_double(c.alpha) << '\n'
      << "vref_multiplier = " << format_double(c.vref_multiplier) << '\n'
      << "grid_points = " << c.grid_points << '\n';
  return out.str();
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : to_string(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mvbayes
