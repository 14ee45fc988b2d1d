/**
 * @file data_io.hpp
 * @brief Price ingestion, return construction, sample splitting and run configuration
 *
 * Price files are CSV with a header `date,<ticker1>,<ticker2>,...` and one
 * row per ISO-8601 date. A row with an empty cell is dropped (the asset has
 * no quote that day); any other unparseable cell is an error.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mvbayes {

struct PriceSeries {
  std::vector<std::string> dates;    ///< strictly increasing
  std::vector<std::string> tickers;
  Eigen::MatrixXd prices;            ///< dates x tickers, all > 0

  std::size_t size() const noexcept { return dates.size(); }
};

PriceSeries parse_prices(std::istream& in, const std::string& source = "<input>");
PriceSeries load_prices(const std::filesystem::path& path);

/// Writes with round-trip precision so that parse_prices reproduces the series exactly.
void write_prices(std::ostream& out, const PriceSeries& series);
void write_prices(const std::filesystem::path& path, const PriceSeries& series);

/// Inner join on dates, preserving order; tickers are concatenated.
PriceSeries align(const std::vector<PriceSeries>& parts);

enum class Convention { kGross, kNet };

Convention parse_convention(std::string_view text);
std::string_view to_string(Convention c) noexcept;
/// Amount added to a return in @p c to obtain the gross return.
double gross_offset(Convention c) noexcept;

/// (T-1) x n matrix of P_t / P_{t-1} (gross) or P_t / P_{t-1} - 1 (net).
Eigen::MatrixXd to_returns(const PriceSeries& prices, Convention convention);

struct Split {
  Eigen::MatrixXd estimation;
  Eigen::MatrixXd update;
};

/// First @p estimation_len rows, then the next @p update_len rows.
Split split(const Eigen::MatrixXd& series, std::size_t estimation_len, std::size_t update_len);

/// Flat key = value run configuration. Keys not set in a file keep these defaults.
struct RunConfig {
  Convention convention = Convention::kNet;
  int horizon = 26;
  double x0 = 1.0;
  double riskfree_net = 0.0057;
  std::string exit = "uniform_tail:0.001";
  std::vector<double> omega{1.0};
  std::optional<std::uint64_t> seed;
  std::size_t est_len = 130;
  std::size_t upd_len = 26;
  int order = 1;             ///< AR / VAR lag order; 0 selects by AIC up to p_max
  int p_max = 5;
  std::size_t samples = 100;  ///< replicates per study cell
  std::size_t n_sims = 1000;  ///< credible-interval paths
  double alpha = 0.5;
  double vref_multiplier = 2.0;
  int grid_points = 41;

  /// riskfree_net + 1
  double riskfree_gross() const noexcept { return 1.0 + riskfree_net; }
};

/// Keys accepted by parse_config and apply_override, in canonical order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError on unknown keys or bad values.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key from its textual value (flags override file values).
void apply_override(RunConfig& config, std::string_view key, std::string_view value);

/// Throws ConfigError when an invariant is violated (T >= 1, x0 > 0, omega > 0, valid exit spec, ...).
void validate(const RunConfig& config);

/// Canonical `key = value` text, one line per key.
std::string to_string(const RunConfig& config);

/// 64-bit FNV-1a of to_string(config), as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace mvbayes
