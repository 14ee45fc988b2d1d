#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/data_io.hpp"
#include "mvbayes/errors.hpp"
#include "mvbayes/experiments.hpp"
#include "mvbayes/mv_optimizer.hpp"
#include "mvbayes/returns_model.hpp"

namespace mvbayes::cli {

namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keys;
  std::vector<std::string> exits;
  std::string prices;
  std::string out;
  std::string out_prefix;
  int table = 1;
  bool literal = false;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw DataError("cannot open output file " + path);
    }
    stream_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_header(std::ostream& os, const std::string& command, const RunConfig& cfg) {
  os << "# mvbayes " << MVBAYES_VERSION << '\n'
     << "# command=" << command << '\n'
     << "# config_hash=" << config_hash(cfg) << '\n'
     << "# seed=" << (cfg.seed ? std::to_string(*cfg.seed) : std::string("none")) << '\n';
}

json meta_json(const std::string& command, const RunConfig& cfg) {
  json meta;
  meta["software"] = "mvbayes";
  meta["version"] = MVBAYES_VERSION;
  meta["command"] = command;
  meta["config_hash"] = config_hash(cfg);
  meta["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  return meta;
}

std::uint64_t require_seed(const RunConfig& cfg, const std::string& command) {
  if (!cfg.seed) throw ConfigError(command + " is randomized and needs --seed (or 'seed' in the config file)");
  return *cfg.seed;
}

struct Loaded {
  PriceSeries prices;
  Eigen::MatrixXd returns;
};

Loaded load_returns(const Options& opt, const RunConfig& cfg) {
  if (opt.prices.empty()) throw ConfigError(opt.command + " needs --prices <csv>");
  Loaded l;
  l.prices = load_prices(opt.prices);
  l.returns = to_returns(l.prices, cfg.convention);
  return l;
}

BacktestConfig backtest_config(const RunConfig& cfg) {
  BacktestConfig b;
  b.convention = cfg.convention;
  b.order = cfg.order;
  b.p_max = cfg.p_max;
  b.est_len = cfg.est_len;
  b.upd_len = cfg.upd_len;
  b.horizon = cfg.horizon;
  b.riskfree_net = cfg.riskfree_net;
  b.exit = cfg.exit;
  b.x0 = cfg.x0;
  b.omega = cfg.omega;
  b.grid_points = cfg.grid_points;
  return b;
}

int chosen_order(const RunConfig& cfg, std::span<const double> est, std::vector<double>* aic) {
  if (cfg.order > 0) return cfg.order;
  const OrderSelection sel = select_order(est, cfg.p_max);
  if (aic) *aic = sel.aic;
  return sel.order;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_estimate(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  const Loaded data = load_returns(opt, cfg);
  const Eigen::MatrixXd est = split(data.returns, cfg.est_len, 0).estimation;
  json doc;
  doc["meta"] = meta_json("estimate", cfg);
  doc["convention"] = std::string(to_string(cfg.convention));
  doc["tickers"] = data.prices.tickers;
  if (est.cols() == 1) {
    const Eigen::VectorXd col = est.col(0);
    const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
    std::vector<double> aic;
    const int p = chosen_order(cfg, s, &aic);
    const ArFit fit = fit_ols(s, p);
    doc["kind"] = "ar";
    doc["order"] = p;
    if (!aic.empty()) doc["aic"] = aic;
    doc["mu"] = fit.model.mu();
    doc["intercept"] = fit.model.intercept();
    doc["phi"] = fit.model.phi();
    doc["sigma2"] = fit.model.sigma2();
    doc["stationary"] = fit.model.stationary();
    doc["rows"] = fit.rows;
    doc["c0"] = matrix_json(fit.c0);
  } else {
    int p = cfg.order;
    std::vector<double> aic;
    if (p == 0) {
      const OrderSelection sel = select_order(est, cfg.p_max);
      p = sel.order;
      aic = sel.aic;
    }
    const VarFit fit = fit_ols(est, p);
    doc["kind"] = "var";
    doc["order"] = p;
    if (!aic.empty()) doc["aic"] = aic;
    doc["mu"] = vector_json(fit.model.mu());
    doc["intercept"] = vector_json(fit.model.intercept());
    json phi = json::array();
    for (const auto& m : fit.model.phi()) phi.push_back(matrix_json(m));
    doc["phi"] = phi;
    doc["sigma"] = matrix_json(fit.model.sigma());
    doc["stationary"] = fit.model.stationary();
    doc["rows"] = fit.rows;
    doc["c0"] = matrix_json(fit.c0);
  }
  os << doc.dump(2) << '\n';
}

void cmd_filter(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  const Loaded data = load_returns(opt, cfg);
  const Split parts = split(data.returns, cfg.est_len, cfg.upd_len);
  if (parts.update.rows() == 0) throw ConfigError("filter needs upd_len >= 1");
  const Eigen::Index n = data.returns.cols();

  FilterState state;
  if (n == 1) {
    const Eigen::VectorXd col = parts.estimation.col(0);
    const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
    const int p = chosen_order(cfg, s, nullptr);
    const ArFit fit = fit_ols(s, p);
    state = init_filter(fit.model, fit.c0, s.last(static_cast<std::size_t>(p)));
  } else {
    const int p = cfg.order > 0 ? cfg.order : select_order(parts.estimation, cfg.p_max).order;
    const VarFit fit = fit_ols(parts.estimation, p);
    state = init_filter(fit.model, fit.c0, parts.estimation.bottomRows(p));
  }
  const FilterRun run = filter_series(state, parts.update);

  write_header(os, "filter", cfg);
  os << "step,date";
  for (const auto& t : data.prices.tickers) os << ",observed_" << t;
  for (const auto& t : data.prices.tickers) os << ",f_" << t;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) os << ",q_" << data.prices.tickers[i] << '_' << data.prices.tickers[j];
  }
  for (Eigen::Index j = 0; j < state.m.size(); ++j) os << ",m_" << j;
  os << '\n';
  for (std::size_t k = 0; k < run.predictive.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    os << k + 1 << ',' << data.prices.dates[cfg.est_len + k + 1];
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << num(parts.update(row, j));
    const auto& pred = run.predictive[k];
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << num(pred.f(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) os << ',' << num(pred.q(i, j));
    }
    for (Eigen::Index j = 0; j < run.posterior[k].size(); ++j) os << ',' << num(run.posterior[k](j));
    os << '\n';
  }
}

std::vector<ExitDistribution> configured_exits(const Options& opt, const RunConfig& cfg) {
  std::vector<ExitDistribution> out;
  if (opt.exits.size() <= 1) {
    out.push_back(ExitDistribution::parse(cfg.exit, cfg.horizon));
    return out;
  }
  for (const auto& spec : opt.exits) {
    try {
      out.push_back(ExitDistribution::parse(spec, cfg.horizon));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("exit: ") + e.what());
    }
  }
  return out;
}

void cmd_frontier(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  const Loaded data = load_returns(opt, cfg);
  const auto exits = configured_exits(opt, cfg);
  const ExitStudyResult res = exit_time_study(data.returns, backtest_config(cfg), exits);

  write_header(os, "frontier", cfg);
  os << "exit_id,variance,expected_wealth_updated,expected_wealth_nonupdated";
  if (opt.literal) os << ",expected_wealth_updated_literal,expected_wealth_nonupdated_literal";
  os << '\n';
  for (std::size_t e = 0; e < exits.size(); ++e) {
    for (std::size_t i = 0; i < res.variance.size(); ++i) {
      os << e + 1 << ',' << num(res.variance[i]) << ',' << num(res.updated[e].expected_wealth[i]) << ','
         << num(res.nonupdated[e].expected_wealth[i]);
      if (opt.literal) {
        os << ',' << num(res.updated[e].expected_wealth_literal[i]) << ','
           << num(res.nonupdated[e].expected_wealth_literal[i]);
      }
      os << '\n';
    }
  }
}

void write_curve(const std::string& path, const RunConfig& cfg, const std::vector<double>& variance,
                 const FrontierCurve& curve, bool literal) {
  Output out(path, std::cout);
  auto& os = out.stream();
  write_header(os, "backtest", cfg);
  os << "variance,expected_wealth" << (literal ? ",expected_wealth_literal" : "") << '\n';
  for (std::size_t i = 0; i < variance.size(); ++i) {
    os << num(variance[i]) << ',' << num(curve.expected_wealth[i]);
    if (literal) os << ',' << num(curve.expected_wealth_literal[i]);
    os << '\n';
  }
}

void cmd_backtest(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  if (opt.out_prefix.empty()) throw ConfigError("backtest needs --out-prefix <path prefix>");
  const Loaded data = load_returns(opt, cfg);
  const BacktestResult res = backtest(data.returns, backtest_config(cfg));
  write_curve(opt.out_prefix + "_updated.csv", cfg, res.variance, res.updated, opt.literal);
  write_curve(opt.out_prefix + "_nonupdated.csv", cfg, res.variance, res.nonupdated, opt.literal);
  os << "wrote " << opt.out_prefix << "_updated.csv and " << opt.out_prefix << "_nonupdated.csv (order "
     << res.order << (res.stationary ? "" : ", non-stationary estimate") << ")\n";
}

void cmd_study(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  StudyConfig sc = study_preset(opt.table);
  sc.seed = require_seed(cfg, "study");
  sc.samples = cfg.samples;
  sc.est_len = cfg.est_len;
  sc.horizon = cfg.horizon;
  sc.riskfree_net = cfg.riskfree_net;
  sc.exit = cfg.exit;
  sc.x0 = cfg.x0;
  sc.vref_multiplier = cfg.vref_multiplier;
  const WinTable table = parameter_study(sc);

  write_header(os, "study", cfg);
  os << "# table=" << opt.table << '\n';
  os << "parameter,value,win_probability,wins,samples,skipped,stationary\n";
  for (const auto& row : table.rows) {
    os << to_string(table.parameter) << ',' << num(row.value) << ',' << num(row.win_probability) << ','
       << row.wins << ',' << row.samples << ',' << row.skipped << ',' << (row.stationary ? "true" : "false")
       << '\n';
  }
}

void cmd_credible(const Options& opt, const RunConfig& cfg, std::ostream& os) {
  const std::uint64_t seed = require_seed(cfg, "credible");
  const Loaded data = load_returns(opt, cfg);
  if (data.returns.cols() != 1) throw DataError("credible intervals are computed for a single asset");
  const Eigen::VectorXd col = split(data.returns, cfg.est_len, 0).estimation.col(0);
  const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
  const int p = chosen_order(cfg, s, nullptr);
  const ArFit fit = fit_ols(s, p);

  CredibleConfig cc;
  cc.omegas = cfg.omega;
  cc.alpha = cfg.alpha;
  cc.n_sims = cfg.n_sims;
  cc.seed = seed;
  cc.horizon = cfg.horizon;
  cc.exit = cfg.exit;
  cc.riskfree_net = cfg.riskfree_net;
  cc.x0 = cfg.x0;
  cc.convention = cfg.convention;
  const CredibleResult res = credible_intervals(fit.model, s.last(static_cast<std::size_t>(p)), cc);

  write_header(os, "credible", cfg);
  os << "# excluded=" << res.excluded << " of " << res.n_sims << '\n';
  os << "omega,expected_return,lower,upper,implied_variance\n";
  for (const auto& row : res.rows) {
    os << num(row.omega) << ',' << num(row.expected_return) << ',' << num(row.lower) << ',' << num(row.upper)
       << ',' << num(row.implied_variance) << '\n';
  }
}

RunConfig resolve_config(const Options& opt) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  for (const auto& [key, value] : opt.keys) apply_override(cfg, key, value);
  if (!opt.exits.empty()) apply_override(cfg, "exit", opt.exits.front());
  for (const auto& kv : opt.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian-updated multi-period mean-variance portfolios", "mvbayes"};
  app.set_version_flag("--version", std::string(MVBAYES_VERSION));
  app.require_subcommand(1, 1);

  Options opt;
  std::map<std::string, std::string> key_storage;
  std::vector<CLI::Option*> key_options;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", "fit the return model on the estimation segment and print it as JSON"},
      {"filter", "per-step one-step-ahead predictive and posterior mean over the update segment (CSV)"},
      {"frontier", "updated and non-updated efficient frontiers for one or more exit distributions (CSV)"},
      {"backtest", "paired updated / non-updated frontier files on a shared variance grid"},
      {"study", "win-probability table of the simulation study (CSV)"},
      {"credible", "credible intervals for the optimal portfolio return across risk aversions (CSV)"}};

  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->callback([&opt, name = name] { opt.command = name; });
    sub->add_option("-c,--config", opt.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", opt.sets, "override a config key, key=value (repeatable)");
    sub->add_option("--prices", opt.prices, "price CSV with header date,<ticker>,...");
    sub->add_option("-o,--out", opt.out, "output file (default: standard output)");
    for (const auto& key : config_keys()) {
      if (key == "exit") {
        sub->add_option("--exit", opt.exits, "exit distribution: t1:p1,t2:p2,... | uniform_tail:<mass> | uniform | certain");
        continue;
      }
      key_options.push_back(sub->add_option("--" + key, key_storage[key], "config key '" + key + "'"));
    }
    if (name == "backtest") sub->add_option("--out-prefix", opt.out_prefix, "writes <prefix>_updated.csv and <prefix>_nonupdated.csv");
    if (name == "study") sub->add_option("--table", opt.table, "study table 1 (phi), 2 (mu) or 3 (sigma2)")->check(CLI::Range(1, 3));
    if (name == "frontier" || name == "backtest") sub->add_flag("--literal", opt.literal, "also emit the squared-constant frontier");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }
  for (auto* o : key_options) {
    if (o->count() > 0) opt.keys[o->get_name().substr(2)] = o->as<std::string>();
  }

  try {
    const RunConfig cfg = resolve_config(opt);
    Output target(opt.out, out);
    auto& os = target.stream();
    if (opt.command == "estimate") cmd_estimate(opt, cfg, os);
    else if (opt.command == "filter") cmd_filter(opt, cfg, os);
    else if (opt.command == "frontier") cmd_frontier(opt, cfg, os);
    else if (opt.command == "backtest") cmd_backtest(opt, cfg, os);
    else if (opt.command == "study") cmd_study(opt, cfg, os);
    else if (opt.command == "credible") cmd_credible(opt, cfg, os);
    return kOk;
  } catch (const ConfigError& e) {
    err << "mvbayes: configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "mvbayes: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace mvbayes::cli
