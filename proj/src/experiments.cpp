#include "mvbayes/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/errors.hpp"
#include "mvbayes/numeric.hpp"

namespace mvbayes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Predictive> scalar_predictives(const std::vector<ScalarMoments>& moments) {
  std::vector<Predictive> out;
  out.reserve(moments.size());
  for (const auto& m : moments) {
    out.push_back({Eigen::VectorXd::Constant(1, m.mean), Eigen::MatrixXd::Constant(1, 1, m.variance)});
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

double literal_expected_wealth(const DpCoefficients& c, double x0, double variance) {
  const double v_min = min_variance(c, x0, FrontierForm::kLiteral);
  if (variance < v_min) return kNaN;
  const double th = c.big_theta;
  return min_expected_wealth(c, x0) + std::sqrt((variance - v_min) * th / (1.0 - th));
}

DpCoefficients plan_coefficients(const std::vector<Predictive>& preds, bool vector_route, double riskfree_gross,
                                 double offset, const ExitDistribution& exit) {
  const std::vector<double> r0(preds.size(), riskfree_gross);
  if (vector_route) {
    const auto moments = planning_moments_vector(preds, r0, offset);
    return dp_coefficients(std::span<const VectorExcessMoment>(moments), exit);
  }
  const auto moments = planning_moments(preds, r0, offset);
  return dp_coefficients(std::span<const ExcessMoment>(moments), exit);
}

std::vector<Predictive> head(const std::vector<Predictive>& preds, int horizon) {
  return {preds.begin(), preds.begin() + std::min<std::ptrdiff_t>(horizon, static_cast<std::ptrdiff_t>(preds.size()))};
}

struct RoutedInputs {
  PlanningInputs inputs;
  bool vector_route = false;
  FilterState initial;
  FilterState after_update;
  std::vector<Predictive> update_predictives;
};

RoutedInputs routed_inputs(const Eigen::MatrixXd& returns, const BacktestConfig& cfg) {
  if (returns.cols() < 1) throw std::invalid_argument("backtest: no assets");
  const Split parts = split(returns, cfg.est_len, cfg.upd_len);
  const bool vector_route = returns.cols() > 1 || cfg.force_vector;

  RoutedInputs out;
  out.vector_route = vector_route;
  int order = cfg.order;
  if (vector_route) {
    if (order == 0) order = select_order(parts.estimation, cfg.p_max).order;
    const VarFit fit = fit_ols(parts.estimation, order);
    out.initial = init_filter(fit.model, fit.c0, parts.estimation.bottomRows(order));
    out.inputs.stationary = fit.model.stationary();
  } else {
    const Eigen::VectorXd est = parts.estimation.col(0);
    const std::span<const double> est_span(est.data(), static_cast<std::size_t>(est.size()));
    if (order == 0) order = select_order(est_span, cfg.p_max).order;
    const ArFit fit = fit_ols(est_span, order);
    out.initial = init_filter(fit.model, fit.c0, est_span.last(static_cast<std::size_t>(order)));
    out.inputs.stationary = fit.model.stationary();
  }
  out.inputs.order = order;
  out.after_update = out.initial;
  if (parts.update.rows() > 0) {
    const FilterRun run = filter_series(out.initial, parts.update);
    out.after_update = run.final_state;
    out.update_predictives = run.predictive;
  }
  return out;
}

/// Updated and non-updated planning predictives for a given horizon.
void fill_plans(RoutedInputs& r, int horizon) {
  if (horizon < 1) throw std::invalid_argument("planning horizon must be >= 1");
  r.inputs.nonupdated = forecast_from_state(r.initial, horizon);
  const auto used = static_cast<int>(std::min<std::size_t>(r.update_predictives.size(), static_cast<std::size_t>(horizon)));
  r.inputs.updated = head(r.update_predictives, used);
  if (used < horizon) {
    const auto tail = forecast_from_state(r.after_update, horizon - used);
    r.inputs.updated.insert(r.inputs.updated.end(), tail.begin(), tail.end());
  }
}

FrontierCurve evaluate_curve(const DpCoefficients& c, double x0, const std::vector<double>& grid) {
  FrontierCurve curve;
  curve.coeffs = c;
  const double v_min = min_variance(c, x0);
  for (double v : grid) {
    curve.expected_wealth.push_back(v < v_min ? kNaN : expected_wealth_at_variance(c, x0, v));
    curve.expected_wealth_literal.push_back(literal_expected_wealth(c, x0, v));
  }
  return curve;
}

std::vector<double> shared_grid(const std::vector<const DpCoefficients*>& all, double x0, double omega_min,
                                int points) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto* c : all) {
    lo = std::max(lo, min_variance(*c, x0));
    hi = std::max(hi, frontier_variance(*c, x0, expected_terminal_wealth(*c, omega_min, x0)));
  }
  if (!(hi > lo)) hi = lo + std::max(lo, 1e-12);
  return linspace(lo, hi, points);
}

double smallest_omega(const std::vector<double>& omegas) {
  if (omegas.empty()) throw std::invalid_argument("backtest: omega list is empty");
  return *std::min_element(omegas.begin(), omegas.end());
}

}  // namespace

// ---------------------------------------------------------------------------
// Study

std::string_view to_string(StudyParameter p) noexcept {
  switch (p) {
    case StudyParameter::kPhi:
      return "phi";
    case StudyParameter::kMu:
      return "mu";
    case StudyParameter::kSigma2:
      return "sigma2";
  }
  return "phi";
}

StudyConfig study_preset(int table) {
  StudyConfig c;
  switch (table) {
    case 1:
      c.parameter = StudyParameter::kPhi;
      c.mu = 0.01;
      c.sigma2 = 0.2;
      for (int i = -9; i <= 9; ++i) c.grid.push_back(i / 10.0);
      break;
    case 2:
      c.parameter = StudyParameter::kMu;
      c.phi = 0.1;
      c.sigma2 = 1.0;
      c.grid = {-0.5, -0.4, -0.3, -0.2, -0.1, -0.05, -0.03, -0.01, 0.0,
                0.01, 0.03, 0.05, 0.1,  0.2,  0.3,   0.4,   0.5};
      break;
    case 3:
      c.parameter = StudyParameter::kSigma2;
      c.mu = 0.01;
      c.phi = 0.1;
      c.grid = {0.05, 0.1, 0.15, 0.2, 0.25};
      break;
    default:
      throw std::invalid_argument("study table must be 1, 2 or 3");
  }
  return c;
}

ReplicateOutcome study_replicate(const StudyConfig& cfg, double mu, double phi, double sigma2, std::size_t k) {
  ReplicateOutcome out;
  const int T = cfg.horizon;
  const ArModel truth(mu, {phi}, sigma2, Stationarity::kFlag);
  const auto path = simulate_path(truth, cfg.est_len + static_cast<std::size_t>(T), stream_seed(cfg.seed, k));
  const std::span<const double> all(path);
  const auto est = all.first(cfg.est_len);
  const auto upd = all.subspan(cfg.est_len, static_cast<std::size_t>(T));
  const ExitDistribution exit = ExitDistribution::parse(cfg.exit, T);
  const std::vector<double> r0(static_cast<std::size_t>(T), 1.0 + cfg.riskfree_net);

  try {
    const ArFit fit = fit_ols(est, 1);
    const std::vector<double> origin{est.back()};
    const auto fixed = planning_moments(scalar_predictives(forecast_moments(truth, origin, T)), r0, 1.0);
    const FilterRun run = filter_series(init_filter(truth, fit.c0, origin), upd);
    const auto updated = planning_moments(run.predictive, r0, 1.0);

    std::vector<ExcessMoment> realized;
    for (int t = 0; t < T; ++t) {
      const double lag = t == 0 ? est.back() : upd[static_cast<std::size_t>(t - 1)];
      realized.push_back(excess_moments(truth.intercept() + phi * lag + 1.0, sigma2, r0[static_cast<std::size_t>(t)]));
    }

    const DpCoefficients cf = dp_coefficients(std::span<const ExcessMoment>(fixed), exit);
    const DpCoefficients cu = dp_coefficients(std::span<const ExcessMoment>(updated), exit);
    const FamilyMoments ff = evaluate_policy_family(policy_shape(cf, fixed), realized, exit, cfg.x0);
    const FamilyMoments fu = evaluate_policy_family(policy_shape(cu, updated), realized, exit, cfg.x0);

    out.reference_variance = cfg.vref_multiplier * std::max(ff.min_variance(), fu.min_variance());
    out.expected_fixed = ff.expectation_at_variance(out.reference_variance);
    out.expected_updated = fu.expectation_at_variance(out.reference_variance);
    out.feasible = true;
    out.win = out.expected_updated > out.expected_fixed;
  } catch (const Error&) {
    out.feasible = false;
  }
  return out;
}

WinTable parameter_study(const StudyConfig& cfg) {
  if (cfg.samples < 1) throw std::invalid_argument("parameter_study: samples must be >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("parameter_study: horizon must be >= 1");
  if (cfg.grid.empty()) throw std::invalid_argument("parameter_study: empty grid");
  ExitDistribution::parse(cfg.exit, cfg.horizon);

  WinTable table;
  table.parameter = cfg.parameter;
  for (double value : cfg.grid) {
    double mu = cfg.mu, phi = cfg.phi, sigma2 = cfg.sigma2;
    switch (cfg.parameter) {
      case StudyParameter::kPhi:
        phi = value;
        break;
      case StudyParameter::kMu:
        mu = value;
        break;
      case StudyParameter::kSigma2:
        sigma2 = value;
        break;
    }
    std::vector<ReplicateOutcome> outcomes(cfg.samples);
    parallel_for(cfg.samples, [&](std::size_t k) { outcomes[k] = study_replicate(cfg, mu, phi, sigma2, k); });

    WinRow row;
    row.value = value;
    row.samples = cfg.samples;
    row.stationary = ArModel(mu, {phi}, sigma2, Stationarity::kFlag).stationary();
    for (const auto& o : outcomes) {
      if (!o.feasible) ++row.skipped;
      if (o.win) ++row.wins;
    }
    row.win_probability = static_cast<double>(row.wins) / static_cast<double>(row.samples);
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Backtest

PlanningInputs planning_inputs(const Eigen::MatrixXd& returns, const BacktestConfig& cfg) {
  RoutedInputs r = routed_inputs(returns, cfg);
  fill_plans(r, cfg.horizon);
  return r.inputs;
}

BacktestResult backtest(const Eigen::MatrixXd& returns, const BacktestConfig& cfg) {
  RoutedInputs r = routed_inputs(returns, cfg);
  fill_plans(r, cfg.horizon);
  const ExitDistribution exit = ExitDistribution::parse(cfg.exit, cfg.horizon);
  const double offset = gross_offset(cfg.convention);
  const double rf = 1.0 + cfg.riskfree_net;

  const DpCoefficients cu = plan_coefficients(r.inputs.updated, r.vector_route, rf, offset, exit);
  const DpCoefficients cn = plan_coefficients(r.inputs.nonupdated, r.vector_route, rf, offset, exit);

  BacktestResult out;
  out.order = r.inputs.order;
  out.stationary = r.inputs.stationary;
  out.variance = shared_grid({&cu, &cn}, cfg.x0, smallest_omega(cfg.omega), cfg.grid_points);
  out.updated = evaluate_curve(cu, cfg.x0, out.variance);
  out.nonupdated = evaluate_curve(cn, cfg.x0, out.variance);
  return out;
}

ExitStudyResult exit_time_study(const Eigen::MatrixXd& returns, const BacktestConfig& base,
                                const std::vector<ExitDistribution>& exits, const std::vector<std::string>& labels) {
  if (exits.empty()) throw std::invalid_argument("exit_time_study: no exit distributions");
  if (!labels.empty() && labels.size() != exits.size()) {
    throw std::invalid_argument("exit_time_study: one label per distribution required");
  }
  RoutedInputs r = routed_inputs(returns, base);
  const double offset = gross_offset(base.convention);
  const double rf = 1.0 + base.riskfree_net;

  std::vector<DpCoefficients> cu, cn;
  for (const auto& exit : exits) {
    fill_plans(r, exit.horizon());
    cu.push_back(plan_coefficients(r.inputs.updated, r.vector_route, rf, offset, exit));
    cn.push_back(plan_coefficients(r.inputs.nonupdated, r.vector_route, rf, offset, exit));
  }
  std::vector<const DpCoefficients*> all;
  for (std::size_t i = 0; i < exits.size(); ++i) {
    all.push_back(&cu[i]);
    all.push_back(&cn[i]);
  }

  ExitStudyResult out;
  out.variance = shared_grid(all, base.x0, smallest_omega(base.omega), base.grid_points);
  for (std::size_t i = 0; i < exits.size(); ++i) {
    out.labels.push_back(labels.empty() ? "exit_" + std::to_string(i + 1) : labels[i]);
    out.updated.push_back(evaluate_curve(cu[i], base.x0, out.variance));
    out.nonupdated.push_back(evaluate_curve(cn[i], base.x0, out.variance));
  }
  return out;
}

std::vector<ExitDistribution> spread_distributions() {
  std::vector<double> p1(26, 0.001);
  p1[25] = 0.975;
  std::vector<double> p2(26, 0.001);
  p2[24] = 0.3;
  p2[25] = 0.676;
  std::vector<double> p3(26, 0.001);
  for (int t = 15; t < 25; ++t) p3[static_cast<std::size_t>(t)] = 0.05;
  p3[25] = 0.485;
  return {ExitDistribution(p1), ExitDistribution(p2), ExitDistribution(p3)};
}

// ---------------------------------------------------------------------------
// Credible intervals

CredibleResult credible_intervals(const ArModel& model, std::span<const double> lags, const CredibleConfig& cfg) {
  if (cfg.omegas.empty()) throw std::invalid_argument("credible_intervals: empty omega grid");
  for (double w : cfg.omegas) {
    if (!(w > 0.0)) throw std::invalid_argument("credible_intervals: omega must be > 0");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("credible_intervals: alpha must lie in (0, 1)");
  if (cfg.n_sims < 1) throw std::invalid_argument("credible_intervals: n_sims must be >= 1");
  const int p = model.order();
  if (lags.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("credible_intervals: expected " + std::to_string(p) + " lags");
  }
  const int T = cfg.horizon;
  const ExitDistribution exit = ExitDistribution::parse(cfg.exit, T);
  const double offset = gross_offset(cfg.convention);
  const double rf = 1.0 + cfg.riskfree_net;
  const Eigen::VectorXd m0 = model.regression_coefficients();
  const std::vector<double> init(lags.begin(), lags.end());

  std::vector<std::optional<DpCoefficients>> coeffs(cfg.n_sims);
  parallel_for(cfg.n_sims, [&](std::size_t k) {
    const auto path = simulate_path(model, static_cast<std::size_t>(T), stream_seed(cfg.seed, k),
                                    std::span<const double>(init));
    std::vector<double> hist = init;
    std::vector<ExcessMoment> moments;
    moments.reserve(static_cast<std::size_t>(T));
    Eigen::VectorXd f_row(p + 1);
    for (int t = 0; t < T; ++t) {
      f_row(0) = 1.0;
      for (int j = 1; j <= p; ++j) f_row(j) = hist[static_cast<std::size_t>(p - j)];
      const double mean = m0.dot(f_row) + offset - rf;
      moments.push_back({mean, mean * mean + model.sigma2(), rf});
      std::rotate(hist.begin(), hist.begin() + 1, hist.end());
      hist.back() = path[static_cast<std::size_t>(t)];
    }
    try {
      coeffs[k] = dp_coefficients(std::span<const ExcessMoment>(moments), exit);
    } catch (const InfeasibleError&) {
      coeffs[k].reset();
    }
  });

  CredibleResult out;
  out.n_sims = cfg.n_sims;
  for (const auto& c : coeffs) {
    if (!c) ++out.excluded;
  }
  if (static_cast<double>(out.excluded) > cfg.max_excluded_fraction * static_cast<double>(cfg.n_sims)) {
    throw InfeasibleError(std::to_string(out.excluded) + " of " + std::to_string(cfg.n_sims) +
                          " simulated paths have Theta outside (0, 1): degenerate risky asset or horizon");
  }

  for (double omega : cfg.omegas) {
    CredibleRow row;
    row.omega = omega;
    std::vector<double> variances;
    for (const auto& c : coeffs) {
      if (!c) continue;
      const double e0 = expected_terminal_wealth(*c, omega, cfg.x0);
      row.returns.push_back(e0 / cfg.x0);
      variances.push_back(frontier_variance(*c, cfg.x0, e0));
    }
    row.expected_return = sample_stats(row.returns).mean;
    row.lower = empirical_quantile(row.returns, cfg.alpha / 2.0);
    row.upper = empirical_quantile(row.returns, 1.0 - cfg.alpha / 2.0);
    row.implied_variance = sample_stats(variances).mean;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace mvbayes
