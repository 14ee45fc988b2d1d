// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/errors.hpp"
#include "mvbayes/experiments.hpp"
#include "mvbayes/mv_optimizer.hpp"
#include "mvbayes/numeric.hpp"
#include "mvbayes/returns_model.hpp"

using namespace mvbayes;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// 1. Sequential filter equals the batch conjugate posterior.

Verdict filter_batch() {
  const ArModel truth(0.01, {0.35, -0.2}, 0.04);
  const std::vector<double> y = simulate_path(truth, 202, 2024);

  Eigen::MatrixXd c0(3, 3);
  c0 << 0.5, 0.05, -0.02, 0.05, 0.3, 0.01, -0.02, 0.01, 0.25;
  const FilterState start = init_filter(truth, c0, std::span<const double>(y).first(2));
  const FilterRun run = filter_series(start, std::span<const double>(y).subspan(2));

  const Eigen::Index n = 200;
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    x(t, 0) = 1.0;
    x(t, 1) = y[static_cast<std::size_t>(t) + 1];
    x(t, 2) = y[static_cast<std::size_t>(t)];
    target(t) = y[static_cast<std::size_t>(t) + 2];
  }
  const double s2 = truth.sigma2();
  const Eigen::MatrixXd c0_inv = c0.inverse();
  const Eigen::MatrixXd c_batch = (c0_inv + x.transpose() * x / s2).inverse();
  const Eigen::VectorXd m_batch = c_batch * (c0_inv * truth.regression_coefficients() + x.transpose() * target / s2);

  const double dm = max_abs(run.final_state.m - m_batch);
  const double dc = max_abs(run.final_state.c - c_batch);
  return {dm < 1e-9 && dc < 1e-9, fmt("max|dm|=%.2e max|dC|=%.2e", dm, dc)};
}

// ---------------------------------------------------------------------------
// 2. Analytic policy against exhaustive grid search on a two-period instance.

struct TwoPeriod {
  double r0 = 1.05;
  double up = 0.25;
  double down = -0.15;
  double p_up = 0.5;
  double exit1 = 0.5;
  double omega = 1.0;
  double x0 = 1.0;

  // E - omega Var of x at exit, with u1 depending on the first-period outcome.
  double objective(double u0, double u1_up, double u1_down) const {
    const double e[2] = {up, down};
    const double pe[2] = {p_up, 1.0 - p_up};
    const double u1[2] = {u1_up, u1_down};
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double x1 = r0 * x0 + e[i] * u0;
      for (int j = 0; j < 2; ++j) {
        const double x2 = r0 * x1 + e[j] * u1[i];
        const double w1 = pe[i] * pe[j] * exit1;
        const double w2 = pe[i] * pe[j] * (1.0 - exit1);
        m1 += w1 * x1 + w2 * x2;
        m2 += w1 * x1 * x1 + w2 * x2 * x2;
      }
    }
    return m1 - omega * (m2 - m1 * m1);
  }
};

Verdict dp_brute_force() {
  const TwoPeriod inst;
  const double mean = inst.p_up * inst.up + (1 - inst.p_up) * inst.down;
  const double second = inst.p_up * inst.up * inst.up + (1 - inst.p_up) * inst.down * inst.down;
  const std::vector<ExcessMoment> moments(2, ExcessMoment{mean, second, inst.r0});
  const ExitDistribution exit({inst.exit1, 1.0 - inst.exit1});
  const DpCoefficients coeffs = dp_coefficients(moments, exit);
  const Policy policy = optimal_policy(coeffs, moments, inst.omega, inst.x0);

  const double u0 = policy.allocation(0, inst.x0);
  const double u1_up = policy.allocation(1, inst.r0 * inst.x0 + inst.up * u0);
  const double u1_down = policy.allocation(1, inst.r0 * inst.x0 + inst.down * u0);
  const double analytic = inst.objective(u0, u1_up, u1_down);

  constexpr int kPoints = 2001;
  constexpr double kLo = -5.0;
  constexpr double kHi = 5.0;
  const double h = (kHi - kLo) / (kPoints - 1);
  auto grid = [&](int i) { return kLo + h * i; };

  // For fixed (u0, u1_up) the objective is a concave quadratic in u1_down,
  // so the best grid value sits at one of the two grid points around its vertex.
  std::vector<double> best_val(kPoints, -std::numeric_limits<double>::infinity());
  std::vector<int> best_j(kPoints, 0), best_k(kPoints, 0);
  parallel_for(kPoints, [&](std::size_t i) {
    const double a = grid(static_cast<int>(i));
    for (int j = 0; j < kPoints; ++j) {
      const double b = grid(j);
      const double f0 = inst.objective(a, b, 0.0);
      const double fp = inst.objective(a, b, 1.0);
      const double fm = inst.objective(a, b, -1.0);
      const double curv = 0.5 * (fp + fm) - f0;
      const double slope = 0.5 * (fp - fm);
      const double vertex = curv < 0 ? -slope / (2 * curv) : kHi;
      const int lo = std::clamp(static_cast<int>(std::floor((vertex - kLo) / h)), 0, kPoints - 1);
      for (int k : {lo, std::min(lo + 1, kPoints - 1)}) {
        const double v = inst.objective(a, b, grid(k));
        if (v > best_val[i]) {
          best_val[i] = v;
          best_j[i] = j;
          best_k[i] = k;
        }
      }
    }
  });
  const auto it = std::max_element(best_val.begin(), best_val.end());
  const int bi = static_cast<int>(it - best_val.begin());
  const int bj = best_j[static_cast<std::size_t>(bi)];
  const int bk = best_k[static_cast<std::size_t>(bi)];
  const double grid_best = *it;

  double spread = 0.0;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        const int i = std::clamp(bi + di, 0, kPoints - 1);
        const int j = std::clamp(bj + dj, 0, kPoints - 1);
        const int k = std::clamp(bk + dk, 0, kPoints - 1);
        spread = std::max(spread, std::abs(grid_best - inst.objective(grid(i), grid(j), grid(k))));
      }
    }
  }
  const double gap = std::abs(analytic - grid_best);
  const bool not_worse = analytic >= grid_best - 1e-12;
  return {gap <= spread && not_worse,
          fmt("analytic J=%.12f grid J=%.12f gap=%.2e cell spread=%.2e u*=(%.4f, %.4f, %.4f)", analytic,
              grid_best, gap, spread, u0, u1_up, u1_down)};
}

// ---------------------------------------------------------------------------
// 3. Monte-Carlo wealth of the optimal policy lies on the corrected frontier.

Verdict frontier_monte_carlo() {
  const ArModel model(0.00207, {-0.13366}, 0.00085);
  const double r0 = 1.0057;
  const int horizon = 4;
  const double omega = 15.0;
  const double x0 = 1.0;
  const double lag = model.mu();
  const auto fm = forecast_moments(model, std::span<const double>(&lag, 1), horizon);
  std::vector<ExcessMoment> moments;
  for (const auto& m : fm) moments.push_back(excess_moments(m.mean + 1.0, m.variance, r0));
  const ExitDistribution exit = ExitDistribution::uniform(horizon);
  const DpCoefficients coeffs = dp_coefficients(moments, exit);
  const Policy policy = optimal_policy(coeffs, moments, omega, x0);

  const double e0 = expected_terminal_wealth(coeffs, omega, x0);
  const double v_corr = frontier_variance(coeffs, x0, e0);
  const double v_lit = frontier_variance(coeffs, x0, e0, FrontierForm::kLiteral);
  const WealthSample s = simulate_policy(policy, gaussian_sampler(moments), exit, 100000, 7);

  const double z_mean = (s.mean - e0) / s.mean_std_error;
  const double z_corr = (s.variance - v_corr) / s.variance_std_error;
  const double z_lit = (s.variance - v_lit) / s.variance_std_error;
  const bool pass = std::abs(z_mean) <= 3 && std::abs(z_corr) <= 3 && std::abs(z_lit) > 3;
  return {pass, fmt("E=%.6f (z=%.2f) Var=%.4e corrected=%.4e (z=%.2f) literal=%.4e (z=%.1f)", s.mean, z_mean,
                    s.variance, v_corr, z_corr, v_lit, z_lit)};
}

// ---------------------------------------------------------------------------
// Random feasible instances shared by criteria 4 and 5.

struct Instance {
  std::vector<ExcessMoment> moments;
  ExitDistribution exit;
  double omega;
  double x0;
};

Instance random_instance(std::mt19937_64& rng, bool certain_exit) {
  std::uniform_int_distribution<int> horizon_d(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const int horizon = horizon_d(rng);
  std::vector<ExcessMoment> moments;
  for (int t = 0; t < horizon; ++t) {
    const double mean = 0.02 * z(rng);
    const double var = 0.0005 + 0.01 * u(rng);
    moments.push_back({mean, var + mean * mean, 1.0 + 0.01 * u(rng)});
  }
  std::vector<double> p(static_cast<std::size_t>(horizon));
  if (certain_exit) {
    p.back() = 1.0;
  } else {
    for (auto& v : p) v = -std::log(1.0 - u(rng));
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
  }
  return {std::move(moments), ExitDistribution(std::move(p)), 0.2 + 4.8 * u(rng), 0.5 + 1.5 * u(rng)};
}

// 4. Embedding identities.

Verdict embedding_identities() {
  std::mt19937_64 rng(4);
  int solved = 0;
  int attempts = 0;
  double worst_lambda = 0.0;
  double worst_policy = 0.0;
  while (solved < 100 && attempts < 10000) {
    ++attempts;
    const Instance inst = random_instance(rng, false);
    DpCoefficients coeffs;
    try {
      coeffs = dp_coefficients(inst.moments, inst.exit);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++solved;
    const double ls = lambda_star(coeffs, inst.omega, inst.x0);
    const double e0 = expected_terminal_wealth(coeffs, inst.omega, inst.x0);
    worst_lambda = std::max(worst_lambda, std::abs(ls - (1.0 + 2.0 * inst.omega * e0)));
    const Policy opt = optimal_policy(coeffs, inst.moments, inst.omega, inst.x0);
    const Policy aux = auxiliary_policy(coeffs, inst.moments, ls, inst.omega, inst.x0);
    for (int t = 0; t < opt.horizon(); ++t) {
      const auto ti = static_cast<std::size_t>(t);
      worst_policy = std::max({worst_policy, std::abs(opt.a[ti] - aux.a[ti]), std::abs(opt.b[ti] - aux.b[ti])});
    }
  }
  return {solved == 100 && worst_lambda <= 1e-12 && worst_policy <= 1e-12,
          fmt("%d instances, max|lambda* - (1 + 2 omega E0)|=%.2e, max policy gap=%.2e", solved, worst_lambda,
              worst_policy)};
}

// 5. Certain exit reduces to the fixed-horizon recursion.

Verdict certain_exit() {
  std::mt19937_64 rng(5);
  int compared = 0;
  double worst = 0.0;
  bool bitwise = true;
  for (int i = 0; i < 200; ++i) {
    const Instance inst = random_instance(rng, true);
    const DpCoefficients fixed = certain_horizon_coefficients(inst.moments);
    DpCoefficients general;
    try {
      general = dp_coefficients(inst.moments, inst.exit);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++compared;
    auto cmp = [&](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() != b.size()) {
        bitwise = false;
        worst = std::numeric_limits<double>::infinity();
        return;
      }
      for (std::size_t k = 0; k < a.size(); ++k) {
        bitwise = bitwise && a[k] == b[k];
        worst = std::max(worst, std::abs(a[k] - b[k]));
      }
    };
    cmp(general.dp_omega, fixed.dp_omega);
    cmp(general.dp_lambda, fixed.dp_lambda);
    cmp(general.theta, fixed.theta);
    cmp({general.big_theta}, {fixed.big_theta});
  }
  return {compared > 0 && worst <= 1e-14,
          fmt("%d instances, max diff=%.2e, bitwise equal: %s", compared, worst, bitwise ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 6-7. Win-probability studies.

double cell(const WinTable& table, double value) {
  for (const auto& row : table.rows) {
    if (std::abs(row.value - value) < 1e-12) return row.win_probability;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Verdict table1_pattern() {
  StudyConfig cfg = study_preset(1);
  cfg.seed = 42;
  cfg.samples = 100;
  const WinTable table = parameter_study(cfg);
  bool high = true;
  for (double phi : {-0.2, 0.1, 0.2}) high = high && cell(table, phi) >= 0.9;
  bool low = true;
  for (double phi : {-0.9, 0.9}) low = low && cell(table, phi) <= 0.2;
  double plateau = 0.0;
  for (const auto& row : table.rows) {
    if (std::abs(row.value) <= 0.3 + 1e-12) plateau = std::max(plateau, row.win_probability);
  }
  const bool dip = cell(table, 0.0) <= plateau - 0.3;
  return {high && low && dip,
          fmt("P(-0.2, 0.1, 0.2)=(%.2f, %.2f, %.2f) [>=0.9: %s]; P(-0.9, 0.9)=(%.2f, %.2f) [<=0.2: %s]; "
              "P(0)=%.2f vs plateau %.2f [dip: %s]",
              cell(table, -0.2), cell(table, 0.1), cell(table, 0.2), high ? "ok" : "no", cell(table, -0.9),
              cell(table, 0.9), low ? "ok" : "no", cell(table, 0.0), plateau, dip ? "ok" : "no")};
}

Verdict table3_monotone() {
  StudyConfig cfg = study_preset(3);
  cfg.seed = 42;
  cfg.samples = 100;
  const WinTable table = parameter_study(cfg);
  int inversions = 0;
  double worst = 0.0;
  std::string values;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    values += fmt("%s%.2f", i ? ", " : "", table.rows[i].win_probability);
    if (i == 0) continue;
    const double drop = table.rows[i - 1].win_probability - table.rows[i].win_probability;
    if (drop > 0) {
      ++inversions;
      worst = std::max(worst, drop);
    }
  }
  return {inversions == 0 || (inversions == 1 && worst <= 0.05),
          fmt("P over sigma2 grid = (%s), inversions=%d", values.c_str(), inversions)};
}

// ---------------------------------------------------------------------------
// 8. Credible-interval width falls with risk aversion.

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

Verdict credible_monotone() {
  const ArModel model(0.00207, {-0.13366}, 0.00085);
  CredibleConfig cfg;
  cfg.omegas = {0.25, 0.5, 1.0, 2.0, 3.0};
  cfg.n_sims = 1000;
  cfg.seed = 42;
  const double lag = model.mu();
  const CredibleResult res = credible_intervals(model, std::span<const double>(&lag, 1), cfg);
  std::vector<double> omegas, widths;
  std::string text;
  for (const auto& row : res.rows) {
    omegas.push_back(row.omega);
    widths.push_back(row.upper - row.lower);
    text += fmt("%s%.4g", text.empty() ? "" : ", ", row.upper - row.lower);
  }
  const double rho = spearman(omegas, widths);
  return {rho < 0, fmt("widths=(%s), excluded=%zu, Spearman rho=%.3f", text.c_str(), res.excluded, rho)};
}

// ---------------------------------------------------------------------------
// 9. The n = 1 vector pipeline equals the scalar pipeline.

Verdict scalar_vector() {
  const ArModel truth(0.002, {-0.13, 0.05}, 0.0009);
  const std::vector<double> path = simulate_path(truth, 160, 9);
  Eigen::MatrixXd series(static_cast<Eigen::Index>(path.size()), 1);
  for (std::size_t i = 0; i < path.size(); ++i) series(static_cast<Eigen::Index>(i), 0) = path[i];
  const std::span<const double> est(path.data(), 130);
  const Eigen::MatrixXd est_m = series.topRows(130);

  double worst = 0.0;
  std::string stage = "fit";
  std::string worst_stage;
  auto note = [&](double d) {
    if (d > worst) {
      worst = d;
      worst_stage = stage;
    }
  };
  auto track = [&](double a, double b) { note(std::abs(a - b)); };
  auto track_m = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    note(a.rows() != b.rows() || a.cols() != b.cols() ? std::numeric_limits<double>::infinity() : max_abs(a - b));
  };

  stage = "AIC";
  const OrderSelection sa = select_order(est, 4);
  const OrderSelection sv = select_order(est_m, 4);
  for (std::size_t i = 0; i < sa.aic.size(); ++i) track(sa.aic[i], sv.aic[i]);
  track(sa.order, sv.order);

  stage = "fit";
  const ArFit fa = fit_ols(est, 2);
  const VarFit fv = fit_ols(est_m, 2);
  track_m(fa.theta, fv.pi);
  track_m(fa.c0, fv.c0);
  track(fa.model.sigma2(), fv.model.sigma()(0, 0));
  track(fa.model.mu(), fv.model.mu()(0));

  stage = "forecast";
  const auto ma = forecast_moments(fa.model, est.last(2), 26);
  const auto mv = forecast_moments(fv.model, est_m.bottomRows(2), 26);
  for (std::size_t h = 0; h < ma.size(); ++h) {
    track(ma[h].mean, mv[h].mean(0));
    track(ma[h].variance, mv[h].cov(0, 0));
  }

  stage = "filter";
  const FilterState a0 = init_filter(fa.model, fa.c0, est.last(2));
  const FilterState v0 = init_filter(fv.model, fv.c0, est_m.bottomRows(2));
  const FilterRun ra = filter_series(a0, std::span<const double>(path).subspan(130, 26));
  const FilterRun rv = filter_series(v0, series.middleRows(130, 26));
  for (std::size_t k = 0; k < ra.predictive.size(); ++k) {
    track_m(ra.predictive[k].f, rv.predictive[k].f);
    track_m(ra.predictive[k].q, rv.predictive[k].q);
    track_m(ra.posterior[k], rv.posterior[k]);
  }
  track_m(ra.final_state.c, rv.final_state.c);

  stage = "planning moments";
  const auto pa = forecast_from_state(ra.final_state, 26);
  const auto pv = forecast_from_state(rv.final_state, 26);
  const std::vector<double> r0(26, 1.0057);
  const auto ea = planning_moments(pa, r0, 1.0);
  const auto ev = planning_moments_vector(pv, r0, 1.0);
  for (std::size_t t = 0; t < ea.size(); ++t) {
    track(ea[t].mean, ev[t].mean(0));
    track(ea[t].second, ev[t].second(0, 0));
  }
  const ExitDistribution exit = ExitDistribution::uniform_tail(26, 0.001);
  stage = "DP";
  const DpCoefficients da = dp_coefficients(ea, exit);
  const DpCoefficients dv = dp_coefficients(ev, exit);
  for (std::size_t t = 0; t < da.dp_omega.size(); ++t) {
    track(da.dp_omega[t], dv.dp_omega[t]);
    track(da.dp_lambda[t], dv.dp_lambda[t]);
  }
  for (std::size_t t = 0; t < da.theta.size(); ++t) track(da.theta[t], dv.theta[t]);
  track(da.big_theta, dv.big_theta);
  stage = "policy";
  const Policy qa = optimal_policy(da, ea, 1.0, 1.0);
  const VectorPolicy qv = optimal_policy(dv, ev, 1.0, 1.0);
  for (std::size_t t = 0; t < qa.a.size(); ++t) {
    track(qa.a[t], qv.a[t](0));
    track(qa.b[t], qv.b[t](0));
  }
  track(expected_terminal_wealth(da, 1.0, 1.0), expected_terminal_wealth(dv, 1.0, 1.0));

  stage = "backtest";
  BacktestConfig bc;
  bc.order = 2;
  const BacktestResult ba = backtest(series, bc);
  bc.force_vector = true;
  const BacktestResult bv = backtest(series, bc);
  for (std::size_t i = 0; i < ba.variance.size(); ++i) {
    track(ba.variance[i], bv.variance[i]);
    track(ba.updated.expected_wealth[i], bv.updated.expected_wealth[i]);
    track(ba.nonupdated.expected_wealth[i], bv.nonupdated.expected_wealth[i]);
  }
  return {worst <= 1e-12, fmt("max deviation over AIC, fit, forecasts, filter, DP, policy and backtest = %.2e (at %s)",
                              worst, worst_stage.c_str())};
}

// ---------------------------------------------------------------------------
// 10. Covariance stays PSD and symmetric under many random updates.

Verdict psd_robustness() {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> assets_d(1, 3);
  std::uniform_int_distribution<int> order_d(1, 3);
  double worst_eig = 0.0;
  double worst_asym = 0.0;
  int updates = 0;
  while (updates < 10000) {
    const int n = assets_d(rng);
    const int p = order_d(rng);
    const int k = n * p + 1;
    const int dim = n * k;
    // Rank-deficient prior half of the time, wide scale range.
    const int rank = (z(rng) > 0) ? dim : std::max(1, dim / 2);
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(dim, rank, [&] { return z(rng); });
    const Eigen::MatrixXd c0 = g * g.transpose() * std::pow(10.0, std::uniform_real_distribution<double>(-4.0, 2.0)(rng));
    Eigen::MatrixXd l = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return z(rng); });
    const Eigen::MatrixXd sigma = l * l.transpose() * 1e-3 + 1e-6 * Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::MatrixXd> phi(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(n, n));
    const VarModel model(Eigen::VectorXd::Constant(n, 0.001), phi, sigma);
    const Eigen::MatrixXd lags = Eigen::MatrixXd::NullaryExpr(p, n, [&] { return 0.05 * z(rng); });
    FilterState state = init_filter(model, c0, lags);
    for (int step = 0; step < 100 && updates < 10000; ++step, ++updates) {
      const Eigen::VectorXd obs = Eigen::VectorXd::NullaryExpr(n, [&] { return 0.05 * z(rng) * (1 + 10 * std::abs(z(rng))); });
      state = update(state, obs);
      worst_asym = std::max(worst_asym, max_abs(state.c - state.c.transpose()));
      worst_eig = std::min(worst_eig, min_eigenvalue(symmetrize(state.c)));
    }
  }
  return {worst_eig >= -1e-8 && worst_asym <= 1e-12,
          fmt("%d updates, min eigenvalue=%.2e, max asymmetry=%.2e", updates, worst_eig, worst_asym)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Verdict()> run;
    double budget_s;
  };
  const std::vector<Entry> entries{
      {1, "filter-batch equivalence", filter_batch, 1},
      {2, "DP brute-force oracle", dp_brute_force, 30},
      {3, "frontier Monte-Carlo consistency", frontier_monte_carlo, 60},
      {4, "embedding identities", embedding_identities, 0},
      {5, "certain-exit reduction", certain_exit, 0},
      {6, "phi-table pattern", table1_pattern, 600},
      {7, "sigma2-table monotonicity", table3_monotone, 0},
      {8, "credible-interval monotonicity", credible_monotone, 300},
      {9, "scalar/vector coherence", scalar_vector, 0},
      {10, "PSD robustness", psd_robustness, 0},
  };
  int failed = 0;
  for (const auto& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = e.run();
    } catch (const std::exception& ex) {
      v = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = e.budget_s <= 0 || secs < e.budget_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s (%.2f s%s)\n", e.id, pass ? "PASS" : "FAIL", e.name, v.detail.c_str(),
                secs, in_time ? "" : ", over time budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(entries.size()) - failed, entries.size());
  return failed == 0 ? 0 : 1;
}
