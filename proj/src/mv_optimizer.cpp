#include "mvbayes/mv_optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mvbayes/errors.hpp"
#include "mvbayes/numeric.hpp"

namespace mvbayes {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw std::invalid_argument("exit spec '" + std::string(spec) + "': cannot parse number '" +
                                std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

void check_horizon(std::size_t moments, const ExitDistribution& exit) {
  if (moments == 0) throw std::invalid_argument("dp_coefficients: empty moment sequence");
  if (moments != static_cast<std::size_t>(exit.horizon())) {
    throw std::invalid_argument("dp_coefficients: " + std::to_string(moments) +
                                " periods of moments but exit distribution has horizon " +
                                std::to_string(exit.horizon()));
  }
}

void check_theta(double big_theta) {
  if (!(big_theta > 0.0 && big_theta < 1.0)) {
    throw InfeasibleError("Theta = " + std::to_string(big_theta) +
                          " lies outside (0, 1): degenerate risky asset or horizon");
  }
}

void check_risk_aversion(double risk_aversion) {
  if (!(risk_aversion > 0.0) || !std::isfinite(risk_aversion)) {
    throw std::invalid_argument("risk aversion must be finite and > 0");
  }
}

double ratio_or_zero(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double scalar_k(const ExcessMoment& e, int t) {
  if (!(e.second > 0.0)) {
    throw InfeasibleError("second moment of the excess return is zero at t = " + std::to_string(t));
  }
  return e.mean * (e.mean / e.second);
}

Eigen::LDLT<Eigen::MatrixXd> factor_second(const VectorExcessMoment& e, int t) {
  Eigen::LDLT<Eigen::MatrixXd> llt(e.second);
  if (llt.info() != Eigen::Success || !(llt.vectorD().minCoeff() > 0.0) || !(llt.rcond() > 1e-14)) {
    throw InfeasibleError("second-moment matrix E(e e') is singular at t = " + std::to_string(t) +
                          " (collinear assets?)");
  }
  return llt;
}

WealthSample summarize(std::vector<double> terminal) {
  WealthSample out;
  const SampleStats stats = sample_stats(terminal);
  out.mean = stats.mean;
  out.variance = stats.variance;
  const auto n = static_cast<double>(terminal.size());
  std::vector<double> fourth(terminal.size());
  for (std::size_t i = 0; i < terminal.size(); ++i) fourth[i] = std::pow(terminal[i] - stats.mean, 4);
  const double m4 = pairwise_sum(fourth) / n;
  out.mean_std_error = std::sqrt(stats.variance / n);
  out.variance_std_error = std::sqrt(std::max(m4 - stats.variance * stats.variance, 0.0) / n);
  out.terminal = std::move(terminal);
  return out;
}

int draw_exit(std::mt19937_64& rng, const ExitDistribution& exit) {
  const double u = std::generate_canonical<double, 53>(rng);
  double cum = 0.0;
  for (int t = 1; t <= exit.horizon(); ++t) {
    cum += exit.at(t);
    if (u < cum) return t;
  }
  return exit.horizon();
}

}  // namespace

// ---------------------------------------------------------------------------
// ExitDistribution

ExitDistribution::ExitDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("exit distribution needs horizon >= 1");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("exit probabilities must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument("exit probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ExitDistribution ExitDistribution::certain(int horizon) {
  if (horizon < 1) throw std::invalid_argument("exit distribution needs horizon >= 1");
  std::vector<double> p(static_cast<std::size_t>(horizon), 0.0);
  p.back() = 1.0;
  return ExitDistribution(std::move(p));
}

ExitDistribution ExitDistribution::uniform(int horizon) {
  if (horizon < 1) throw std::invalid_argument("exit distribution needs horizon >= 1");
  return ExitDistribution(std::vector<double>(static_cast<std::size_t>(horizon), 1.0 / horizon));
}

ExitDistribution ExitDistribution::uniform_tail(int horizon, double mass) {
  if (horizon < 1) throw std::invalid_argument("exit distribution needs horizon >= 1");
  if (!(mass >= 0.0) || mass * (horizon - 1) > 1.0) {
    throw std::invalid_argument("uniform_tail mass must lie in [0, 1/(T-1)]");
  }
  std::vector<double> p(static_cast<std::size_t>(horizon), mass);
  p.back() = 1.0 - mass * (horizon - 1);
  return ExitDistribution(std::move(p));
}

ExitDistribution ExitDistribution::parse(std::string_view spec, int horizon) {
  const std::string_view s = trim(spec);
  if (s == "certain") return certain(horizon);
  if (s == "uniform") return uniform(horizon);
  constexpr std::string_view kTail = "uniform_tail:";
  if (s.substr(0, kTail.size()) == kTail) {
    return uniform_tail(horizon, parse_number(trim(s.substr(kTail.size())), spec));
  }
  if (horizon < 1) throw std::invalid_argument("exit distribution needs horizon >= 1");
  std::vector<double> p(static_cast<std::size_t>(horizon), 0.0);
  std::string_view rest = s;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("exit spec '" + std::string(spec) + "': expected t:p, got '" +
                                  std::string(item) + "'");
    }
    const double t = parse_number(trim(item.substr(0, colon)), spec);
    const double prob = parse_number(trim(item.substr(colon + 1)), spec);
    if (t != std::floor(t) || t < 1 || t > horizon) {
      throw std::invalid_argument("exit spec '" + std::string(spec) + "': period " + std::string(item) +
                                  " outside 1.." + std::to_string(horizon));
    }
    p[static_cast<std::size_t>(t) - 1] += prob;
  }
  return ExitDistribution(std::move(p));
}

double ExitDistribution::at(int t) const {
  if (t == 0) return 0.0;
  if (t < 0 || t > horizon()) throw std::out_of_range("exit period out of range");
  return probs_[static_cast<std::size_t>(t) - 1];
}

// ---------------------------------------------------------------------------
// Excess moments

ExcessMoment excess_moments(double f, double q, double r0) {
  const double mean = f - r0;
  return {mean, q + mean * mean, r0};
}

VectorExcessMoment excess_moments(const Predictive& pred, double r0) {
  VectorExcessMoment out;
  out.mean = pred.f.array() - r0;
  out.second = symmetrize(pred.q + out.mean * out.mean.transpose());
  out.r0 = r0;
  return out;
}

std::vector<ExcessMoment> planning_moments(const std::vector<Predictive>& preds, std::span<const double> r0,
                                           double gross_offset) {
  if (preds.size() != r0.size()) throw std::invalid_argument("planning_moments: length mismatch");
  std::vector<ExcessMoment> out;
  out.reserve(preds.size());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (preds[t].f.size() != 1) throw std::invalid_argument("planning_moments: expected scalar predictives");
    out.push_back(excess_moments(preds[t].f(0) + gross_offset, preds[t].q(0, 0), r0[t]));
  }
  return out;
}

std::vector<VectorExcessMoment> planning_moments_vector(const std::vector<Predictive>& preds,
                                                        std::span<const double> r0, double gross_offset) {
  if (preds.size() != r0.size()) throw std::invalid_argument("planning_moments: length mismatch");
  std::vector<VectorExcessMoment> out;
  out.reserve(preds.size());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    Predictive gross{preds[t].f.array() + gross_offset, preds[t].q};
    out.push_back(excess_moments(gross, r0[t]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recursions

DpCoefficients dp_coefficients(std::span<const ExcessMoment> moments, const ExitDistribution& exit) {
  check_horizon(moments.size(), exit);
  const int T = exit.horizon();
  DpCoefficients c;
  c.dp_omega.assign(static_cast<std::size_t>(T) + 1, 0.0);
  c.dp_lambda.assign(static_cast<std::size_t>(T) + 1, 0.0);
  c.theta.assign(static_cast<std::size_t>(T), 0.0);
  c.k.assign(static_cast<std::size_t>(T), 0.0);
  c.dp_omega[T] = exit.at(T);
  c.dp_lambda[T] = exit.at(T);
  for (int t = T - 1; t >= 0; --t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    const double k = scalar_k(e, t);
    const double om = c.dp_omega[t + 1];
    const double la = c.dp_lambda[t + 1];
    c.k[t] = k;
    c.theta[t] = ratio_or_zero(la * la * k, om);
    c.dp_omega[t] = exit.at(t) + e.r0 * e.r0 * om * (1.0 - k);
    c.dp_lambda[t] = exit.at(t) + e.r0 * la * (1.0 - k);
  }
  for (int t = 0; t < T; ++t) c.big_theta += c.theta[t];
  check_theta(c.big_theta);
  return c;
}

DpCoefficients dp_coefficients(std::span<const VectorExcessMoment> moments, const ExitDistribution& exit) {
  check_horizon(moments.size(), exit);
  const int T = exit.horizon();
  DpCoefficients c;
  c.dp_omega.assign(static_cast<std::size_t>(T) + 1, 0.0);
  c.dp_lambda.assign(static_cast<std::size_t>(T) + 1, 0.0);
  c.theta.assign(static_cast<std::size_t>(T), 0.0);
  c.k.assign(static_cast<std::size_t>(T), 0.0);
  c.dp_omega[T] = exit.at(T);
  c.dp_lambda[T] = exit.at(T);
  for (int t = T - 1; t >= 0; --t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    const auto ldlt = factor_second(e, t);
    const double k = e.mean.dot(ldlt.solve(e.mean));
    const double om = c.dp_omega[t + 1];
    const double la = c.dp_lambda[t + 1];
    c.k[t] = k;
    c.theta[t] = ratio_or_zero(la * la * k, om);
    c.dp_omega[t] = exit.at(t) + e.r0 * e.r0 * om * (1.0 - k);
    c.dp_lambda[t] = exit.at(t) + e.r0 * la * (1.0 - k);
  }
  for (int t = 0; t < T; ++t) c.big_theta += c.theta[t];
  check_theta(c.big_theta);
  return c;
}

DpCoefficients certain_horizon_coefficients(std::span<const ExcessMoment> moments) {
  if (moments.empty()) throw std::invalid_argument("certain_horizon_coefficients: empty moment sequence");
  const int T = static_cast<int>(moments.size());
  DpCoefficients c;
  c.dp_omega.assign(static_cast<std::size_t>(T) + 1, 1.0);
  c.dp_lambda.assign(static_cast<std::size_t>(T) + 1, 1.0);
  c.theta.assign(static_cast<std::size_t>(T), 0.0);
  c.k.assign(static_cast<std::size_t>(T), 0.0);
  for (int t = T - 1; t >= 0; --t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    const double k = scalar_k(e, t);
    c.k[t] = k;
    c.theta[t] = ratio_or_zero(c.dp_lambda[t + 1] * c.dp_lambda[t + 1] * k, c.dp_omega[t + 1]);
    c.dp_omega[t] = e.r0 * e.r0 * c.dp_omega[t + 1] * (1.0 - k);
    c.dp_lambda[t] = e.r0 * c.dp_lambda[t + 1] * (1.0 - k);
  }
  for (int t = 0; t < T; ++t) c.big_theta += c.theta[t];
  return c;
}

double lambda_star(const DpCoefficients& coeffs, double risk_aversion, double x0) {
  check_risk_aversion(risk_aversion);
  if (!(coeffs.big_theta >= 0.0 && coeffs.big_theta < 1.0)) check_theta(coeffs.big_theta);
  return (1.0 + 2.0 * risk_aversion * coeffs.dp_lambda[0] * x0) / (1.0 - coeffs.big_theta);
}

double expected_terminal_wealth(const DpCoefficients& coeffs, double risk_aversion, double x0) {
  const double ls = lambda_star(coeffs, risk_aversion, x0);
  return coeffs.dp_lambda[0] * x0 + ls / (2.0 * risk_aversion) * coeffs.big_theta;
}

// ---------------------------------------------------------------------------
// Policies

double Policy::allocation(int t, double wealth) const {
  const auto i = static_cast<std::size_t>(t);
  return a[i] - b[i] * r0[i] * wealth;
}

Eigen::VectorXd VectorPolicy::allocation(int t, double wealth) const {
  const auto i = static_cast<std::size_t>(t);
  return a[i] - b[i] * (r0[i] * wealth);
}

Policy optimal_policy(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments, double risk_aversion,
                      double x0) {
  check_risk_aversion(risk_aversion);
  check_theta(coeffs.big_theta);
  const int T = coeffs.horizon();
  if (moments.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("optimal_policy: length mismatch");
  const double scale = (1.0 + 2.0 * risk_aversion * coeffs.dp_lambda[0] * x0) /
                       (2.0 * risk_aversion * (1.0 - coeffs.big_theta));
  Policy pol{{}, {}, {}, risk_aversion, x0};
  for (int t = 0; t < T; ++t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    pol.a.push_back(scale * ratio_or_zero(coeffs.dp_lambda[t + 1], coeffs.dp_omega[t + 1]) * (e.mean / e.second));
    pol.b.push_back(e.mean / e.second);
    pol.r0.push_back(e.r0);
  }
  return pol;
}

VectorPolicy optimal_policy(const DpCoefficients& coeffs, std::span<const VectorExcessMoment> moments,
                            double risk_aversion, double x0) {
  check_risk_aversion(risk_aversion);
  check_theta(coeffs.big_theta);
  const int T = coeffs.horizon();
  if (moments.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("optimal_policy: length mismatch");
  const double scale = (1.0 + 2.0 * risk_aversion * coeffs.dp_lambda[0] * x0) /
                       (2.0 * risk_aversion * (1.0 - coeffs.big_theta));
  VectorPolicy pol{{}, {}, {}, risk_aversion, x0};
  for (int t = 0; t < T; ++t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    const Eigen::VectorXd direction = factor_second(e, t).solve(e.mean);
    pol.a.push_back(scale * ratio_or_zero(coeffs.dp_lambda[t + 1], coeffs.dp_omega[t + 1]) * direction);
    pol.b.push_back(direction);
    pol.r0.push_back(e.r0);
  }
  return pol;
}

Policy auxiliary_policy(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments, double lambda,
                        double risk_aversion, double x0) {
  check_risk_aversion(risk_aversion);
  const int T = coeffs.horizon();
  if (moments.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("auxiliary_policy: length mismatch");
  Policy pol{{}, {}, {}, risk_aversion, x0};
  for (int t = 0; t < T; ++t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    // argmax_u of E f_{t+1}(r0 x + e u) with f_{t+1}(y) = -omega dp_omega y^2 + lambda dp_lambda y + const
    const double curvature = 2.0 * risk_aversion * coeffs.dp_omega[t + 1] * e.second;
    pol.a.push_back(ratio_or_zero(lambda * coeffs.dp_lambda[t + 1] * e.mean, curvature));
    pol.b.push_back(ratio_or_zero(2.0 * risk_aversion * coeffs.dp_omega[t + 1] * e.mean, curvature));
    pol.r0.push_back(e.r0);
  }
  return pol;
}

VectorPolicy auxiliary_policy(const DpCoefficients& coeffs, std::span<const VectorExcessMoment> moments,
                              double lambda, double risk_aversion, double x0) {
  check_risk_aversion(risk_aversion);
  const int T = coeffs.horizon();
  if (moments.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("auxiliary_policy: length mismatch");
  VectorPolicy pol{{}, {}, {}, risk_aversion, x0};
  for (int t = 0; t < T; ++t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    const double om = coeffs.dp_omega[t + 1];
    const Eigen::MatrixXd curvature = 2.0 * risk_aversion * om * e.second;
    if (om == 0.0) {
      pol.a.push_back(Eigen::VectorXd::Zero(e.mean.size()));
      pol.b.push_back(factor_second(e, t).solve(e.mean));
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(curvature);
      pol.a.push_back(llt.solve(lambda * coeffs.dp_lambda[t + 1] * e.mean));
      pol.b.push_back(llt.solve(2.0 * risk_aversion * om * e.mean));
    }
    pol.r0.push_back(e.r0);
  }
  return pol;
}

double AuxiliaryValue::value(int t, double wealth) const {
  const auto i = static_cast<std::size_t>(t);
  return quadratic[i] * wealth * wealth + linear[i] * wealth + constant[i];
}

AuxiliaryValue auxiliary_value(const DpCoefficients& coeffs, double lambda, double risk_aversion) {
  check_risk_aversion(risk_aversion);
  if (!(lambda > 0.0)) throw std::invalid_argument("auxiliary_value: lambda must be > 0");
  const int T = coeffs.horizon();
  AuxiliaryValue v;
  v.quadratic.resize(static_cast<std::size_t>(T) + 1);
  v.linear.resize(static_cast<std::size_t>(T) + 1);
  v.constant.assign(static_cast<std::size_t>(T) + 1, 0.0);
  const double scale = lambda * lambda / (4.0 * risk_aversion);
  for (int t = T; t >= 0; --t) {
    v.quadratic[t] = -risk_aversion * coeffs.dp_omega[t];
    v.linear[t] = lambda * coeffs.dp_lambda[t];
    if (t < T) v.constant[t] = v.constant[t + 1] + scale * coeffs.theta[t];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Frontier

double min_expected_wealth(const DpCoefficients& coeffs, double x0) {
  check_theta(coeffs.big_theta);
  return coeffs.dp_lambda[0] * x0 / (1.0 - coeffs.big_theta);
}

double min_variance(const DpCoefficients& coeffs, double x0, FrontierForm form) {
  check_theta(coeffs.big_theta);
  const double term = coeffs.dp_omega[0] - coeffs.dp_lambda[0] * coeffs.dp_lambda[0] / (1.0 - coeffs.big_theta);
  return (form == FrontierForm::kCorrected ? term : term * term) * x0 * x0;
}

double frontier_variance(const DpCoefficients& coeffs, double x0, double expected_wealth, FrontierForm form) {
  const double e_min = min_expected_wealth(coeffs, x0);
  if (expected_wealth < e_min) {
    throw InfeasibleError("target expected wealth " + std::to_string(expected_wealth) +
                          " is below the minimum attainable expectation " + std::to_string(e_min));
  }
  const double th = coeffs.big_theta;
  const double gap = expected_wealth - e_min;
  return (1.0 - th) / th * gap * gap + min_variance(coeffs, x0, form);
}

std::vector<FrontierPoint> frontier(const DpCoefficients& coeffs, double x0, std::span<const double> targets,
                                    FrontierForm form) {
  std::vector<FrontierPoint> out;
  out.reserve(targets.size());
  for (double e : targets) out.push_back({e, frontier_variance(coeffs, x0, e, form)});
  return out;
}

double expected_wealth_at_variance(const DpCoefficients& coeffs, double x0, double variance) {
  const double v_min = min_variance(coeffs, x0);
  if (variance < v_min) {
    throw InfeasibleError("variance " + std::to_string(variance) + " is below the frontier minimum " +
                          std::to_string(v_min));
  }
  const double th = coeffs.big_theta;
  return min_expected_wealth(coeffs, x0) + std::sqrt((variance - v_min) * th / (1.0 - th));
}

// ---------------------------------------------------------------------------
// Policy evaluation

double FamilyMoments::variance(double s) const noexcept {
  const double m = mean(s);
  return gamma + 2.0 * delta * s + eps * s * s - m * m;
}

double FamilyMoments::min_variance() const {
  const double c0 = gamma - alpha * alpha;
  const double c1 = delta - alpha * beta;
  const double c2 = eps - beta * beta;
  if (!(c2 > 0.0)) return c0;
  return c0 - c1 * c1 / c2;
}

double FamilyMoments::expectation_at_variance(double variance) const {
  const double c1 = delta - alpha * beta;
  const double c2 = eps - beta * beta;
  const double v_min = min_variance();
  if (variance < v_min) return -std::numeric_limits<double>::infinity();
  if (!(c2 > 0.0) || beta == 0.0) return alpha;
  const double s = -c1 / c2 + std::copysign(std::sqrt((variance - v_min) / c2), beta);
  return mean(s);
}

PolicyShape policy_shape(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments) {
  const int T = coeffs.horizon();
  if (moments.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("policy_shape: length mismatch");
  PolicyShape shape;
  for (int t = 0; t < T; ++t) {
    const auto& e = moments[static_cast<std::size_t>(t)];
    shape.g.push_back(ratio_or_zero(coeffs.dp_lambda[t + 1] * e.mean, coeffs.dp_omega[t + 1] * e.second));
    shape.b.push_back(e.mean / e.second);
    shape.r0.push_back(e.r0);
  }
  return shape;
}

FamilyMoments evaluate_policy_family(const PolicyShape& shape, std::span<const ExcessMoment> truth,
                                     const ExitDistribution& exit, double x0) {
  const std::size_t T = shape.g.size();
  if (truth.size() != T || static_cast<std::size_t>(exit.horizon()) != T) {
    throw std::invalid_argument("evaluate_policy_family: horizon mismatch");
  }
  // Running E(x_t) = e0 + e1 s and E(x_t^2) = q0 + q1 s + q2 s^2.
  double e0 = x0, e1 = 0.0;
  double q0 = x0 * x0, q1 = 0.0, q2 = 0.0;
  FamilyMoments acc;
  double acc_q1 = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double m = truth[t].mean;
    const double m2 = truth[t].second;
    const double r0 = shape.r0[t];
    const double g = shape.g[t];
    const double b = shape.b[t];
    // x' = r0 (1 - b e) x + s g e
    const double a1 = r0 * (1.0 - b * m);
    const double a2 = r0 * r0 * (1.0 - 2.0 * b * m + b * b * m2);
    const double cross = 2.0 * r0 * g * (m - b * m2);
    const double b1 = g * m;
    const double b2 = g * g * m2;
    const double n_e0 = a1 * e0;
    const double n_e1 = a1 * e1 + b1;
    const double n_q0 = a2 * q0;
    const double n_q1 = a2 * q1 + cross * e0;
    const double n_q2 = a2 * q2 + cross * e1 + b2;
    e0 = n_e0;
    e1 = n_e1;
    q0 = n_q0;
    q1 = n_q1;
    q2 = n_q2;
    const double p = exit.at(static_cast<int>(t) + 1);
    acc.alpha += p * e0;
    acc.beta += p * e1;
    acc.gamma += p * q0;
    acc_q1 += p * q1;
    acc.eps += p * q2;
  }
  acc.delta = 0.5 * acc_q1;
  return acc;
}

// ---------------------------------------------------------------------------
// Simulation

ExcessSampler gaussian_sampler(std::vector<ExcessMoment> moments) {
  std::vector<double> sd;
  for (const auto& e : moments) sd.push_back(std::sqrt(std::max(e.second - e.mean * e.mean, 0.0)));
  return [moments = std::move(moments), sd = std::move(sd)](std::mt19937_64& rng, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = moments[t].mean + sd[t] * normal(rng);
  };
}

VectorExcessSampler gaussian_sampler(std::vector<VectorExcessMoment> moments) {
  std::vector<Eigen::MatrixXd> roots;
  for (const auto& e : moments) {
    const Eigen::MatrixXd cov = project_psd(e.second - e.mean * e.mean.transpose(), "excess-return covariance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    roots.push_back(solver.eigenvectors() * solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    solver.eigenvectors().transpose());
  }
  return [moments = std::move(moments), roots = std::move(roots)](std::mt19937_64& rng, Eigen::MatrixXd& out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index t = 0; t < out.rows(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      Eigen::VectorXd z(out.cols());
      for (Eigen::Index a = 0; a < z.size(); ++a) z(a) = normal(rng);
      out.row(t) = (moments[i].mean + roots[i] * z).transpose();
    }
  };
}

ExcessSampler ar_sampler(ArModel model, std::vector<double> lags, std::vector<double> r0, double gross_offset) {
  if (lags.size() != static_cast<std::size_t>(model.order())) {
    throw std::invalid_argument("ar_sampler: expected " + std::to_string(model.order()) + " lags");
  }
  return [model = std::move(model), lags = std::move(lags), r0 = std::move(r0), gross_offset](
             std::mt19937_64& rng, std::span<double> out) {
    if (out.size() > r0.size()) throw std::invalid_argument("ar_sampler: riskless path shorter than horizon");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> hist = lags;
    const int p = model.order();
    const double sd = std::sqrt(model.sigma2());
    for (std::size_t t = 0; t < out.size(); ++t) {
      double r = model.intercept();
      for (int j = 1; j <= p; ++j) {
        r += model.phi()[static_cast<std::size_t>(j - 1)] * hist[static_cast<std::size_t>(p - j)];
      }
      r += sd * normal(rng);
      std::rotate(hist.begin(), hist.begin() + 1, hist.end());
      hist.back() = r;
      out[t] = r + gross_offset - r0[t];
    }
  };
}

WealthSample simulate_policy(const Policy& policy, const ExcessSampler& sampler, const ExitDistribution& exit,
                             std::size_t n_paths, std::uint64_t seed) {
  const int T = policy.horizon();
  if (exit.horizon() != T) throw std::invalid_argument("simulate_policy: policy and exit horizons differ");
  if (n_paths == 0) throw std::invalid_argument("simulate_policy: n_paths must be >= 1");
  std::vector<double> terminal(n_paths);
  parallel_for(n_paths, [&](std::size_t k) {
    std::mt19937_64 rng(stream_seed(seed, k));
    std::vector<double> e(static_cast<std::size_t>(T));
    sampler(rng, e);
    const int tau = draw_exit(rng, exit);
    double x = policy.x0;
    for (int t = 0; t < tau; ++t) {
      const double u = policy.allocation(t, x);
      x = policy.r0[static_cast<std::size_t>(t)] * x + e[static_cast<std::size_t>(t)] * u;
    }
    terminal[k] = x;
  });
  return summarize(std::move(terminal));
}

WealthSample simulate_policy(const VectorPolicy& policy, const VectorExcessSampler& sampler, int assets,
                             const ExitDistribution& exit, std::size_t n_paths, std::uint64_t seed) {
  const int T = policy.horizon();
  if (exit.horizon() != T) throw std::invalid_argument("simulate_policy: policy and exit horizons differ");
  if (n_paths == 0) throw std::invalid_argument("simulate_policy: n_paths must be >= 1");
  std::vector<double> terminal(n_paths);
  parallel_for(n_paths, [&](std::size_t k) {
    std::mt19937_64 rng(stream_seed(seed, k));
    Eigen::MatrixXd e(T, assets);
    sampler(rng, e);
    const int tau = draw_exit(rng, exit);
    double x = policy.x0;
    for (int t = 0; t < tau; ++t) {
      const Eigen::VectorXd u = policy.allocation(t, x);
      x = policy.r0[static_cast<std::size_t>(t)] * x + e.row(t).dot(u);
    }
    terminal[k] = x;
  });
  return summarize(std::move(terminal));
}

}  // namespace mvbayes
