/**
 * @file mv_optimizer.hpp
 * @brief Multi-period mean-variance allocation with an uncertain exit time
 *
 * Wealth evolves as x_{t+1} = r0_t x_t + e_t' u_t, where r0_t is the gross
 * riskless return over period t, e_t the excess return of the risky assets and
 * u_t the amount held in them. The investor leaves the market at T ^ tau with
 * P(T ^ tau = t) = p_t and maximizes E(x) - omega Var(x) at that time.
 *
 * Periods are indexed t = 0..T-1 for decisions and t = 1..T for wealth. The
 * backward recursion runs from dp_omega_T = dp_lambda_T = p_T:
 *
 *     K_t          = E(e_t)' E(e_t e_t')^-1 E(e_t)
 *     dp_omega_t   = p_t + r0_t^2 dp_omega_{t+1} (1 - K_t)
 *     dp_lambda_t  = p_t + r0_t   dp_lambda_{t+1} (1 - K_t)
 *     theta_t      = dp_lambda_{t+1}^2 K_t / dp_omega_{t+1}
 *     Theta        = sum_t theta_t
 *
 * with p_0 = 0. Every routine exists in a scalar form and a general
 * (vector-valued) form; the two are implemented separately.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/returns_model.hpp"

namespace mvbayes {

/// Probability mass p_1..p_T of leaving the market at each period.
class ExitDistribution {
 public:
  /// probs[t-1] = p_t. Entries must be >= 0 and sum to 1 within 1e-12.
  explicit ExitDistribution(std::vector<double> probs);

  /// All mass at T.
  static ExitDistribution certain(int horizon);
  /// p_t = 1/T.
  static ExitDistribution uniform(int horizon);
  /// p_t = @p mass for t < T and the remainder at T.
  static ExitDistribution uniform_tail(int horizon, double mass);

  /**
   * Parses "t1:p1,t2:p2,..." (unlisted periods get zero mass) or
   * "uniform_tail:<mass>", "uniform" and "certain". Throws
   * std::invalid_argument on malformed specs.
   */
  static ExitDistribution parse(std::string_view spec, int horizon);

  int horizon() const noexcept { return static_cast<int>(probs_.size()); }
  /// p_t for t = 1..T; p_0 = 0.
  double at(int t) const;
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// First and second moments of the excess return over one period.
struct ExcessMoment {
  double mean = 0.0;    ///< E(e_t)
  double second = 0.0;  ///< E(e_t^2)
  double r0 = 1.0;      ///< gross riskless return
};

struct VectorExcessMoment {
  Eigen::VectorXd mean;    ///< E(e_t)
  Eigen::MatrixXd second;  ///< E(e_t e_t')
  double r0 = 1.0;
};

/// mean = f - r0, second = q + f^2 + r0^2 - 2 r0 f. @p f is a gross return.
ExcessMoment excess_moments(double f, double q, double r0);
/// mean = f - r0 1, second = Q + mean mean'.
VectorExcessMoment excess_moments(const Predictive& pred, double r0);

/**
 * Excess moments for a sequence of predictives on returns measured with the
 * given offset: gross = predicted + @p gross_offset (1 for net returns, 0 for
 * gross). @p r0 holds one gross riskless return per period.
 */
std::vector<ExcessMoment> planning_moments(const std::vector<Predictive>& preds, std::span<const double> r0,
                                           double gross_offset);
std::vector<VectorExcessMoment> planning_moments_vector(const std::vector<Predictive>& preds,
                                                        std::span<const double> r0, double gross_offset);

struct DpCoefficients {
  std::vector<double> dp_omega;   ///< t = 0..T
  std::vector<double> dp_lambda;  ///< t = 0..T
  std::vector<double> theta;      ///< t = 0..T-1
  std::vector<double> k;          ///< K_t, t = 0..T-1
  double big_theta = 0.0;

  int horizon() const noexcept { return static_cast<int>(theta.size()); }
};

/**
 * Backward recursion. Throws InfeasibleError when Theta falls outside (0, 1)
 * or when a second-moment matrix is singular.
 */
DpCoefficients dp_coefficients(std::span<const ExcessMoment> moments, const ExitDistribution& exit);
DpCoefficients dp_coefficients(std::span<const VectorExcessMoment> moments, const ExitDistribution& exit);

/// Recursion without exit mass before T (the fixed-horizon problem).
DpCoefficients certain_horizon_coefficients(std::span<const ExcessMoment> moments);

/// lambda* = (1 + 2 omega dp_lambda_0 x0) / (1 - Theta); Theta = 0 is accepted, Theta >= 1 throws InfeasibleError.
double lambda_star(const DpCoefficients& coeffs, double risk_aversion, double x0);
/// E_0(x) = dp_lambda_0 x0 + (lambda* / (2 omega)) Theta
double expected_terminal_wealth(const DpCoefficients& coeffs, double risk_aversion, double x0);

/// u_t = a_t - b_t r0_t x_t.
struct Policy {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> r0;
  double risk_aversion = 0.0;
  double x0 = 0.0;

  int horizon() const noexcept { return static_cast<int>(a.size()); }
  double allocation(int t, double wealth) const;
};

struct VectorPolicy {
  std::vector<Eigen::VectorXd> a;
  std::vector<Eigen::VectorXd> b;
  std::vector<double> r0;
  double risk_aversion = 0.0;
  double x0 = 0.0;

  int horizon() const noexcept { return static_cast<int>(a.size()); }
  Eigen::VectorXd allocation(int t, double wealth) const;
};

Policy optimal_policy(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments, double risk_aversion,
                      double x0);
VectorPolicy optimal_policy(const DpCoefficients& coeffs, std::span<const VectorExcessMoment> moments,
                            double risk_aversion, double x0);

/// Maximizer of the quadratic-utility problem E(lambda x - omega x^2) for a given lambda.
Policy auxiliary_policy(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments, double lambda,
                        double risk_aversion, double x0);
VectorPolicy auxiliary_policy(const DpCoefficients& coeffs, std::span<const VectorExcessMoment> moments,
                              double lambda, double risk_aversion, double x0);

/// f_t(x) = quadratic[t] x^2 + linear[t] x + constant[t], t = 0..T.
struct AuxiliaryValue {
  std::vector<double> quadratic;  ///< -omega dp_omega_t
  std::vector<double> linear;     ///< lambda dp_lambda_t
  std::vector<double> constant;   ///< (lambda^2 / (4 omega)) sum_{s >= t} theta_s

  double value(int t, double wealth) const;
};

AuxiliaryValue auxiliary_value(const DpCoefficients& coeffs, double lambda, double risk_aversion);

struct FrontierPoint {
  double expected_wealth = 0.0;
  double variance = 0.0;
};

enum class FrontierForm {
  kCorrected,  ///< (omega_0 - lambda_0^2/(1-Theta)) x0^2 as the constant term
  kLiteral,    ///< the same term squared, kept for side-by-side comparison
};

/// Smallest attainable expectation, dp_lambda_0 x0 / (1 - Theta).
double min_expected_wealth(const DpCoefficients& coeffs, double x0);
/// Variance at the frontier vertex.
double min_variance(const DpCoefficients& coeffs, double x0, FrontierForm form = FrontierForm::kCorrected);

/**
 * Var_0 = ((1-Theta)/Theta) (E_0 - dp_lambda_0 x0/(1-Theta))^2 + constant term.
 * Throws InfeasibleError for a target below min_expected_wealth.
 */
std::vector<FrontierPoint> frontier(const DpCoefficients& coeffs, double x0, std::span<const double> targets,
                                    FrontierForm form = FrontierForm::kCorrected);
double frontier_variance(const DpCoefficients& coeffs, double x0, double expected_wealth,
                         FrontierForm form = FrontierForm::kCorrected);

/// Upper-branch expectation at variance @p variance; throws InfeasibleError below the vertex.
double expected_wealth_at_variance(const DpCoefficients& coeffs, double x0, double variance);

// ---------------------------------------------------------------------------
// Policy evaluation

/**
 * Mean and second moment of terminal wealth when the policy family
 * u_t = s g_t - b_t r0_t x_t is run against independent excess returns with
 * the given moments. E(x) = alpha + beta s and E(x^2) = gamma + 2 delta s + eps s^2.
 */
struct FamilyMoments {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double eps = 0.0;

  double mean(double s) const noexcept { return alpha + beta * s; }
  double variance(double s) const noexcept;
  /// Smallest variance over s.
  double min_variance() const;
  /// Largest expectation with variance @p variance (upper branch); -inf below min_variance().
  double expectation_at_variance(double variance) const;
};

/// The family whose member at s = lambda / (2 omega) is the auxiliary policy.
struct PolicyShape {
  std::vector<double> g;
  std::vector<double> b;
  std::vector<double> r0;
};

PolicyShape policy_shape(const DpCoefficients& coeffs, std::span<const ExcessMoment> moments);

/// Exact moment propagation of @p shape under @p truth (independent periods).
FamilyMoments evaluate_policy_family(const PolicyShape& shape, std::span<const ExcessMoment> truth,
                                     const ExitDistribution& exit, double x0);

/// Draws the T excess returns of one path into @p out.
using ExcessSampler = std::function<void(std::mt19937_64& rng, std::span<double> out)>;
using VectorExcessSampler = std::function<void(std::mt19937_64& rng, Eigen::MatrixXd& out)>;

/// Independent Gaussian excess returns with the given first and second moments.
ExcessSampler gaussian_sampler(std::vector<ExcessMoment> moments);
VectorExcessSampler gaussian_sampler(std::vector<VectorExcessMoment> moments);

/**
 * Excess returns generated by the AR recursion itself from @p lags:
 * e_t = r_t + gross_offset - r0_t.
 */
ExcessSampler ar_sampler(ArModel model, std::vector<double> lags, std::vector<double> r0, double gross_offset);

struct WealthSample {
  double mean = 0.0;
  double variance = 0.0;
  double mean_std_error = 0.0;
  double variance_std_error = 0.0;
  std::vector<double> terminal;
};

/**
 * Monte-Carlo terminal wealth x_{T ^ tau}. Path k uses an mt19937_64 seeded
 * with stream_seed(seed, k): first the T excess returns, then the exit time.
 */
WealthSample simulate_policy(const Policy& policy, const ExcessSampler& sampler, const ExitDistribution& exit,
                             std::size_t n_paths, std::uint64_t seed);
WealthSample simulate_policy(const VectorPolicy& policy, const VectorExcessSampler& sampler, int assets,
                             const ExitDistribution& exit, std::size_t n_paths, std::uint64_t seed);

}  // namespace mvbayes
