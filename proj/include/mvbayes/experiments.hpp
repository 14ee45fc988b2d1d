/**
 * @file experiments.hpp
 * @brief Simulation studies, backtests and credible intervals built on the core modules
 *
 * Returns handled here are measured in a stated Convention. Net returns are
 * shifted by one before they enter the wealth dynamics.
 */

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvbayes/data_io.hpp"
#include "mvbayes/mv_optimizer.hpp"
#include "mvbayes/returns_model.hpp"

namespace mvbayes {

// ---------------------------------------------------------------------------
// Win-probability study

enum class StudyParameter { kPhi, kMu, kSigma2 };

std::string_view to_string(StudyParameter p) noexcept;

/**
 * Each replicate simulates est_len + horizon net returns from the AR(1) with
 * (mu, phi, sigma2), the varied parameter replaced by the grid value. The
 * fixed plan forecasts all horizon periods from the true parameters at the
 * origin. The updated plan runs the filter over the last horizon returns
 * (prior mean at the true parameters, prior covariance from least squares on
 * the first est_len returns) and plans on its one-step predictives. Both
 * policy families are then valued under the true conditional moments of the
 * realized path. The replicate is a win when the updated family reaches a
 * higher expected wealth at the reference variance
 * vref_multiplier * max(minimum variance of either family).
 */
struct StudyConfig {
  StudyParameter parameter = StudyParameter::kPhi;
  std::vector<double> grid;
  double mu = 0.01;
  double phi = 0.1;
  double sigma2 = 0.2;
  std::size_t samples = 100;
  std::size_t est_len = 130;
  int horizon = 26;
  double riskfree_net = 0.0057;
  std::string exit = "uniform_tail:0.001";
  double x0 = 1.0;
  double vref_multiplier = 2.0;
  std::uint64_t seed = 42;
};

/// Settings and grid of study table 1 (phi), 2 (mu) or 3 (sigma2).
StudyConfig study_preset(int table);

struct WinRow {
  double value = 0.0;
  double win_probability = 0.0;
  std::size_t wins = 0;
  std::size_t samples = 0;
  std::size_t skipped = 0;  ///< replicates with an infeasible plan or degenerate fit (counted as losses)
  bool stationary = true;
};

struct WinTable {
  StudyParameter parameter = StudyParameter::kPhi;
  std::vector<WinRow> rows;
};

WinTable parameter_study(const StudyConfig& config);

/// Outcome of one replicate; exposed for diagnostics and tests.
struct ReplicateOutcome {
  bool feasible = false;
  bool win = false;
  double reference_variance = 0.0;
  double expected_updated = 0.0;
  double expected_fixed = 0.0;
};

ReplicateOutcome study_replicate(const StudyConfig& config, double mu, double phi, double sigma2, std::size_t k);

// ---------------------------------------------------------------------------
// Backtest and exit-time studies

struct BacktestConfig {
  Convention convention = Convention::kNet;
  int order = 1;  ///< 0 selects by AIC over 1..p_max
  int p_max = 5;
  std::size_t est_len = 130;
  std::size_t upd_len = 26;
  int horizon = 26;
  double riskfree_net = 0.0057;
  std::string exit = "uniform_tail:0.001";
  double x0 = 1.0;
  /// Upper end of the variance grid is the largest frontier variance at the smallest of these.
  std::vector<double> omega{1.0};
  int grid_points = 41;
  /// Run the block (VAR) route even for a single asset.
  bool force_vector = false;
};

/// Planning moments with and without updating, before conversion to excess returns.
struct PlanningInputs {
  int order = 1;
  bool stationary = true;
  std::vector<Predictive> updated;
  std::vector<Predictive> nonupdated;
};

/**
 * Fits the model on the first est_len rows of @p returns and filters through
 * the next upd_len rows. The updated plan uses the filter's one-step
 * predictives over the first min(upd_len, horizon) update periods and
 * forecasts the rest from the final state; the non-updated plan forecasts all
 * periods from the initial state.
 */
PlanningInputs planning_inputs(const Eigen::MatrixXd& returns, const BacktestConfig& config);

struct FrontierCurve {
  DpCoefficients coeffs;
  std::vector<double> expected_wealth;  ///< on the shared variance grid; NaN where below the vertex
  std::vector<double> expected_wealth_literal;
};

struct BacktestResult {
  int order = 1;
  bool stationary = true;
  std::vector<double> variance;
  FrontierCurve updated;
  FrontierCurve nonupdated;
};

BacktestResult backtest(const Eigen::MatrixXd& returns, const BacktestConfig& config);

struct ExitStudyResult {
  std::vector<double> variance;
  std::vector<std::string> labels;
  std::vector<FrontierCurve> updated;
  std::vector<FrontierCurve> nonupdated;
};

/// One frontier pair per exit distribution, all on one variance grid. Distributions may differ in horizon.
ExitStudyResult exit_time_study(const Eigen::MatrixXd& returns, const BacktestConfig& base,
                                const std::vector<ExitDistribution>& exits,
                                const std::vector<std::string>& labels = {});

/// The three spread variants P1, P2, P3 over 26 periods.
std::vector<ExitDistribution> spread_distributions();

// ---------------------------------------------------------------------------
// Credible intervals

struct CredibleConfig {
  std::vector<double> omegas{0.25, 0.5, 1.0, 2.0, 3.0};
  double alpha = 0.5;
  std::size_t n_sims = 1000;
  std::uint64_t seed = 42;
  int horizon = 26;
  std::string exit = "uniform_tail:0.001";
  double riskfree_net = 0.0057;
  double x0 = 1.0;
  Convention convention = Convention::kNet;
  double max_excluded_fraction = 0.05;
};

struct CredibleRow {
  double omega = 0.0;
  double expected_return = 0.0;  ///< mean of r* = E_0(x) / x0 over paths
  double lower = 0.0;            ///< alpha/2 quantile
  double upper = 0.0;            ///< 1 - alpha/2 quantile
  double implied_variance = 0.0; ///< mean over paths of the frontier variance at the path's E_0(x)
  std::vector<double> returns;   ///< the empirical sample of r*
};

struct CredibleResult {
  std::vector<CredibleRow> rows;
  std::size_t n_sims = 0;
  std::size_t excluded = 0;
};

/**
 * Simulates n_sims return paths of length horizon from @p model starting at
 * @p lags. On path k the planning moments are E(e_t) = m0'F_t - r0 and
 * E(e_t^2) = E(e_t)^2 + sigma^2, with F_t built from the simulated lags and m0
 * the model's regression coefficients. Paths whose Theta leaves (0, 1) are
 * excluded; more than max_excluded_fraction of them raises InfeasibleError.
 */
CredibleResult credible_intervals(const ArModel& model, std::span<const double> lags, const CredibleConfig& config);

}  // namespace mvbayes
