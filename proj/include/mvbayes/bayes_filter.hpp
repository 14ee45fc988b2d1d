/**
 * @file bayes_filter.hpp
 * @brief Conjugate Bayesian updating of AR / VAR regression parameters
 *
 * The regression parameters are treated as a static state observed through
 *
 *     r_t = H_t theta + eps_t,   eps_t ~ N(0, Sigma),   H_t = I_n kron Z_t'
 *
 * with a Gaussian prior theta ~ N(m, C) and the noise covariance held fixed.
 * Each step produces the one-step-ahead predictive N(f, Q) and the posterior
 *
 *     f = H m,  Q = H C H' + Sigma,  A = C H' Q^-1,
 *     m <- m + A (r - f),  C <- C - A Q A'.
 *
 * A state created from an ArModel runs the scalar code path (dot products on
 * F_t = (1, r_{t-1}, ..., r_{t-p})); one created from a VarModel runs the
 * block path, including for n = 1.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvbayes/returns_model.hpp"

namespace mvbayes {

/// One-step-ahead predictive distribution of the next return vector.
struct Predictive {
  Eigen::VectorXd f;  ///< mean, length n
  Eigen::MatrixXd q;  ///< covariance, n x n
};

enum class FilterKind { kAr, kVar };

/// Posterior over the regression parameters plus the lag buffer that builds the next design row.
struct FilterState {
  FilterKind kind = FilterKind::kAr;
  int assets = 1;
  int order = 1;
  Eigen::VectorXd m;      ///< posterior mean, length n k (vec(Pi) ordering)
  Eigen::MatrixXd c;      ///< posterior covariance, n k x n k
  Eigen::MatrixXd noise;  ///< fixed observation covariance, n x n
  Eigen::MatrixXd lags;   ///< p x n, oldest row first
  std::size_t t = 0;      ///< number of updates applied

  int regressors() const noexcept { return assets * order + 1; }
};

/// Starts the scalar filter at m0 = (c, phi_1..phi_p) with noise sigma^2.
FilterState init_filter(const ArModel& model, const Eigen::MatrixXd& c0, std::span<const double> lags);

/// Starts the block filter at m0 = vec(Pi) with noise Sigma. @p lags is p x n.
FilterState init_filter(const VarModel& model, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& lags);

/// Regression row Z_t' = (1, R'_{t-1}, ..., R'_{t-p}) built from the lag buffer.
Eigen::VectorXd design_row(const FilterState& state);

Predictive predict(const FilterState& state);

/// Posterior after observing @p observed; the lag buffer advances by one period.
FilterState update(const FilterState& state, const Eigen::VectorXd& observed);
FilterState update(const FilterState& state, double observed);

/**
 * Predictive and posterior for an externally supplied design row @p z of
 * length k. The lag buffer is left untouched, so a sequence of these calls is
 * ordinary Bayesian linear regression with known noise.
 */
Predictive predict_with_design(const FilterState& state, const Eigen::VectorXd& z);
FilterState update_with_design(const FilterState& state, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& observed);

struct FilterRun {
  FilterState final_state;
  std::vector<Predictive> predictive;      ///< predictive[k] is formed before observation k
  std::vector<Eigen::VectorXd> posterior;  ///< posterior mean after observation k
};

/// Alternates predict and update over the rows of @p series (T x n).
FilterRun filter_series(const FilterState& state, const Eigen::MatrixXd& series);
FilterRun filter_series(const FilterState& state, std::span<const double> series);

/**
 * Planning moments for the next @p horizon periods as seen from @p state.
 * Period 1 is the filter's predictive (so it carries parameter uncertainty);
 * later periods use the point model at the posterior mean, propagated through
 * the companion form from the current lags.
 */
std::vector<Predictive> forecast_from_state(const FilterState& state, int horizon);

namespace detail {
Predictive scalar_predict(const FilterState& state, const Eigen::VectorXd& f_row);
void scalar_update(FilterState& state, const Eigen::VectorXd& f_row, double observed);
Predictive block_predict(const FilterState& state, const Eigen::VectorXd& z);
void block_update(FilterState& state, const Eigen::VectorXd& z, const Eigen::VectorXd& observed);
}  // namespace detail

}  // namespace mvbayes
