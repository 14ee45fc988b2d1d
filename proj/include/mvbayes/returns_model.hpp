/**
 * @file returns_model.hpp
 * @brief AR(p) and VAR(p) return models: estimation, order selection,
 *        simulation and multi-step moment forecasts
 *
 * Both models are carried in intercept form
 *
 *     r_t = c + sum_i phi_i r_{t-i} + eps_t,      eps_t ~ N(0, sigma^2)
 *     R_t = c + sum_j Phi_j R_{t-j} + eps_t,      eps_t ~ N(0, Sigma)
 *
 * with unconditional mean mu = c / (1 - sum phi) (resp. (I - sum Phi)^-1 c).
 * The regression form used by the filter stacks one equation per asset:
 *
 *     Z_t' = (1, R'_{t-1}, ..., R'_{t-p}),  k = n p + 1,
 *     vec(Pi) = (pi_1', ..., pi_n')'        (column i = equation of asset i)
 *
 * For n = 1 the parameter vector is theta = (c, phi_1, ..., phi_p).
 *
 * Lag arguments are always ordered oldest to newest: a span of p values for
 * the scalar model, a p x n matrix (one row per period) for the vector model.
 *
 * The scalar and vector code paths are written independently; for n = 1 they
 * agree to rounding.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mvbayes {

/// What a model constructor does with a non-stationary parameter set.
enum class Stationarity {
  kRequire,  ///< throw std::invalid_argument
  kFlag,     ///< accept and report through stationary() == false
};

class ArModel {
 public:
  /// Builds from the unconditional mean.
  ArModel(double mu, std::vector<double> phi, double sigma2,
          Stationarity check = Stationarity::kRequire);

  /// Builds from the regression vector theta = (c, phi_1, ..., phi_p).
  static ArModel from_regression(const Eigen::VectorXd& theta, double sigma2,
                                 Stationarity check = Stationarity::kRequire);

  double mu() const noexcept { return mu_; }
  double intercept() const noexcept { return intercept_; }
  const std::vector<double>& phi() const noexcept { return phi_; }
  double sigma2() const noexcept { return sigma2_; }
  int order() const noexcept { return static_cast<int>(phi_.size()); }
  bool stationary() const noexcept { return stationary_; }

  /// theta = (c, phi_1, ..., phi_p)
  Eigen::VectorXd regression_coefficients() const;
  /// p x p companion matrix.
  Eigen::MatrixXd companion() const;

 private:
  ArModel() = default;
  void validate(Stationarity check);

  double mu_ = 0.0;
  double intercept_ = 0.0;
  std::vector<double> phi_;
  double sigma2_ = 0.0;
  bool stationary_ = true;
};

class VarModel {
 public:
  VarModel(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> phi, Eigen::MatrixXd sigma,
           Stationarity check = Stationarity::kRequire);

  /// Builds from the k x n coefficient matrix Pi (row 0 = intercepts).
  static VarModel from_regression(const Eigen::MatrixXd& pi, Eigen::MatrixXd sigma,
                                  Stationarity check = Stationarity::kRequire);
  static VarModel from_ar(const ArModel& ar);

  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::VectorXd& intercept() const noexcept { return intercept_; }
  const std::vector<Eigen::MatrixXd>& phi() const noexcept { return phi_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  int assets() const noexcept { return static_cast<int>(mu_.size()); }
  int order() const noexcept { return static_cast<int>(phi_.size()); }
  int regressors() const noexcept { return assets() * order() + 1; }
  bool stationary() const noexcept { return stationary_; }

  /// k x n matrix Pi with R_t = Pi' Z_t + eps_t.
  Eigen::MatrixXd regression_matrix() const;
  /// vec(Pi), length n k.
  Eigen::VectorXd regression_vector() const;
  /// (n p) x (n p) companion matrix.
  Eigen::MatrixXd companion() const;

 private:
  VarModel() = default;
  void validate(Stationarity check);

  Eigen::VectorXd mu_;
  Eigen::VectorXd intercept_;
  std::vector<Eigen::MatrixXd> phi_;
  Eigen::MatrixXd sigma_;
  bool stationary_ = true;
};

struct ArFit {
  ArModel model;
  Eigen::VectorXd theta;   ///< (c, phi_1..phi_p)
  Eigen::MatrixXd c0;      ///< sigma_hat^2 (X'X)^-1
  std::size_t rows = 0;    ///< effective sample T - p
};

struct VarFit {
  VarModel model;
  Eigen::MatrixXd pi;      ///< k x n
  Eigen::MatrixXd c0;      ///< Sigma_hat kron (Z'Z)^-1, nk x nk
  std::size_t rows = 0;
};

/**
 * Least-squares fit of an AR(p) on @p returns.
 *
 * Requires T - p > p + 1 so the residual variance has at least one degree of
 * freedom. Throws EstimationError when the design is rank deficient (e.g. a
 * constant series). A non-stationary estimate yields a flagged model.
 */
ArFit fit_ols(std::span<const double> returns, int p);

/// Least-squares fit of a VAR(p) on the T x n matrix @p returns.
VarFit fit_ols(const Eigen::MatrixXd& returns, int p);

struct OrderSelection {
  int order = 1;
  std::vector<double> aic;  ///< aic[p-1] for p = 1..p_max
};

/**
 * AIC order selection over p = 1..p_max on the common sample t = p_max+1..T.
 * AIC = T_eff log(sigma2_ML) + 2 (p + 1) per equation, summed over equations.
 * Ties go to the smaller order.
 */
OrderSelection select_order(std::span<const double> returns, int p_max);
OrderSelection select_order(const Eigen::MatrixXd& returns, int p_max);

/**
 * Gaussian sample path of length @p length. With @p init the recursion starts
 * from those lags and nothing is discarded; otherwise lags start at mu and a
 * burn-in of max(50, 10 p) steps is dropped.
 */
std::vector<double> simulate_path(const ArModel& model, std::size_t length, std::uint64_t seed,
                                  std::optional<std::span<const double>> init = std::nullopt);
Eigen::MatrixXd simulate_path(const VarModel& model, std::size_t length, std::uint64_t seed,
                              const std::optional<Eigen::MatrixXd>& init = std::nullopt);

/// Burn-in length used by simulate_path when no initial lags are given.
std::size_t burn_in_length(int p);

struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;
};

struct VectorMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/**
 * Conditional mean and variance of r_{t+h}, h = 1..horizon, given the lags,
 * with parameters held at their point values. Variances follow
 * V_h = A V_{h-1} A' + Sigma_companion on the companion form.
 */
std::vector<ScalarMoments> forecast_moments(const ArModel& model, std::span<const double> lags,
                                            int horizon);
std::vector<VectorMoments> forecast_moments(const VarModel& model, const Eigen::MatrixXd& lags,
                                            int horizon);

}  // namespace mvbayes
