/**
 * @file numeric.hpp
 * @brief Small numerical helpers shared across modules
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mvbayes {

/// Eigenvalue floor below which a covariance matrix is treated as indefinite.
inline constexpr double kPsdTolerance = 1e-10;

/// (M + M') / 2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/**
 * Symmetrizes @p m and clamps eigenvalues in [-kPsdTolerance, 0) to zero.
 * Throws std::invalid_argument naming @p what when an eigenvalue lies below
 * -kPsdTolerance.
 */
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, const char* what);

/// Largest eigenvalue modulus of a (possibly non-symmetric) square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Pairwise (cascade) summation; result is independent of thread scheduling.
double pairwise_sum(std::span<const double> values);

/// Sample mean and unbiased sample variance, both via pairwise summation.
struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};
SampleStats sample_stats(std::span<const double> values);

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). Does not require sorted input.
double empirical_quantile(std::vector<double> values, double level);

/// Worker count from MVBAYES_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/**
 * Runs body(i) for i in [0, n) across worker_count() threads. Each index is
 * processed exactly once; callers write results into per-index slots so the
 * outcome does not depend on scheduling.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic 64-bit seed for replicate @p k of stream @p seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t k);

}  // namespace mvbayes
