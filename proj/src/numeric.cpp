#include "mvbayes/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace mvbayes {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  if (symmetric.rows() == 1) return symmetric(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + " must be square");
  }
  Eigen::MatrixXd sym = symmetrize(m);
  if (sym.size() == 0) return sym;
  if (!sym.allFinite()) {
    throw std::invalid_argument(std::string(what) + " has non-finite entries");
  }
  if (sym.rows() == 1) {
    if (sym(0, 0) < -kPsdTolerance) {
      throw std::invalid_argument(std::string(what) + " is not positive semidefinite");
    }
    sym(0, 0) = std::max(sym(0, 0), 0.0);
    return sym;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  const Eigen::VectorXd& eig = solver.eigenvalues();
  if (eig.minCoeff() >= 0.0) return sym;
  if (eig.minCoeff() < -kPsdTolerance) {
    throw std::invalid_argument(std::string(what) + " is not positive semidefinite (eigenvalue " +
                                std::to_string(eig.minCoeff()) + ")");
  }
  Eigen::VectorXd clamped = eig.cwiseMax(0.0);
  const Eigen::MatrixXd& v = solver.eigenvectors();
  return symmetrize(v * clamped.asDiagonal() * v.transpose());
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats out;
  out.count = values.size();
  if (values.empty()) return out;
  out.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - out.mean;
    sq[i] = d * d;
  }
  out.variance = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
  return out;
}

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(level >= 0.0 && level <= 1.0)) {
    throw std::invalid_argument("empirical_quantile: level must lie in [0, 1]");
  }
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double lower = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return lower;
  const double upper = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return lower + frac * (upper - lower);
}

std::size_t worker_count() {
  std::size_t n = 0;
  if (const char* env = std::getenv("MVBAYES_THREADS")) {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t k) { return seed ^ k; }

}  // namespace mvbayes
