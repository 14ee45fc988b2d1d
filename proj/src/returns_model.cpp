#include "mvbayes/returns_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "mvbayes/errors.hpp"
#include "mvbayes/numeric.hpp"

namespace mvbayes {

namespace {

constexpr double kRankThreshold = 1e-12;

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// QR of a design matrix with a rank check; returns (X'X)^-1 from the R factor.
struct LeastSquares {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  Eigen::MatrixXd xtx_inverse;

  explicit LeastSquares(const Eigen::MatrixXd& design) : qr(design.rows(), design.cols()) {
    qr.setThreshold(kRankThreshold);
    qr.compute(design);
    const Eigen::Index k = design.cols();
    if (qr.rank() < k) {
      throw EstimationError("singular design matrix: rank " + std::to_string(qr.rank()) +
                            " < " + std::to_string(k) + " regressors (constant or collinear series?)");
    }
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd unpermuted = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    xtx_inverse = symmetrize(perm * unpermuted * perm.transpose());
  }
};

Eigen::MatrixXd scalar_design(std::span<const double> y, int p, std::size_t first_row) {
  const std::size_t rows = y.size() - first_row;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), p + 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = first_row + r;
    x(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (int j = 1; j <= p; ++j) x(static_cast<Eigen::Index>(r), j) = y[t - static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd vector_design(const Eigen::MatrixXd& y, int p, Eigen::Index first_row) {
  const Eigen::Index n = y.cols();
  const Eigen::Index rows = y.rows() - first_row;
  Eigen::MatrixXd z(rows, n * p + 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = first_row + r;
    z(r, 0) = 1.0;
    for (int j = 1; j <= p; ++j) z.block(r, 1 + (j - 1) * n, 1, n) = y.row(t - j);
  }
  return z;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  const Eigen::VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// ArModel

ArModel::ArModel(double mu, std::vector<double> phi, double sigma2, Stationarity check)
    : mu_(mu), phi_(std::move(phi)), sigma2_(sigma2) {
  double phi_sum = 0.0;
  for (double v : phi_) phi_sum += v;
  intercept_ = mu_ * (1.0 - phi_sum);
  validate(check);
}

ArModel ArModel::from_regression(const Eigen::VectorXd& theta, double sigma2, Stationarity check) {
  if (theta.size() < 2) {
    throw std::invalid_argument("AR regression vector needs an intercept and at least one lag");
  }
  ArModel m;
  m.intercept_ = theta(0);
  m.phi_.assign(theta.data() + 1, theta.data() + theta.size());
  double phi_sum = 0.0;
  for (double v : m.phi_) phi_sum += v;
  m.mu_ = m.intercept_ / (1.0 - phi_sum);
  m.sigma2_ = sigma2;
  m.validate(check);
  return m;
}

void ArModel::validate(Stationarity check) {
  if (phi_.empty()) throw std::invalid_argument("AR model needs order p >= 1");
  if (!(sigma2_ >= 0.0) || !std::isfinite(sigma2_)) {
    throw std::invalid_argument("AR innovation variance must be finite and >= 0");
  }
  for (double v : phi_) {
    if (!std::isfinite(v)) throw std::invalid_argument("AR coefficients must be finite");
  }
  stationary_ = spectral_radius(companion()) < 1.0;
  if (!stationary_ && check == Stationarity::kRequire) {
    throw std::invalid_argument("AR coefficients are not stationary (companion spectral radius >= 1)");
  }
}

Eigen::VectorXd ArModel::regression_coefficients() const {
  Eigen::VectorXd theta(order() + 1);
  theta(0) = intercept_;
  for (int j = 0; j < order(); ++j) theta(j + 1) = phi_[static_cast<std::size_t>(j)];
  return theta;
}

Eigen::MatrixXd ArModel::companion() const {
  const int p = order();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) a(0, j) = phi_[static_cast<std::size_t>(j)];
  for (int j = 1; j < p; ++j) a(j, j - 1) = 1.0;
  return a;
}

// ---------------------------------------------------------------------------
// VarModel

VarModel::VarModel(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> phi, Eigen::MatrixXd sigma,
                   Stationarity check)
    : mu_(std::move(mu)), phi_(std::move(phi)), sigma_(std::move(sigma)) {
  const Eigen::Index n = mu_.size();
  Eigen::MatrixXd lag_sum = Eigen::MatrixXd::Zero(n, n);
  for (const auto& m : phi_) {
    if (m.rows() != n || m.cols() != n) {
      throw std::invalid_argument("VAR coefficient matrices must be n x n");
    }
    lag_sum += m;
  }
  intercept_ = (Eigen::MatrixXd::Identity(n, n) - lag_sum) * mu_;
  validate(check);
}

VarModel VarModel::from_regression(const Eigen::MatrixXd& pi, Eigen::MatrixXd sigma,
                                   Stationarity check) {
  const Eigen::Index n = pi.cols();
  if (n < 1 || (pi.rows() - 1) % n != 0 || pi.rows() < n + 1) {
    throw std::invalid_argument("VAR regression matrix must be (n p + 1) x n");
  }
  const int p = static_cast<int>((pi.rows() - 1) / n);
  VarModel m;
  m.intercept_ = pi.row(0).transpose();
  Eigen::MatrixXd lag_sum = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < p; ++j) {
    // Pi(1 + j n + l, i) is the coefficient of asset l at lag j+1 in equation i.
    Eigen::MatrixXd phi_j = pi.block(1 + j * n, 0, n, n).transpose();
    lag_sum += phi_j;
    m.phi_.push_back(std::move(phi_j));
  }
  m.mu_ = (Eigen::MatrixXd::Identity(n, n) - lag_sum).fullPivLu().solve(m.intercept_);
  m.sigma_ = std::move(sigma);
  m.validate(check);
  return m;
}

VarModel VarModel::from_ar(const ArModel& ar) {
  VarModel m;
  m.mu_ = Eigen::VectorXd::Constant(1, ar.mu());
  m.intercept_ = Eigen::VectorXd::Constant(1, ar.intercept());
  for (double v : ar.phi()) m.phi_.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  m.sigma_ = Eigen::MatrixXd::Constant(1, 1, ar.sigma2());
  m.validate(ar.stationary() ? Stationarity::kRequire : Stationarity::kFlag);
  return m;
}

void VarModel::validate(Stationarity check) {
  const Eigen::Index n = mu_.size();
  if (n < 1) throw std::invalid_argument("VAR model needs at least one asset");
  if (phi_.empty()) throw std::invalid_argument("VAR model needs order p >= 1");
  if (sigma_.rows() != n || sigma_.cols() != n) {
    throw std::invalid_argument("VAR innovation covariance must be n x n");
  }
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("VAR innovation covariance must be symmetric");
  }
  sigma_ = project_psd(sigma_, "VAR innovation covariance");
  stationary_ = spectral_radius(companion()) < 1.0;
  if (!stationary_ && check == Stationarity::kRequire) {
    throw std::invalid_argument("VAR coefficients are not stationary (companion spectral radius >= 1)");
  }
}

Eigen::MatrixXd VarModel::regression_matrix() const {
  const Eigen::Index n = assets();
  Eigen::MatrixXd pi(regressors(), n);
  pi.row(0) = intercept_.transpose();
  for (int j = 0; j < order(); ++j) {
    pi.block(1 + j * n, 0, n, n) = phi_[static_cast<std::size_t>(j)].transpose();
  }
  return pi;
}

Eigen::VectorXd VarModel::regression_vector() const {
  const Eigen::MatrixXd pi = regression_matrix();
  return Eigen::Map<const Eigen::VectorXd>(pi.data(), pi.size());
}

Eigen::MatrixXd VarModel::companion() const {
  const Eigen::Index n = assets();
  const Eigen::Index np = n * order();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(np, np);
  for (int j = 0; j < order(); ++j) a.block(0, j * n, n, n) = phi_[static_cast<std::size_t>(j)];
  if (order() > 1) a.block(n, 0, np - n, np - n) = Eigen::MatrixXd::Identity(np - n, np - n);
  return a;
}

// ---------------------------------------------------------------------------
// Estimation

ArFit fit_ols(std::span<const double> returns, int p) {
  if (p < 1) throw std::invalid_argument("fit_ols: lag order must be >= 1");
  const std::size_t k = static_cast<std::size_t>(p) + 1;
  if (returns.size() <= static_cast<std::size_t>(p) + k) {
    throw std::invalid_argument("fit_ols: series of length " + std::to_string(returns.size()) +
                                " is too short for AR(" + std::to_string(p) + ")");
  }
  for (double v : returns) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_ols: series has missing or non-finite values");
  }
  const Eigen::MatrixXd x = scalar_design(returns, p, static_cast<std::size_t>(p));
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) y(r) = returns[static_cast<std::size_t>(r + p)];

  LeastSquares ls(x);
  const Eigen::VectorXd theta = ls.qr.solve(y);
  const Eigen::VectorXd resid = y - x * theta;
  const double dof = static_cast<double>(x.rows()) - static_cast<double>(k);
  const double sigma2 = resid.squaredNorm() / dof;

  return ArFit{ArModel::from_regression(theta, sigma2, Stationarity::kFlag), theta,
               sigma2 * ls.xtx_inverse, static_cast<std::size_t>(x.rows())};
}

VarFit fit_ols(const Eigen::MatrixXd& returns, int p) {
  if (p < 1) throw std::invalid_argument("fit_ols: lag order must be >= 1");
  const Eigen::Index n = returns.cols();
  if (n < 1) throw std::invalid_argument("fit_ols: need at least one asset");
  const Eigen::Index k = n * p + 1;
  if (returns.rows() <= p + k) {
    throw std::invalid_argument("fit_ols: series of length " + std::to_string(returns.rows()) +
                                " is too short for VAR(" + std::to_string(p) + ") on " +
                                std::to_string(n) + " assets");
  }
  if (!returns.allFinite()) throw std::invalid_argument("fit_ols: series has missing or non-finite values");

  const Eigen::MatrixXd z = vector_design(returns, p, p);
  const Eigen::MatrixXd y = returns.bottomRows(returns.rows() - p);
  LeastSquares ls(z);
  const Eigen::MatrixXd pi = ls.qr.solve(y);
  const Eigen::MatrixXd resid = y - z * pi;
  const double dof = static_cast<double>(z.rows() - k);
  const Eigen::MatrixXd sigma = symmetrize(resid.transpose() * resid / dof);

  return VarFit{VarModel::from_regression(pi, sigma, Stationarity::kFlag), pi,
                kronecker(sigma, ls.xtx_inverse), static_cast<std::size_t>(z.rows())};
}

OrderSelection select_order(std::span<const double> returns, int p_max) {
  if (p_max < 1) throw std::invalid_argument("select_order: p_max must be >= 1");
  const auto first = static_cast<std::size_t>(p_max);
  if (returns.size() <= first + static_cast<std::size_t>(p_max) + 1) {
    throw std::invalid_argument("select_order: series of length " + std::to_string(returns.size()) +
                                " is too short for p_max = " + std::to_string(p_max));
  }
  const std::size_t t_eff = returns.size() - first;
  Eigen::VectorXd y(static_cast<Eigen::Index>(t_eff));
  for (std::size_t r = 0; r < t_eff; ++r) y(static_cast<Eigen::Index>(r)) = returns[first + r];

  OrderSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    const Eigen::MatrixXd x = scalar_design(returns, p, first);
    LeastSquares ls(x);
    const double rss = (y - x * ls.qr.solve(y)).squaredNorm();
    const double aic = static_cast<double>(t_eff) * std::log(rss / static_cast<double>(t_eff)) +
                       2.0 * static_cast<double>(p + 1);
    out.aic.push_back(aic);
    if (aic < best) {
      best = aic;
      out.order = p;
    }
  }
  return out;
}

OrderSelection select_order(const Eigen::MatrixXd& returns, int p_max) {
  if (p_max < 1) throw std::invalid_argument("select_order: p_max must be >= 1");
  const Eigen::Index n = returns.cols();
  if (returns.rows() <= p_max + n * p_max + 1) {
    throw std::invalid_argument("select_order: series of length " + std::to_string(returns.rows()) +
                                " is too short for p_max = " + std::to_string(p_max));
  }
  const Eigen::Index t_eff = returns.rows() - p_max;
  const Eigen::MatrixXd y = returns.bottomRows(t_eff);

  OrderSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    const Eigen::MatrixXd z = vector_design(returns, p, p_max);
    LeastSquares ls(z);
    const Eigen::MatrixXd resid = y - z * ls.qr.solve(y);
    double aic = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      aic += static_cast<double>(t_eff) * std::log(resid.col(i).squaredNorm() / static_cast<double>(t_eff)) +
             2.0 * static_cast<double>(z.cols());
    }
    out.aic.push_back(aic);
    if (aic < best) {
      best = aic;
      out.order = p;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

std::size_t burn_in_length(int p) { return std::max<std::size_t>(50, 10 * static_cast<std::size_t>(p)); }

std::vector<double> simulate_path(const ArModel& model, std::size_t length, std::uint64_t seed,
                                  std::optional<std::span<const double>> init) {
  const int p = model.order();
  std::vector<double> hist(static_cast<std::size_t>(p));
  std::size_t burn = 0;
  if (init) {
    if (init->size() != hist.size()) {
      throw std::invalid_argument("simulate_path: expected " + std::to_string(p) + " initial lags");
    }
    std::copy(init->begin(), init->end(), hist.begin());
  } else {
    std::fill(hist.begin(), hist.end(), std::isfinite(model.mu()) ? model.mu() : 0.0);
    burn = burn_in_length(p);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(model.sigma2());
  const auto& phi = model.phi();

  std::vector<double> path;
  path.reserve(length);
  for (std::size_t i = 0; i < burn + length; ++i) {
    double r = model.intercept();
    for (int j = 1; j <= p; ++j) r += phi[static_cast<std::size_t>(j - 1)] * hist[static_cast<std::size_t>(p - j)];
    r += sd * normal(rng);
    std::rotate(hist.begin(), hist.begin() + 1, hist.end());
    hist.back() = r;
    if (i >= burn) path.push_back(r);
  }
  return path;
}

Eigen::MatrixXd simulate_path(const VarModel& model, std::size_t length, std::uint64_t seed,
                              const std::optional<Eigen::MatrixXd>& init) {
  const int p = model.order();
  const Eigen::Index n = model.assets();
  // Row p-1 is the newest lag.
  Eigen::MatrixXd hist(p, n);
  std::size_t burn = 0;
  if (init) {
    if (init->rows() != p || init->cols() != n) {
      throw std::invalid_argument("simulate_path: initial lags must be p x n");
    }
    hist = *init;
  } else {
    const Eigen::VectorXd start = model.mu().allFinite() ? model.mu() : Eigen::VectorXd::Zero(n);
    for (int j = 0; j < p; ++j) hist.row(j) = start.transpose();
    burn = burn_in_length(p);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd root = psd_sqrt(model.sigma());

  Eigen::MatrixXd path(static_cast<Eigen::Index>(length), n);
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < burn + length; ++i) {
    Eigen::VectorXd r = model.intercept();
    for (int j = 1; j <= p; ++j) r += model.phi()[static_cast<std::size_t>(j - 1)] * hist.row(p - j).transpose();
    for (Eigen::Index a = 0; a < n; ++a) z(a) = normal(rng);
    r += root * z;
    if (p > 1) hist.topRows(p - 1) = hist.bottomRows(p - 1).eval();
    hist.row(p - 1) = r.transpose();
    if (i >= burn) path.row(static_cast<Eigen::Index>(i - burn)) = r.transpose();
  }
  return path;
}

// ---------------------------------------------------------------------------
// Forecasts

std::vector<ScalarMoments> forecast_moments(const ArModel& model, std::span<const double> lags,
                                            int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast_moments: horizon must be >= 1");
  const int p = model.order();
  if (lags.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("forecast_moments: expected " + std::to_string(p) + " lags");
  }
  std::vector<double> hist(lags.begin(), lags.end());
  const auto& phi = model.phi();
  const Eigen::MatrixXd a = model.companion();
  Eigen::MatrixXd state_cov = Eigen::MatrixXd::Zero(p, p);

  std::vector<ScalarMoments> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    double mean = model.intercept();
    for (int j = 1; j <= p; ++j) mean += phi[static_cast<std::size_t>(j - 1)] * hist[static_cast<std::size_t>(p - j)];
    std::rotate(hist.begin(), hist.begin() + 1, hist.end());
    hist.back() = mean;

    state_cov = a * state_cov * a.transpose();
    state_cov(0, 0) += model.sigma2();
    out.push_back({mean, state_cov(0, 0)});
  }
  return out;
}

std::vector<VectorMoments> forecast_moments(const VarModel& model, const Eigen::MatrixXd& lags,
                                            int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast_moments: horizon must be >= 1");
  const int p = model.order();
  const Eigen::Index n = model.assets();
  if (lags.rows() != p || lags.cols() != n) {
    throw std::invalid_argument("forecast_moments: lags must be p x n");
  }
  Eigen::MatrixXd hist = lags;
  const Eigen::MatrixXd a = model.companion();
  Eigen::MatrixXd state_cov = Eigen::MatrixXd::Zero(n * p, n * p);

  std::vector<VectorMoments> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    Eigen::VectorXd mean = model.intercept();
    for (int j = 1; j <= p; ++j) mean += model.phi()[static_cast<std::size_t>(j - 1)] * hist.row(p - j).transpose();
    if (p > 1) hist.topRows(p - 1) = hist.bottomRows(p - 1).eval();
    hist.row(p - 1) = mean.transpose();

    state_cov = a * state_cov * a.transpose();
    state_cov.topLeftCorner(n, n) += model.sigma();
    out.push_back({mean, symmetrize(state_cov.topLeftCorner(n, n))});
  }
  return out;
}

}  // namespace mvbayes
