#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/errors.hpp"
#include "mvbayes/numeric.hpp"
#include "mvbayes/returns_model.hpp"
#include "oracles.hpp"

using namespace mvbayes;

namespace {

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> z;
  const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return z(rng); });
  return scale * (g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n));
}

FilterState ar1_state(double c, double phi, double sigma2, const Eigen::MatrixXd& c0, double lag) {
  const ArModel model = ArModel::from_regression(Eigen::Vector2d(c, phi), sigma2);
  return init_filter(model, c0, std::span<const double>(&lag, 1));
}

}  // namespace

TEST_CASE("init takes the prior mean from the model") {
  const ArModel model(0.00207, {-0.13366}, 0.00085);
  const double lag = 0.0;
  const FilterState s = init_filter(model, Eigen::Matrix2d::Identity() * 1e-4, std::span<const double>(&lag, 1));
  CHECK(s.m(0) == doctest::Approx(0.00207 * (1 + 0.13366)));
  CHECK(s.m(1) == doctest::Approx(-0.13366));
  CHECK(s.noise(0, 0) == doctest::Approx(0.00085));
  CHECK(s.kind == FilterKind::kAr);

  CHECK_NOTHROW(init_filter(model, Eigen::Matrix2d::Zero(), std::span<const double>(&lag, 1)));
  Eigen::Matrix2d bad;
  bad << 1.0, 0.0, 0.0, -0.1;
  CHECK_THROWS_AS(init_filter(model, bad, std::span<const double>(&lag, 1)), std::invalid_argument);
  CHECK_THROWS_AS(init_filter(model, Eigen::Matrix3d::Identity(), std::span<const double>(&lag, 1)),
                  std::invalid_argument);
  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(init_filter(model, Eigen::Matrix2d::Identity(), two), std::invalid_argument);
}

TEST_CASE("predict by direct substitution") {
  const FilterState point = ar1_state(0.0, 0.5, 1.0, Eigen::Matrix2d::Zero(), 0.2);
  const Predictive p = predict(point);
  CHECK(p.f(0) == doctest::Approx(0.1));
  CHECK(p.q(0, 0) == doctest::Approx(1.0));

  const double vc = 0.3, vphi = 0.7, r = 1.5, s2 = 0.2;
  Eigen::Matrix2d c0;
  c0 << vc, 0.0, 0.0, vphi;
  const FilterState diag = ar1_state(0.04, 0.0, s2, c0, r);
  const Predictive q = predict(diag);
  CHECK(q.f(0) == doctest::Approx(0.04));
  CHECK(q.q(0, 0) == doctest::Approx(vc + vphi * r * r + s2));
}

TEST_CASE("predictive matches a Monte-Carlo integral over the prior") {
  std::mt19937_64 rng(7);
  const ArModel model(0.01, {0.3, -0.2}, 0.05);
  const Eigen::MatrixXd c0 = random_spd(3, rng, 0.02);
  const std::vector<double> lags{0.4, -0.3};
  const FilterState s = init_filter(model, c0, lags);
  const Predictive p = predict(s);

  const Eigen::MatrixXd l = c0.llt().matrixL();
  const Eigen::Vector3d f_row(1.0, -0.3, 0.4);
  std::normal_distribution<double> z;
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d theta = s.m + l * Eigen::Vector3d(z(rng), z(rng), z(rng));
    const double y = f_row.dot(theta) + std::sqrt(0.05) * z(rng);
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - p.f(0)) < 3 * std::sqrt(p.q(0, 0) / n));
  CHECK(std::abs(var - p.q(0, 0)) < 3 * p.q(0, 0) * std::sqrt(2.0 / n));
}

TEST_CASE("update special cases") {
  Eigen::Matrix2d c0;
  c0 << 0.2, 0.05, 0.05, 0.1;
  const FilterState s = ar1_state(0.01, 0.3, 0.04, c0, 0.5);
  const Predictive p = predict(s);
  const FilterState same = update(s, p.f(0));
  CHECK((same.m - s.m).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::Vector2d f_row(1.0, 0.5);
  const Eigen::Vector2d gain = c0 * f_row / p.q(0, 0);
  const Eigen::Matrix2d expected = c0 - gain * p.q(0, 0) * gain.transpose();
  CHECK((same.c - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(same.lags(0, 0) == doctest::Approx(p.f(0)));
  CHECK(same.t == 1);

  const FilterState frozen = ar1_state(0.01, 0.3, 0.04, Eigen::Matrix2d::Zero(), 0.5);
  const FilterState after = update(frozen, 3.0);
  CHECK(after.m == frozen.m);
  CHECK(after.c.isZero());
  CHECK(after.lags(0, 0) == 3.0);

  const FilterState dead = ar1_state(0.01, 0.3, 0.0, Eigen::Matrix2d::Zero(), 0.5);
  CHECK_THROWS_AS(update(dead, 0.2), DegenerateFilterError);
}

TEST_CASE("sequential updates equal the batch conjugate posterior") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const ArModel model(0.01, {0.35, -0.2}, 0.04);
    const auto y = simulate_path(model, 202, 300 + static_cast<std::uint64_t>(trial));
    const Eigen::MatrixXd c0 = random_spd(3, rng, 0.3);
    const FilterRun run = filter_series(init_filter(model, c0, std::span<const double>(y).first(2)),
                                        std::span<const double>(y).subspan(2));
    Eigen::MatrixXd x;
    Eigen::VectorXd target;
    oracle::ar_design(y, 2, 2, x, target);
    const auto post = oracle::batch_posterior(x, target, 0.04, model.regression_coefficients(), c0);
    CHECK((run.final_state.m - post.m).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((run.final_state.c - post.c).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("exogenous designs: sequential and batch posteriors coincide") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    const ArModel model(0.0, {0.1, 0.1, 0.1}, 0.5);
    const Eigen::MatrixXd c0 = random_spd(4, rng, 1.0);
    const std::vector<double> lags{0.0, 0.0, 0.0};
    FilterState s = init_filter(model, c0, lags);
    const int n = 60;
    Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(n, 4, [&] { return z(rng); });
    Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
    for (int t = 0; t < n; ++t) {
      s = update_with_design(s, x.row(t).transpose(), Eigen::VectorXd::Constant(1, y(t)));
    }
    CHECK((s.lags.array() == 0.0).all());
    const auto post = oracle::batch_posterior(x, y, 0.5, model.regression_coefficients(), c0);
    CHECK((s.m - post.m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.c - post.c).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("block filter equals the batch posterior with a Kronecker design") {
  std::mt19937_64 rng(17);
  Eigen::MatrixXd phi(2, 2);
  phi << 0.3, 0.1, 0.0, -0.2;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 0.04, 0.01, 0.01, 0.03;
  const VarModel model(Eigen::Vector2d(0.01, 0.0), {phi}, sigma);
  const Eigen::MatrixXd y = simulate_path(model, 81, 3);
  const Eigen::MatrixXd c0 = random_spd(6, rng, 0.1);
  const FilterRun run = filter_series(init_filter(model, c0, y.topRows(1)), y.bottomRows(80));

  // Stacked regression: vec observations with H_t = I_2 kron z_t', noise Sigma per step.
  const Eigen::MatrixXd sigma_inv = sigma.inverse();
  Eigen::MatrixXd precision = c0.inverse();
  Eigen::VectorXd info = precision * model.regression_vector();
  for (int t = 1; t < 81; ++t) {
    const Eigen::Vector3d zt(1.0, y(t - 1, 0), y(t - 1, 1));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 6);
    h.block(0, 0, 1, 3) = zt.transpose();
    h.block(1, 3, 1, 3) = zt.transpose();
    precision += h.transpose() * sigma_inv * h;
    info += h.transpose() * sigma_inv * y.row(t).transpose();
  }
  const Eigen::MatrixXd c_batch = precision.inverse();
  const Eigen::VectorXd m_batch = c_batch * info;
  CHECK((run.final_state.m - m_batch).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((run.final_state.c - c_batch).cwiseAbs().maxCoeff() < 1e-9);
  for (const auto& p : run.predictive) CHECK(min_eigenvalue(p.q - sigma) >= -1e-12);
}

TEST_CASE("filter_series driver") {
  const FilterState s = ar1_state(0.01, 0.3, 0.04, Eigen::Matrix2d::Identity() * 0.1, 0.5);
  CHECK_THROWS(filter_series(s, std::span<const double>{}));
  const double one = 0.2;
  const FilterRun single = filter_series(s, std::span<const double>(&one, 1));
  REQUIRE(single.predictive.size() == 1);
  CHECK(single.predictive[0].f(0) == predict(s).f(0));
  CHECK(single.predictive[0].q(0, 0) == predict(s).q(0, 0));

  const auto y = simulate_path(ArModel(0.01, {0.3}, 0.04), 26, 1);
  const FilterRun run = filter_series(s, y);
  FilterState fold = s;
  for (double v : y) fold = update(fold, v);
  CHECK(run.final_state.m == fold.m);
  CHECK(run.final_state.c == fold.c);
  CHECK(run.posterior.size() == 26);
}

TEST_CASE("information never decreases and Q dominates the noise") {
  std::mt19937_64 rng(9);
  const ArModel model(0.0, {0.4, 0.2}, 0.3);
  const auto y = simulate_path(model, 300, 12);
  FilterState s = init_filter(model, random_spd(3, rng, 1.0), std::span<const double>(y).first(2));
  for (std::size_t t = 2; t < y.size(); ++t) {
    const Predictive p = predict(s);
    CHECK(p.q(0, 0) >= 0.3);
    const FilterState next = update(s, y[t]);
    CHECK(min_eigenvalue(s.c - next.c) >= -1e-12);
    s = next;
  }
}

TEST_CASE("standardized innovations are calibrated under a correct prior") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> z;
  const Eigen::Vector2d m0(0.01, 0.3);
  Eigen::Matrix2d c0;
  c0 << 1e-4, 0.0, 0.0, 0.01;
  const Eigen::Vector2d theta = m0 + c0.llt().matrixL() * Eigen::Vector2d(z(rng), z(rng));
  const double s2 = 0.04;
  FilterState s = ar1_state(m0(0), m0(1), s2, c0, 0.0);
  double lag = 0.0;
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double y = theta(0) + theta(1) * lag + std::sqrt(s2) * z(rng);
    const Predictive p = predict(s);
    const double u = (y - p.f(0)) / std::sqrt(p.q(0, 0));
    sum += u;
    sum2 += u * u;
    s = update(s, y);
    lag = y;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("forecast_from_state starts with the filter predictive") {
  const FilterState s = ar1_state(0.01, 0.3, 0.04, Eigen::Matrix2d::Identity() * 0.05, 0.5);
  const auto f = forecast_from_state(s, 5);
  REQUIRE(f.size() == 5);
  CHECK(f[0].f(0) == predict(s).f(0));
  CHECK(f[0].q(0, 0) == predict(s).q(0, 0));
  const ArModel point = ArModel::from_regression(s.m, 0.04);
  const double next = f[0].f(0);
  const auto rest = forecast_moments(point, std::span<const double>(&next, 1), 4);
  CHECK(f[1].f(0) == doctest::Approx(rest[0].mean));
  CHECK(f[1].q(0, 0) > 0.04 - 1e-15);
}
