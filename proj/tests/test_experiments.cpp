#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "mvbayes/errors.hpp"
#include "mvbayes/experiments.hpp"
#include "mvbayes/numeric.hpp"
#include "oracles.hpp"

using namespace mvbayes;

namespace {

Eigen::MatrixXd ar_series(double mu, double phi, double sigma2, std::size_t n, std::uint64_t seed) {
  const auto y = simulate_path(ArModel(mu, {phi}, sigma2), n, seed);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), 0) = y[i];
  return m;
}

}  // namespace

TEST_CASE("study presets cover the published grids") {
  const StudyConfig t1 = study_preset(1);
  CHECK(t1.parameter == StudyParameter::kPhi);
  CHECK(t1.grid.size() == 19);
  CHECK(t1.grid.front() == doctest::Approx(-0.9));
  CHECK(t1.mu == doctest::Approx(0.01));
  CHECK(t1.sigma2 == doctest::Approx(0.2));
  const StudyConfig t2 = study_preset(2);
  CHECK(t2.parameter == StudyParameter::kMu);
  CHECK(t2.grid.size() == 17);
  CHECK(t2.phi == doctest::Approx(0.1));
  CHECK(t2.sigma2 == doctest::Approx(1.0));
  const StudyConfig t3 = study_preset(3);
  CHECK(t3.grid == std::vector<double>{0.05, 0.1, 0.15, 0.2, 0.25});
  CHECK_THROWS(study_preset(4));
}

TEST_CASE("parameter_study is deterministic across thread counts") {
  StudyConfig cfg = study_preset(1);
  cfg.grid = {-0.5, 0.0, 0.3};
  cfg.samples = 40;
  setenv("MVBAYES_THREADS", "1", 1);
  const WinTable serial = parameter_study(cfg);
  setenv("MVBAYES_THREADS", "4", 1);
  const WinTable parallel = parameter_study(cfg);
  unsetenv("MVBAYES_THREADS");
  REQUIRE(serial.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(serial.rows[i].wins == parallel.rows[i].wins);
    CHECK(serial.rows[i].win_probability >= 0.0);
    CHECK(serial.rows[i].win_probability <= 1.0);
    CHECK(serial.rows[i].samples == 40);
  }
  const ReplicateOutcome a = study_replicate(cfg, 0.01, 0.3, 0.2, 5);
  const ReplicateOutcome b = study_replicate(cfg, 0.01, 0.3, 0.2, 5);
  CHECK(a.expected_updated == b.expected_updated);
  CHECK(a.reference_variance == b.reference_variance);
}

TEST_CASE("no-premium-change cell: the fixed plan is already optimal at phi = 0") {
  StudyConfig cfg = study_preset(1);
  cfg.samples = 20;
  for (std::size_t k = 0; k < 20; ++k) {
    const ReplicateOutcome o = study_replicate(cfg, 0.01, 0.0, 0.2, k);
    REQUIRE(o.feasible);
    CHECK(o.expected_updated <= o.expected_fixed + 1e-12);
  }
}

TEST_CASE("sigma2 study: win probability non-decreasing between the end cells") {
  StudyConfig cfg = study_preset(3);
  cfg.grid = {0.05, 0.25};
  const WinTable t = parameter_study(cfg);
  CHECK(t.rows[0].win_probability <= t.rows[1].win_probability);
}

TEST_CASE("backtest without an update segment gives identical frontiers") {
  const Eigen::MatrixXd r = ar_series(0.00207, -0.13366, 0.00085, 156, 1);
  BacktestConfig cfg;
  cfg.upd_len = 0;
  const BacktestResult res = backtest(r, cfg);
  CHECK(res.updated.expected_wealth == res.nonupdated.expected_wealth);

  cfg.upd_len = 26;
  const PlanningInputs in = planning_inputs(r, cfg);
  CHECK(in.updated.size() == 26);
  CHECK(in.nonupdated.size() == 26);
  CHECK(in.order == 1);
  const BacktestResult full = backtest(r, cfg);
  CHECK(full.variance.size() == 41);
  for (std::size_t i = 1; i < full.variance.size(); ++i) CHECK(full.variance[i] > full.variance[i - 1]);
}

TEST_CASE("backtest on a multi-asset series runs the block route") {
  Eigen::MatrixXd phi(2, 2);
  phi << 0.1, 0.05, -0.05, 0.1;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 0.001, 0.0003, 0.0003, 0.0008;
  const Eigen::MatrixXd r = simulate_path(VarModel(Eigen::Vector2d(0.003, 0.002), {phi}, sigma), 156, 2);
  BacktestConfig cfg;
  cfg.order = 0;
  cfg.p_max = 3;
  const BacktestResult res = backtest(r, cfg);
  CHECK(res.order >= 1);
  for (double e : res.updated.expected_wealth) CHECK((std::isnan(e) || e > 0.0));
}

TEST_CASE("exit-time study") {
  const auto spreads = spread_distributions();
  REQUIRE(spreads.size() == 3);
  CHECK(spreads[0].at(26) == doctest::Approx(0.975));
  CHECK(spreads[1].at(24) == doctest::Approx(0.001));
  CHECK(spreads[1].at(25) == doctest::Approx(0.3));
  CHECK(spreads[1].at(26) == doctest::Approx(0.676));
  CHECK(spreads[2].at(15) == doctest::Approx(0.001));
  CHECK(spreads[2].at(16) == doctest::Approx(0.05));
  CHECK(spreads[2].at(25) == doctest::Approx(0.05));
  CHECK(spreads[2].at(26) == doctest::Approx(0.485));

  const Eigen::MatrixXd r = ar_series(0.00207, -0.13366, 0.00085, 156, 3);
  BacktestConfig cfg;
  const ExitStudyResult near = exit_time_study(r, cfg, {ExitDistribution::certain(26), spreads[0], spreads[2]},
                                               {"certain", "P1", "P3"});
  CHECK(near.labels[1] == "P1");
  int close = 0;
  for (std::size_t i = 0; i < near.variance.size(); ++i) {
    const double certain = near.updated[0].expected_wealth[i];
    const double p1 = near.updated[1].expected_wealth[i];
    const double p3 = near.updated[2].expected_wealth[i];
    if (std::isnan(certain) || std::isnan(p1) || std::isnan(p3)) continue;
    CHECK(std::abs(certain - p1) < 0.3 * std::abs(certain - p3));
    ++close;
  }
  CHECK(close > 10);

  const ExitStudyResult horizons = exit_time_study(
      r, cfg, {ExitDistribution::uniform_tail(26, 0.001), ExitDistribution::uniform_tail(13, 0.001)});
  int compared = 0;
  for (std::size_t i = 0; i < horizons.variance.size(); ++i) {
    const double long_e = horizons.updated[0].expected_wealth[i];
    const double short_e = horizons.updated[1].expected_wealth[i];
    if (std::isnan(long_e) || std::isnan(short_e)) continue;
    CHECK(long_e > short_e);
    ++compared;
  }
  CHECK(compared > 10);
}

TEST_CASE("credible intervals") {
  const ArModel model(0.00207, {-0.13366}, 0.00085);
  const double lag = model.mu();
  CredibleConfig cfg;
  cfg.n_sims = 400;
  const CredibleResult res = credible_intervals(model, std::span<const double>(&lag, 1), cfg);
  REQUIRE(res.rows.size() == 5);
  CHECK(res.n_sims == 400);
  for (const auto& row : res.rows) {
    REQUIRE(row.returns.size() == 400 - res.excluded);
    CHECK(row.lower == doctest::Approx(oracle::type7_quantile(row.returns, 0.25)).epsilon(1e-15));
    CHECK(row.upper == doctest::Approx(oracle::type7_quantile(row.returns, 0.75)).epsilon(1e-15));
    CHECK(row.lower <= row.upper);
    CHECK(row.implied_variance > 0.0);
  }
  CHECK(res.rows.front().upper - res.rows.front().lower > res.rows.back().upper - res.rows.back().lower);

  const CredibleResult again = credible_intervals(model, std::span<const double>(&lag, 1), cfg);
  CHECK(again.rows[2].returns == res.rows[2].returns);

  const ArModel quiet(0.00207, {-0.13366}, 0.0);
  CHECK_THROWS_AS(credible_intervals(quiet, std::span<const double>(&lag, 1), cfg), InfeasibleError);
}
