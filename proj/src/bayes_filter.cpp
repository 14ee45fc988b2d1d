#include "mvbayes/bayes_filter.hpp"

#include <stdexcept>
#include <string>

#include "mvbayes/errors.hpp"
#include "mvbayes/numeric.hpp"

namespace mvbayes {

namespace {

void check_prior(const Eigen::MatrixXd& c0, Eigen::Index dim) {
  if (c0.rows() != dim || c0.cols() != dim) {
    throw std::invalid_argument("init_filter: prior covariance must be " + std::to_string(dim) + " x " +
                                std::to_string(dim));
  }
}

void shift_lags(FilterState& state, const Eigen::VectorXd& observed) {
  const int p = state.order;
  if (p > 1) state.lags.topRows(p - 1) = state.lags.bottomRows(p - 1).eval();
  state.lags.row(p - 1) = observed.transpose();
}

Eigen::MatrixXd block_design(const Eigen::VectorXd& z, int n) {
  const Eigen::Index k = z.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n * k);
  for (int i = 0; i < n; ++i) h.block(i, i * k, 1, k) = z.transpose();
  return h;
}

void check_observation(const FilterState& state, const Eigen::VectorXd& observed) {
  if (observed.size() != state.assets) {
    throw std::invalid_argument("update: observation has " + std::to_string(observed.size()) +
                                " components, filter tracks " + std::to_string(state.assets));
  }
  if (!observed.allFinite()) throw std::invalid_argument("update: observation is not finite");
}

}  // namespace

FilterState init_filter(const ArModel& model, const Eigen::MatrixXd& c0, std::span<const double> lags) {
  const int p = model.order();
  if (lags.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("init_filter: expected " + std::to_string(p) + " initial lags, got " +
                                std::to_string(lags.size()));
  }
  check_prior(c0, p + 1);
  FilterState s;
  s.kind = FilterKind::kAr;
  s.assets = 1;
  s.order = p;
  s.m = model.regression_coefficients();
  s.c = project_psd(c0, "prior covariance C0");
  s.noise = Eigen::MatrixXd::Constant(1, 1, model.sigma2());
  s.lags.resize(p, 1);
  for (int j = 0; j < p; ++j) s.lags(j, 0) = lags[static_cast<std::size_t>(j)];
  return s;
}

FilterState init_filter(const VarModel& model, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& lags) {
  const int p = model.order();
  const int n = model.assets();
  if (lags.rows() != p || lags.cols() != n) {
    throw std::invalid_argument("init_filter: initial lags must be " + std::to_string(p) + " x " +
                                std::to_string(n));
  }
  check_prior(c0, static_cast<Eigen::Index>(n) * model.regressors());
  FilterState s;
  s.kind = FilterKind::kVar;
  s.assets = n;
  s.order = p;
  s.m = model.regression_vector();
  s.c = project_psd(c0, "prior covariance C0");
  s.noise = model.sigma();
  s.lags = lags;
  return s;
}

Eigen::VectorXd design_row(const FilterState& state) {
  const int n = state.assets;
  Eigen::VectorXd z(state.regressors());
  z(0) = 1.0;
  for (int j = 1; j <= state.order; ++j) {
    z.segment(1 + (j - 1) * n, n) = state.lags.row(state.order - j).transpose();
  }
  return z;
}

namespace detail {

Predictive scalar_predict(const FilterState& state, const Eigen::VectorXd& f_row) {
  const double f = f_row.dot(state.m);
  const double q = f_row.dot(state.c * f_row) + state.noise(0, 0);
  return {Eigen::VectorXd::Constant(1, f), Eigen::MatrixXd::Constant(1, 1, q)};
}

void scalar_update(FilterState& state, const Eigen::VectorXd& f_row, double observed) {
  const Predictive pred = scalar_predict(state, f_row);
  const double f = pred.f(0);
  const double q = pred.q(0, 0);
  if (!(q > 0.0)) {
    throw DegenerateFilterError(
        "predictive variance is zero: prior covariance and observation noise are both degenerate");
  }
  const Eigen::VectorXd gain = state.c * f_row / q;
  state.m += gain * (observed - f);
  state.c -= gain * q * gain.transpose();
  state.c = project_psd(state.c, "posterior covariance");
}

Predictive block_predict(const FilterState& state, const Eigen::VectorXd& z) {
  const Eigen::MatrixXd h = block_design(z, state.assets);
  return {h * state.m, symmetrize(h * state.c * h.transpose() + state.noise)};
}

void block_update(FilterState& state, const Eigen::VectorXd& z, const Eigen::VectorXd& observed) {
  const Eigen::MatrixXd h = block_design(z, state.assets);
  const Eigen::VectorXd f = h * state.m;
  const Eigen::MatrixXd q = symmetrize(h * state.c * h.transpose() + state.noise);
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    throw DegenerateFilterError(
        "predictive covariance is singular: prior covariance and observation noise are both degenerate");
  }
  // A = C H' Q^-1, obtained as (Q^-1 H C)' since Q and C are symmetric.
  const Eigen::MatrixXd gain = llt.solve(h * state.c).transpose();
  state.m += gain * (observed - f);
  state.c -= gain * q * gain.transpose();
  state.c = project_psd(state.c, "posterior covariance");
}

}  // namespace detail

Predictive predict_with_design(const FilterState& state, const Eigen::VectorXd& z) {
  if (z.size() != state.regressors()) {
    throw std::invalid_argument("design row must have length " + std::to_string(state.regressors()));
  }
  return state.kind == FilterKind::kAr ? detail::scalar_predict(state, z) : detail::block_predict(state, z);
}

FilterState update_with_design(const FilterState& state, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& observed) {
  if (z.size() != state.regressors()) {
    throw std::invalid_argument("design row must have length " + std::to_string(state.regressors()));
  }
  check_observation(state, observed);
  FilterState next = state;
  if (state.kind == FilterKind::kAr) {
    detail::scalar_update(next, z, observed(0));
  } else {
    detail::block_update(next, z, observed);
  }
  ++next.t;
  return next;
}

Predictive predict(const FilterState& state) { return predict_with_design(state, design_row(state)); }

FilterState update(const FilterState& state, const Eigen::VectorXd& observed) {
  FilterState next = update_with_design(state, design_row(state), observed);
  shift_lags(next, observed);
  return next;
}

FilterState update(const FilterState& state, double observed) {
  return update(state, Eigen::VectorXd::Constant(1, observed));
}

FilterRun filter_series(const FilterState& state, const Eigen::MatrixXd& series) {
  if (series.rows() == 0) throw std::invalid_argument("filter_series: empty series");
  if (series.cols() != state.assets) {
    throw std::invalid_argument("filter_series: series has " + std::to_string(series.cols()) +
                                " columns, filter tracks " + std::to_string(state.assets));
  }
  FilterRun run{state, {}, {}};
  run.predictive.reserve(static_cast<std::size_t>(series.rows()));
  run.posterior.reserve(static_cast<std::size_t>(series.rows()));
  for (Eigen::Index i = 0; i < series.rows(); ++i) {
    run.predictive.push_back(predict(run.final_state));
    run.final_state = update(run.final_state, Eigen::VectorXd(series.row(i).transpose()));
    run.posterior.push_back(run.final_state.m);
  }
  return run;
}

FilterRun filter_series(const FilterState& state, std::span<const double> series) {
  const Eigen::Map<const Eigen::VectorXd> column(series.data(), static_cast<Eigen::Index>(series.size()));
  return filter_series(state, Eigen::MatrixXd(column));
}

std::vector<Predictive> forecast_from_state(const FilterState& state, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast_from_state: horizon must be >= 1");
  std::vector<Predictive> out;
  out.reserve(static_cast<std::size_t>(horizon));
  out.push_back(predict(state));
  if (horizon == 1) return out;

  if (state.kind == FilterKind::kAr) {
    const ArModel point = ArModel::from_regression(state.m, state.noise(0, 0), Stationarity::kFlag);
    const std::vector<double> lags(state.lags.data(), state.lags.data() + state.order);
    const auto path = forecast_moments(point, lags, horizon);
    for (int h = 1; h < horizon; ++h) {
      const auto& mom = path[static_cast<std::size_t>(h)];
      out.push_back({Eigen::VectorXd::Constant(1, mom.mean), Eigen::MatrixXd::Constant(1, 1, mom.variance)});
    }
  } else {
    const Eigen::Map<const Eigen::MatrixXd> pi(state.m.data(), state.regressors(), state.assets);
    const VarModel point = VarModel::from_regression(pi, state.noise, Stationarity::kFlag);
    const auto path = forecast_moments(point, state.lags, horizon);
    for (int h = 1; h < horizon; ++h) {
      const auto& mom = path[static_cast<std::size_t>(h)];
      out.push_back({mom.mean, mom.cov});
    }
  }
  return out;
}

}  // namespace mvbayes
