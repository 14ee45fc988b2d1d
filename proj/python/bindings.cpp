#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mvbayes/bayes_filter.hpp"
#include "mvbayes/data_io.hpp"
#include "mvbayes/errors.hpp"
#include "mvbayes/experiments.hpp"
#include "mvbayes/mv_optimizer.hpp"
#include "mvbayes/returns_model.hpp"

namespace py = pybind11;
using namespace mvbayes;

namespace {

Stationarity stationarity(bool require) { return require ? Stationarity::kRequire : Stationarity::kFlag; }

FrontierForm form_of(bool literal) { return literal ? FrontierForm::kLiteral : FrontierForm::kCorrected; }

std::tuple<Eigen::VectorXd, Eigen::MatrixXd> as_tuple(const Predictive& p) { return {p.f, p.q}; }

std::vector<std::tuple<Eigen::VectorXd, Eigen::MatrixXd>> as_tuples(const std::vector<Predictive>& ps) {
  std::vector<std::tuple<Eigen::VectorXd, Eigen::MatrixXd>> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(as_tuple(p));
  return out;
}

}  // namespace

PYBIND11_MODULE(_mvbayes, m) {
  m.doc() = "Bayesian-updated multi-period mean-variance portfolios with uncertain exit time";
  m.attr("__version__") = MVBAYES_VERSION;

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<EstimationError>(m, "EstimationError", error);
  py::register_exception<DegenerateFilterError>(m, "DegenerateFilterError", error);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", error);
  py::register_exception<DataError>(m, "DataError", error);
  py::register_exception<ConfigError>(m, "ConfigError", error);

  // Return models

  py::class_<ArModel>(m, "ArModel")
      .def(py::init([](double mu, std::vector<double> phi, double sigma2, bool require_stationary) {
             return ArModel(mu, std::move(phi), sigma2, stationarity(require_stationary));
           }),
           py::arg("mu"), py::arg("phi"), py::arg("sigma2"), py::arg("require_stationary") = true)
      .def_property_readonly("mu", &ArModel::mu)
      .def_property_readonly("intercept", &ArModel::intercept)
      .def_property_readonly("phi", &ArModel::phi)
      .def_property_readonly("sigma2", &ArModel::sigma2)
      .def_property_readonly("order", &ArModel::order)
      .def_property_readonly("stationary", &ArModel::stationary)
      .def("companion", &ArModel::companion)
      .def("__repr__", [](const ArModel& a) {
        return "ArModel(mu=" + std::to_string(a.mu()) + ", order=" + std::to_string(a.order()) +
               ", sigma2=" + std::to_string(a.sigma2()) + ")";
      });

  py::class_<VarModel>(m, "VarModel")
      .def(py::init([](Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> phi, Eigen::MatrixXd sigma,
                       bool require_stationary) {
             return VarModel(std::move(mu), std::move(phi), std::move(sigma), stationarity(require_stationary));
           }),
           py::arg("mu"), py::arg("phi"), py::arg("sigma"), py::arg("require_stationary") = true)
      .def_static("from_ar", &VarModel::from_ar)
      .def_property_readonly("mu", &VarModel::mu)
      .def_property_readonly("intercept", &VarModel::intercept)
      .def_property_readonly("phi", &VarModel::phi)
      .def_property_readonly("sigma", &VarModel::sigma)
      .def_property_readonly("assets", &VarModel::assets)
      .def_property_readonly("order", &VarModel::order)
      .def_property_readonly("stationary", &VarModel::stationary)
      .def("companion", &VarModel::companion);

  py::class_<ArFit>(m, "ArFit")
      .def_readonly("model", &ArFit::model)
      .def_readonly("theta", &ArFit::theta)
      .def_readonly("c0", &ArFit::c0)
      .def_readonly("rows", &ArFit::rows);

  py::class_<VarFit>(m, "VarFit")
      .def_readonly("model", &VarFit::model)
      .def_readonly("pi", &VarFit::pi)
      .def_readonly("c0", &VarFit::c0)
      .def_readonly("rows", &VarFit::rows);

  py::class_<OrderSelection>(m, "OrderSelection")
      .def_readonly("order", &OrderSelection::order)
      .def_readonly("aic", &OrderSelection::aic);

  m.def("fit_ar", [](const std::vector<double>& r, int p) { return fit_ols(std::span<const double>(r), p); },
        py::arg("returns"), py::arg("p"), "OLS fit of an AR(p) model with intercept.");
  m.def("fit_var", [](const Eigen::MatrixXd& r, int p) { return fit_ols(r, p); }, py::arg("returns"), py::arg("p"),
        "OLS fit of a VAR(p) model; rows are periods, columns are assets.");
  m.def("select_order", [](const std::vector<double>& r, int p_max) { return select_order(std::span<const double>(r), p_max); },
        py::arg("returns"), py::arg("p_max"));
  m.def("select_order", [](const Eigen::MatrixXd& r, int p_max) { return select_order(r, p_max); }, py::arg("returns"),
        py::arg("p_max"));

  m.def(
      "simulate_path",
      [](const ArModel& model, std::size_t length, std::uint64_t seed, std::optional<std::vector<double>> init) {
        if (!init) return simulate_path(model, length, seed);
        return simulate_path(model, length, seed, std::span<const double>(*init));
      },
      py::arg("model"), py::arg("length"), py::arg("seed"), py::arg("init") = py::none());
  m.def(
      "simulate_path",
      [](const VarModel& model, std::size_t length, std::uint64_t seed, std::optional<Eigen::MatrixXd> init) {
        return simulate_path(model, length, seed, init);
      },
      py::arg("model"), py::arg("length"), py::arg("seed"), py::arg("init") = py::none());

  m.def(
      "forecast_moments",
      [](const ArModel& model, const std::vector<double>& lags, int horizon) {
        std::vector<std::tuple<double, double>> out;
        for (const auto& s : forecast_moments(model, std::span<const double>(lags), horizon)) out.emplace_back(s.mean, s.variance);
        return out;
      },
      py::arg("model"), py::arg("lags"), py::arg("horizon"), "List of (mean, variance) per step ahead.");
  m.def(
      "forecast_moments",
      [](const VarModel& model, const Eigen::MatrixXd& lags, int horizon) {
        std::vector<std::tuple<Eigen::VectorXd, Eigen::MatrixXd>> out;
        for (const auto& s : forecast_moments(model, lags, horizon)) out.emplace_back(s.mean, s.cov);
        return out;
      },
      py::arg("model"), py::arg("lags"), py::arg("horizon"));

  // Filtering

  py::class_<FilterState>(m, "FilterState")
      .def_readonly("m", &FilterState::m)
      .def_readonly("c", &FilterState::c)
      .def_readonly("noise", &FilterState::noise)
      .def_readonly("lags", &FilterState::lags)
      .def_readonly("t", &FilterState::t)
      .def_readonly("assets", &FilterState::assets)
      .def_readonly("order", &FilterState::order);

  py::class_<FilterRun>(m, "FilterRun")
      .def_readonly("final_state", &FilterRun::final_state)
      .def_property_readonly("predictive", [](const FilterRun& r) { return as_tuples(r.predictive); })
      .def_readonly("posterior", &FilterRun::posterior);

  m.def(
      "init_filter",
      [](const ArModel& model, const Eigen::MatrixXd& c0, const std::vector<double>& lags) {
        return init_filter(model, c0, std::span<const double>(lags));
      },
      py::arg("model"), py::arg("c0"), py::arg("lags"));
  m.def(
      "init_filter",
      [](const VarModel& model, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& lags) {
        return init_filter(model, c0, lags);
      },
      py::arg("model"), py::arg("c0"), py::arg("lags"));
  m.def("predict", [](const FilterState& s) { return as_tuple(predict(s)); }, py::arg("state"),
        "One-step-ahead predictive (f, Q).");
  m.def("update", py::overload_cast<const FilterState&, const Eigen::VectorXd&>(&update), py::arg("state"),
        py::arg("observed"));
  m.def("filter_series", py::overload_cast<const FilterState&, const Eigen::MatrixXd&>(&filter_series),
        py::arg("state"), py::arg("series"));
  m.def("forecast_from_state",
        [](const FilterState& s, int horizon) { return as_tuples(forecast_from_state(s, horizon)); },
        py::arg("state"), py::arg("horizon"));

  // Mean-variance optimisation

  py::class_<ExitDistribution>(m, "ExitDistribution")
      .def(py::init<std::vector<double>>(), py::arg("probs"))
      .def_static("certain", &ExitDistribution::certain, py::arg("horizon"))
      .def_static("uniform", &ExitDistribution::uniform, py::arg("horizon"))
      .def_static("uniform_tail", &ExitDistribution::uniform_tail, py::arg("horizon"), py::arg("mass"))
      .def_static("parse", &ExitDistribution::parse, py::arg("spec"), py::arg("horizon"))
      .def_property_readonly("horizon", &ExitDistribution::horizon)
      .def_property_readonly("probs", &ExitDistribution::probs);

  py::class_<ExcessMoment>(m, "ExcessMoment")
      .def(py::init([](double mean, double second, double r0) { return ExcessMoment{mean, second, r0}; }),
           py::arg("mean"), py::arg("second"), py::arg("r0"))
      .def_readonly("mean", &ExcessMoment::mean)
      .def_readonly("second", &ExcessMoment::second)
      .def_readonly("r0", &ExcessMoment::r0);

  m.def("excess_moments", py::overload_cast<double, double, double>(&excess_moments), py::arg("f"), py::arg("q"),
        py::arg("r0"), "Excess-return moments from a gross predictive mean f and variance q.");

  py::class_<DpCoefficients>(m, "DpCoefficients")
      .def_readonly("dp_omega", &DpCoefficients::dp_omega)
      .def_readonly("dp_lambda", &DpCoefficients::dp_lambda)
      .def_readonly("theta", &DpCoefficients::theta)
      .def_readonly("k", &DpCoefficients::k)
      .def_readonly("big_theta", &DpCoefficients::big_theta);

  m.def(
      "dp_coefficients",
      [](const std::vector<ExcessMoment>& moments, const ExitDistribution& exit) {
        return dp_coefficients(std::span<const ExcessMoment>(moments), exit);
      },
      py::arg("moments"), py::arg("exit"));
  m.def("lambda_star", &lambda_star, py::arg("coeffs"), py::arg("risk_aversion"), py::arg("x0"));
  m.def("expected_terminal_wealth", &expected_terminal_wealth, py::arg("coeffs"), py::arg("risk_aversion"),
        py::arg("x0"));
  m.def("min_expected_wealth", &min_expected_wealth, py::arg("coeffs"), py::arg("x0"));
  m.def(
      "min_variance", [](const DpCoefficients& c, double x0, bool literal) { return min_variance(c, x0, form_of(literal)); },
      py::arg("coeffs"), py::arg("x0"), py::arg("literal") = false);
  m.def(
      "frontier_variance",
      [](const DpCoefficients& c, double x0, double e, bool literal) { return frontier_variance(c, x0, e, form_of(literal)); },
      py::arg("coeffs"), py::arg("x0"), py::arg("expected_wealth"), py::arg("literal") = false);
  m.def(
      "frontier",
      [](const DpCoefficients& c, double x0, const std::vector<double>& targets, bool literal) {
        std::vector<std::tuple<double, double>> out;
        for (const auto& p : frontier(c, x0, std::span<const double>(targets), form_of(literal)))
          out.emplace_back(p.expected_wealth, p.variance);
        return out;
      },
      py::arg("coeffs"), py::arg("x0"), py::arg("targets"), py::arg("literal") = false,
      "List of (expected_wealth, variance) pairs.");
  m.def("expected_wealth_at_variance", &expected_wealth_at_variance, py::arg("coeffs"), py::arg("x0"),
        py::arg("variance"));

  py::class_<Policy>(m, "Policy")
      .def_readonly("a", &Policy::a)
      .def_readonly("b", &Policy::b)
      .def_readonly("r0", &Policy::r0)
      .def("allocation", &Policy::allocation, py::arg("t"), py::arg("wealth"));
  m.def(
      "optimal_policy",
      [](const DpCoefficients& c, const std::vector<ExcessMoment>& moments, double risk_aversion, double x0) {
        return optimal_policy(c, std::span<const ExcessMoment>(moments), risk_aversion, x0);
      },
      py::arg("coeffs"), py::arg("moments"), py::arg("risk_aversion"), py::arg("x0"));

  // Studies

  py::class_<StudyConfig>(m, "StudyConfig")
      .def(py::init<>())
      .def_readwrite("grid", &StudyConfig::grid)
      .def_readwrite("mu", &StudyConfig::mu)
      .def_readwrite("phi", &StudyConfig::phi)
      .def_readwrite("sigma2", &StudyConfig::sigma2)
      .def_readwrite("samples", &StudyConfig::samples)
      .def_readwrite("est_len", &StudyConfig::est_len)
      .def_readwrite("horizon", &StudyConfig::horizon)
      .def_readwrite("riskfree_net", &StudyConfig::riskfree_net)
      .def_readwrite("exit", &StudyConfig::exit)
      .def_readwrite("x0", &StudyConfig::x0)
      .def_readwrite("vref_multiplier", &StudyConfig::vref_multiplier)
      .def_readwrite("seed", &StudyConfig::seed)
      .def_property_readonly("parameter", [](const StudyConfig& c) { return std::string(to_string(c.parameter)); });

  py::class_<WinRow>(m, "WinRow")
      .def_readonly("value", &WinRow::value)
      .def_readonly("win_probability", &WinRow::win_probability)
      .def_readonly("wins", &WinRow::wins)
      .def_readonly("samples", &WinRow::samples)
      .def_readonly("skipped", &WinRow::skipped)
      .def_readonly("stationary", &WinRow::stationary);

  m.def("study_preset", &study_preset, py::arg("table"));
  m.def("parameter_study", [](const StudyConfig& c) { return parameter_study(c).rows; }, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<BacktestConfig>(m, "BacktestConfig")
      .def(py::init<>())
      .def_property(
          "convention", [](const BacktestConfig& c) { return std::string(to_string(c.convention)); },
          [](BacktestConfig& c, const std::string& s) { c.convention = parse_convention(s); })
      .def_readwrite("order", &BacktestConfig::order)
      .def_readwrite("p_max", &BacktestConfig::p_max)
      .def_readwrite("est_len", &BacktestConfig::est_len)
      .def_readwrite("upd_len", &BacktestConfig::upd_len)
      .def_readwrite("horizon", &BacktestConfig::horizon)
      .def_readwrite("riskfree_net", &BacktestConfig::riskfree_net)
      .def_readwrite("exit", &BacktestConfig::exit)
      .def_readwrite("x0", &BacktestConfig::x0)
      .def_readwrite("omega", &BacktestConfig::omega)
      .def_readwrite("grid_points", &BacktestConfig::grid_points);

  py::class_<FrontierCurve>(m, "FrontierCurve")
      .def_readonly("coeffs", &FrontierCurve::coeffs)
      .def_readonly("expected_wealth", &FrontierCurve::expected_wealth)
      .def_readonly("expected_wealth_literal", &FrontierCurve::expected_wealth_literal);

  py::class_<BacktestResult>(m, "BacktestResult")
      .def_readonly("order", &BacktestResult::order)
      .def_readonly("stationary", &BacktestResult::stationary)
      .def_readonly("variance", &BacktestResult::variance)
      .def_readonly("updated", &BacktestResult::updated)
      .def_readonly("nonupdated", &BacktestResult::nonupdated);

  m.def("backtest", &backtest, py::arg("returns"), py::arg("config"));

  py::class_<CredibleConfig>(m, "CredibleConfig")
      .def(py::init<>())
      .def_readwrite("omegas", &CredibleConfig::omegas)
      .def_readwrite("alpha", &CredibleConfig::alpha)
      .def_readwrite("n_sims", &CredibleConfig::n_sims)
      .def_readwrite("seed", &CredibleConfig::seed)
      .def_readwrite("horizon", &CredibleConfig::horizon)
      .def_readwrite("exit", &CredibleConfig::exit)
      .def_readwrite("riskfree_net", &CredibleConfig::riskfree_net)
      .def_readwrite("x0", &CredibleConfig::x0);

  py::class_<CredibleRow>(m, "CredibleRow")
      .def_readonly("omega", &CredibleRow::omega)
      .def_readonly("expected_return", &CredibleRow::expected_return)
      .def_readonly("lower", &CredibleRow::lower)
      .def_readonly("upper", &CredibleRow::upper)
      .def_readonly("implied_variance", &CredibleRow::implied_variance)
      .def_readonly("returns", &CredibleRow::returns);

  py::class_<CredibleResult>(m, "CredibleResult")
      .def_readonly("rows", &CredibleResult::rows)
      .def_readonly("n_sims", &CredibleResult::n_sims)
      .def_readonly("excluded", &CredibleResult::excluded);

  m.def(
      "credible_intervals",
      [](const ArModel& model, const std::vector<double>& lags, const CredibleConfig& c) {
        return credible_intervals(model, std::span<const double>(lags), c);
      },
      py::arg("model"), py::arg("lags"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

  // Data

  py::class_<PriceSeries>(m, "PriceSeries")
      .def_readonly("dates", &PriceSeries::dates)
      .def_readonly("tickers", &PriceSeries::tickers)
      .def_readonly("prices", &PriceSeries::prices)
      .def("__len__", &PriceSeries::size);

  m.def("load_prices", &load_prices, py::arg("path"));
  m.def(
      "to_returns",
      [](const PriceSeries& p, const std::string& convention) { return to_returns(p, parse_convention(convention)); },
      py::arg("prices"), py::arg("convention") = "net");
}
