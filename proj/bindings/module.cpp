#include "plriv/cli.hpp"
#include "plriv/errors.hpp"
#include "plriv/inference.hpp"
#include "plriv/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace plriv;

PYBIND11_MODULE(_core, m) {
    m.doc() = "One-step RKHS estimation and Bayesian-bootstrap inference for "
              "average marginal effects in partially linear IV models";
    m.attr("__version__") = PLRIV_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

    py::enum_<KernelFamily>(m, "KernelFamily")
        .value("Gaussian", KernelFamily::Gaussian)
        .value("Sobolev", KernelFamily::Sobolev);
    py::enum_<MuFamily>(m, "MuFamily")
        .value("LaplaceProduct", MuFamily::LaplaceProduct)
        .value("GaussianProduct", MuFamily::GaussianProduct);
    py::enum_<Conditioning>(m, "Conditioning")
        .value("XandW", Conditioning::XandW)
        .value("WOnly", Conditioning::WOnly);
    py::enum_<Design>(m, "Design")
        .value("FullyNonparametric", Design::FullyNonparametric)
        .value("PartiallyLinear", Design::PartiallyLinear);
    py::enum_<H0Variant>(m, "H0Variant")
        .value("Quadratic", H0Variant::Quadratic)
        .value("NonPolynomial", H0Variant::NonPolynomial);

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init<>())
        .def_readwrite("family", &KernelSpec::family)
        .def_readwrite("gaussian_length_scale", &KernelSpec::gaussian_length_scale)
        .def_readwrite("sobolev_order", &KernelSpec::sobolev_order);

    py::class_<MuSpec>(m, "MuSpec")
        .def(py::init<>())
        .def_readwrite("family", &MuSpec::family);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](Eigen::VectorXd y, Eigen::VectorXd z, Eigen::MatrixXd x,
                         Eigen::MatrixXd w) {
                 Dataset d{std::move(y), std::move(z), std::move(x), std::move(w)};
                 d.validate();
                 return d;
             }),
             py::arg("y"), py::arg("z"), py::arg("x"), py::arg("w"))
        .def_readonly("Y", &Dataset::Y)
        .def_readonly("Z", &Dataset::Z)
        .def_readonly("X", &Dataset::X)
        .def_readonly("W", &Dataset::W)
        .def_property_readonly("n", &Dataset::n)
        .def("__repr__", [](const Dataset& d) {
            std::ostringstream os;
            os << "Dataset(n=" << d.n() << ", p=" << d.p() << ", m=" << d.m() << ")";
            return os.str();
        });

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("kernel", &FitConfig::kernel)
        .def_readwrite("mu", &FitConfig::mu)
        .def_readwrite("lambda_", &FitConfig::lambda)
        .def_readwrite("standardize_inputs", &FitConfig::standardize_inputs)
        .def_readwrite("conditioning", &FitConfig::conditioning)
        .def_readwrite("include_intercept", &FitConfig::include_intercept);

    py::class_<Fit>(m, "Fit")
        .def_readonly("alpha", &Fit::alpha)
        .def_readonly("beta", &Fit::beta)
        .def_readonly("lambda_", &Fit::lambda)
        .def_readonly("foc_residual", &Fit::foc_residual)
        .def_readonly("solver_rank_deficient", &Fit::solver_rank_deficient)
        .def_readonly("duplicate_z", &Fit::duplicate_z)
        .def("predict_h",
             [](const Fit& f, const Eigen::VectorXd& z) { return predict_h(f, z); },
             py::arg("z"))
        .def("predict_h_deriv",
             [](const Fit& f, const Eigen::VectorXd& z) {
                 return predict_h_deriv(f, z);
             },
             py::arg("z"))
        .def("ame", [](const Fit& f) { return ame(f); });

    m.def("fit", &fit, py::arg("data"), py::arg("config"),
          "Solve the penalized one-step program at the configured lambda");
    m.def("ame", &ame, py::arg("fit"));
    m.def("objective_value", &objective_value, py::arg("data"), py::arg("config"),
          py::arg("alpha"), py::arg("beta"));

    py::class_<LambdaGrid>(m, "LambdaGrid")
        .def(py::init<>())
        .def_readwrite("values", &LambdaGrid::values)
        .def_readonly("criteria", &LambdaGrid::criteria)
        .def_readonly("argmin", &LambdaGrid::argmin);
    m.def("geometric_grid", &geometric_grid, py::arg("lo") = 1e-8,
          py::arg("hi") = 10.0, py::arg("count") = 30);

    py::class_<SelectionResult>(m, "SelectionResult")
        .def_readonly("lambda_", &SelectionResult::lambda)
        .def_readonly("grid", &SelectionResult::grid);
    m.def(
        "select_lambda",
        [](const Dataset& data, const FitConfig& cfg, const LambdaGrid& grid,
           std::uint64_t seed) {
            RandomStream stream(seed, 0);
            return select_lambda(data, cfg, grid, stream);
        },
        py::arg("data"), py::arg("config"), py::arg("grid"), py::arg("seed") = 0,
        "Two-fold cross-validated lambda choice on a shared random split");

    py::class_<Interval>(m, "Interval")
        .def_readonly("lower", &Interval::lower)
        .def_readonly("upper", &Interval::upper)
        .def("__repr__", [](const Interval& iv) {
            std::ostringstream os;
            os << "[" << iv.lower << ", " << iv.upper << "]";
            return os.str();
        });

    py::class_<BootstrapConfig>(m, "BootstrapConfig")
        .def(py::init<>())
        .def_readwrite("B", &BootstrapConfig::B)
        .def_readwrite("level", &BootstrapConfig::level)
        .def_readwrite("seed", &BootstrapConfig::seed)
        .def_readwrite("equal_tail", &BootstrapConfig::equal_tail);

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("theta_hat", &TestResult::theta_hat)
        .def_readonly("theta_H0", &TestResult::theta_H0)
        .def_readonly("draws", &TestResult::draws)
        .def_readonly("q_hat", &TestResult::q_hat)
        .def_readonly("c_hat", &TestResult::c_hat)
        .def_readonly("reject", &TestResult::reject)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("ci", &TestResult::ci)
        .def_readonly("level", &TestResult::level);

    m.def("test", &plriv::test, py::arg("data"), py::arg("config"),
          py::arg("bootstrap"), py::arg("theta0"),
          "Bayesian bootstrap test of H0: theta = theta0");
    m.def("bootstrap_draw", &bootstrap_draw, py::arg("data"), py::arg("config"),
          py::arg("xi"));
    m.def("confidence_interval", &confidence_interval, py::arg("theta_hat"),
          py::arg("draws"), py::arg("level"));
    m.def("empirical_quantile", &empirical_quantile, py::arg("draws"),
          py::arg("level"));

    py::class_<DgpSpec>(m, "DgpSpec")
        .def(py::init<>())
        .def_readwrite("design", &DgpSpec::design)
        .def_readwrite("h0", &DgpSpec::h0)
        .def_readwrite("rho_eps_v", &DgpSpec::rho_eps_v)
        .def_readwrite("rho_zw", &DgpSpec::rho_zw)
        .def_readwrite("n", &DgpSpec::n)
        .def_readwrite("beta_x", &DgpSpec::beta_x)
        .def_readwrite("corr_xw", &DgpSpec::corr_xw);

    m.def(
        "draw_sample",
        [](const DgpSpec& spec, std::uint64_t seed, std::uint64_t stream_id) {
            RandomStream stream(seed, stream_id);
            return draw_sample(spec, stream);
        },
        py::arg("spec"), py::arg("seed"), py::arg("stream_id") = 0);
    m.def("h0_value", &h0_value, py::arg("variant"), py::arg("z"));
    m.def("h0_deriv", &h0_deriv, py::arg("variant"), py::arg("z"));
    m.def("true_ame", &true_ame, py::arg("variant"));

    py::class_<TwoSlsFit>(m, "TwoSlsFit")
        .def_readonly("theta", &TwoSlsFit::theta)
        .def_readonly("se", &TwoSlsFit::se);
    m.def("two_sls", &two_sls, py::arg("data"),
          "Linear 2SLS baseline estimate of the treatment slope");

    py::class_<SizeRow>(m, "SizeRow")
        .def_readonly("level", &SizeRow::level)
        .def_readonly("rate", &SizeRow::rate)
        .def_readonly("rate_2sls", &SizeRow::rate_2sls);
    py::class_<PowerRow>(m, "PowerRow")
        .def_readonly("gamma", &PowerRow::gamma)
        .def_readonly("level", &PowerRow::level)
        .def_readonly("rate", &PowerRow::rate)
        .def_readonly("mc_stderr", &PowerRow::mc_stderr)
        .def_readonly("rate_2sls", &PowerRow::rate_2sls);
    py::class_<SimReport>(m, "SimReport")
        .def_readonly("replications", &SimReport::replications)
        .def_readonly("seed", &SimReport::seed)
        .def_readonly("size_rows", &SimReport::size_rows)
        .def_readonly("power_rows", &SimReport::power_rows)
        .def_readonly("wall_seconds", &SimReport::wall_seconds);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("dgp", &SimConfig::dgp)
        .def_readwrite("levels", &SimConfig::levels)
        .def_readwrite("replications", &SimConfig::replications)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("fit_template", &SimConfig::fit_template)
        .def_readwrite("lambda_grid", &SimConfig::lambda_grid)
        .def_readwrite("warp_speed", &SimConfig::warp_speed)
        .def_readwrite("bootstrap_B", &SimConfig::bootstrap_B)
        .def_readwrite("workers", &SimConfig::workers);

    m.def("run_size_experiment", &run_size_experiment, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_power_curve", &run_power_curve, py::arg("config"), py::arg("gammas"),
          py::call_guard<py::gil_scoped_release>());

    m.def("kernel_value", &kernel_value, py::arg("spec"), py::arg("z"), py::arg("u"));
    m.def("kernel_deriv", &kernel_deriv, py::arg("spec"), py::arg("z"), py::arg("u"));
    m.def(
        "charfn_value",
        [](const MuSpec& spec, const Eigen::VectorXd& v) {
            return charfn_value(spec, v);
        },
        py::arg("spec"), py::arg("v"));
}
