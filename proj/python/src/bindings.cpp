#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

#include "rabiquench/classical.hpp"
#include "rabiquench/error.hpp"
#include "rabiquench/io.hpp"
#include "rabiquench/qdyn.hpp"
#include "rabiquench/spectra.hpp"
#include "rabiquench/sweep.hpp"

namespace py = pybind11;
using namespace rabiquench;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

TimeSeries from_array(py::array_t<double, py::array::c_style | py::array::forcecast> values, double dt) {
    TimeSeries series;
    series.values.assign(values.data(), values.data() + values.size());
    series.dt = dt;
    return series;
}

py::dict row_dict(const SweepRow& row) {
    py::dict d;
    d["p"] = row.p;
    d["nu0"] = row.fit.nu0;
    d["b"] = row.fit.b;
    d["amplitude"] = row.fit.amplitude;
    d["converged"] = row.fit.converged;
    d["nu0_se"] = row.nu0_se;
    d["b_se"] = row.b_se;
    d["n_traj"] = row.n_trajectories;
    d["failed"] = row.failed;
    d["error"] = row.error;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stochastic impact dynamics of a two-well system";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

    py::enum_<ImpactSide>(m, "ImpactSide").value("LEFT", ImpactSide::Left).value("RIGHT", ImpactSide::Right);
    py::enum_<SidePolicy>(m, "SidePolicy")
        .value("LEFT_ONLY", SidePolicy::LeftOnly)
        .value("RANDOM_SIDE", SidePolicy::RandomSide);
    py::enum_<ClassicalModel>(m, "ClassicalModel")
        .value("FULL", ClassicalModel::FullRandomization)
        .value("CONTINUOUS", ClassicalModel::ContinuityConstrained);
    py::enum_<VelocityMeasure>(m, "VelocityMeasure")
        .value("UNIFORM_AMPLITUDE", VelocityMeasure::UniformAmplitude)
        .value("UNIFORM_SPEED", VelocityMeasure::UniformSpeed);
    py::enum_<WeakeningRule>(m, "WeakeningRule")
        .value("PHASOR", WeakeningRule::Phasor)
        .value("AMPLITUDE_PHASE", WeakeningRule::AmplitudePhase);

    py::class_<StateVector>(m, "StateVector")
        .def(py::init<>())
        .def(py::init([](Complex a, Complex b) { return StateVector{a, b}; }), py::arg("alpha"), py::arg("beta"))
        .def_readwrite("alpha", &StateVector::alpha)
        .def_readwrite("beta", &StateVector::beta)
        .def("norm_squared", &StateVector::norm_squared)
        .def("occupancy_left", &StateVector::occupancy_left)
        .def_static("left", &StateVector::left)
        .def_static("right", &StateVector::right)
        .def_static("ground", &StateVector::ground)
        .def_static("excited", &StateVector::excited);

    py::class_<QuantumModelConfig>(m, "QuantumConfig")
        .def(py::init<>())
        .def_readwrite("omega1", &QuantumModelConfig::omega1)
        .def_readwrite("omega0", &QuantumModelConfig::omega0)
        .def_readwrite("omegaP", &QuantumModelConfig::omegaP)
        .def_readwrite("delta_t_sample", &QuantumModelConfig::delta_t_sample)
        .def_readwrite("p_rate", &QuantumModelConfig::p_rate)
        .def_readwrite("n_cycles", &QuantumModelConfig::n_cycles)
        .def_readwrite("seed", &QuantumModelConfig::seed)
        .def_readwrite("impact_side", &QuantumModelConfig::impact_side)
        .def_static("nh3", &QuantumModelConfig::nh3)
        .def_static("nd3", &QuantumModelConfig::nd3)
        .def("validate", [](const QuantumModelConfig& c) { c.validate(); })
        .def("to_json", [](const QuantumModelConfig& c) { return config_to_json(c).dump(); });

    py::class_<ClassicalModelConfig>(m, "ClassicalConfig")
        .def(py::init<>())
        .def_readwrite("model", &ClassicalModelConfig::model)
        .def_readwrite("epsilon", &ClassicalModelConfig::epsilon)
        .def_readwrite("delta_t_sample", &ClassicalModelConfig::delta_t_sample)
        .def_readwrite("p_rate", &ClassicalModelConfig::p_rate)
        .def_readwrite("n_cycles", &ClassicalModelConfig::n_cycles)
        .def_readwrite("seed", &ClassicalModelConfig::seed)
        .def_readwrite("velocity_measure", &ClassicalModelConfig::velocity_measure)
        .def_readwrite("weakening", &ClassicalModelConfig::weakening)
        .def("validate", &ClassicalModelConfig::validate)
        .def("to_json", [](const ClassicalModelConfig& c) { return config_to_json(c).dump(); });

    m.def("free_propagate", &free_propagate, py::arg("state"), py::arg("t"), py::arg("config"));
    m.def("impact_propagate", &impact_propagate, py::arg("state"), py::arg("duration"), py::arg("side"),
          py::arg("config"));
    m.def("perturbed_splitting", &perturbed_splitting, py::arg("config"));

    m.def(
        "simulate_trajectory",
        [](const QuantumModelConfig& c, const StateVector& initial, std::uint64_t stream) {
            TimeSeries s;
            {
                py::gil_scoped_release release;
                s = simulate_trajectory(c, initial, stream);
            }
            return py::make_tuple(to_array(s.values), s.dt, s.impacts);
        },
        py::arg("config"), py::arg("initial") = StateVector::left(), py::arg("stream") = 0,
        "Returns (y, dt, impact count) where y is the left-well occupancy.");
    m.def(
        "simulate_classical",
        [](const ClassicalModelConfig& c, std::uint64_t stream) {
            TimeSeries s;
            {
                py::gil_scoped_release release;
                s = simulate_classical(c, stream);
            }
            return py::make_tuple(to_array(s.values), s.dt, s.impacts);
        },
        py::arg("config"), py::arg("stream") = 0);

    m.def(
        "periodogram",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> y, double dt, bool remove_mean) {
            const Spectrum s = periodogram(from_array(y, dt), remove_mean);
            return py::make_tuple(to_array(s.frequencies), to_array(s.power));
        },
        py::arg("y"), py::arg("dt"), py::arg("remove_mean") = true, "Returns (nu, power).");
    m.def("vvw_lineshape", &vvw_lineshape, py::arg("nu"), py::arg("b"), py::arg("nu0"));
    m.def(
        "fit_lineshape",
        [](std::vector<double> nu, std::vector<double> power, double nu_min, double nu_max) {
            Spectrum s;
            s.frequencies = std::move(nu);
            s.power = std::move(power);
            const LineshapeFit f = fit_lineshape(s, {nu_min, nu_max});
            py::dict d;
            d["b"] = f.b;
            d["nu0"] = f.nu0;
            d["amplitude"] = f.amplitude;
            d["residual_norm"] = f.residual_norm;
            d["converged"] = f.converged;
            d["pinned_at_zero"] = f.pinned_at_zero;
            return d;
        },
        py::arg("nu"), py::arg("power"), py::arg("nu_min") = 0.0, py::arg("nu_max") = 4.0);

    m.def(
        "run_sweep",
        [](const std::variant<QuantumModelConfig, ClassicalModelConfig>& model, std::vector<double> p_grid,
           std::size_t ensemble, std::size_t threads) {
            SweepOptions o;
            o.ensemble = ensemble;
            o.threads = threads;
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = run_sweep(model, p_grid, o);
            }
            py::list rows;
            for (const auto& row : r.rows) rows.append(row_dict(row));
            std::ostringstream csv;
            write_sweep_csv(csv, r);
            py::dict out;
            out["model"] = r.model;
            out["rows"] = rows;
            out["quench"] = detect_quench(r);
            out["csv"] = csv.str();
            return out;
        },
        py::arg("model"), py::arg("p_grid"), py::arg("ensemble") = 32, py::arg("threads") = 0,
        "Runs a rate sweep; returns rows, the detected quench point and the CSV text.");
    m.def("parse_grid", &parse_grid, py::arg("text"));

    m.attr("__version__") = RABIQUENCH_VERSION_STRING;
}
