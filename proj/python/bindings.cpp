#include "hysis/errors.hpp"
#include "hysis/estimator.hpp"
#include "hysis/experiments.hpp"
#include "hysis/io.hpp"
#include "hysis/model.hpp"
#include "hysis/simulator.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

namespace py = pybind11;
using namespace hysis;

namespace {

// Structured results cross the boundary as plain dicts, using the same JSON
// shape the CLI writes.
py::object to_python(const Json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

Json from_python(const py::object& o)
{
    return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<double> as_array(const Trajectory& t)
{
    auto v = t.values();
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Integrator integrator_from(const std::string& name)
{
    if (name == "rk4") {
        return Integrator::Rk4;
    }
    if (name == "euler") {
        return Integrator::Euler;
    }
    throw ValidationError("integrator must be rk4 or euler, got " + name);
}

SimulationConfig make_config(int substeps, double sigma, std::uint64_t seed, const std::string& integrator)
{
    SimulationConfig c;
    c.fine_substeps = substeps;
    c.sigma = sigma;
    c.seed = seed;
    c.integrator = integrator_from(integrator);
    return c;
}

} // namespace

PYBIND11_MODULE(_hysis, m)
{
    m.doc() = "Hybrid SIS demand model: simulation and least-squares identification";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<StateRangeError>(m, "StateRangeError", base.ptr());
    py::register_exception<UndefinedRatioError>(m, "UndefinedRatioError", base.ptr());
    py::register_exception<IdentifiabilityError>(m, "IdentifiabilityError", base.ptr());

    py::class_<IntervalParams>(m, "IntervalParams")
        .def(py::init([](double beta, double gamma, std::optional<double> alpha) {
                 IntervalParams p{alpha, beta, gamma};
                 validate(p);
                 return p;
             }),
             py::arg("beta"), py::arg("gamma"), py::arg("alpha") = py::none())
        .def_readonly("alpha", &IntervalParams::alpha)
        .def_readonly("beta", &IntervalParams::beta)
        .def_readonly("gamma", &IntervalParams::gamma)
        .def("__eq__", [](const IntervalParams& a, const IntervalParams& b) { return a == b; })
        .def("__repr__", [](const IntervalParams& p) {
            std::string s = "IntervalParams(beta=" + format_double(p.beta) + ", gamma=" + format_double(p.gamma);
            if (p.alpha) {
                s += ", alpha=" + format_double(*p.alpha);
            }
            return s + ")";
        });

    py::class_<UpdateSchedule>(m, "UpdateSchedule")
        .def(py::init<std::vector<int>, int, double>(), py::arg("update_steps"), py::arg("final_step"),
             py::arg("h"))
        .def_property_readonly("update_steps",
                               [](const UpdateSchedule& s) {
                                   auto v = s.update_steps();
                                   return std::vector<int>(v.begin(), v.end());
                               })
        .def_property_readonly("final_step", &UpdateSchedule::final_step)
        .def_property_readonly("h", &UpdateSchedule::step_size)
        .def_property_readonly("interval_count", &UpdateSchedule::interval_count);

    py::class_<HybridModelSpec>(m, "HybridModelSpec")
        .def(py::init<UpdateSchedule, std::vector<IntervalParams>>(), py::arg("schedule"), py::arg("intervals"))
        .def_static(
            "from_theta",
            [](const UpdateSchedule& s, const std::vector<double>& theta) { return HybridModelSpec::from_theta(s, theta); },
            py::arg("schedule"), py::arg("theta"))
        .def_property_readonly("schedule", &HybridModelSpec::schedule)
        .def_property_readonly("intervals",
                               [](const HybridModelSpec& s) {
                                   auto v = s.intervals();
                                   return std::vector<IntervalParams>(v.begin(), v.end());
                               })
        .def_property_readonly("theta", &HybridModelSpec::theta);

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](const std::vector<double>& values, double h, std::optional<std::int64_t> population) {
                 return Trajectory(values, h, population);
             }),
             py::arg("values"), py::arg("h"), py::arg("population") = py::none())
        .def_property_readonly("values", &as_array)
        .def_property_readonly("h", &Trajectory::step_size)
        .def_property_readonly("population", &Trajectory::population)
        .def("__len__", &Trajectory::size);

    py::class_<Simulation>(m, "Simulation")
        .def_readonly("trajectory", &Simulation::trajectory)
        .def_readonly("clamp_count", &Simulation::clamp_count)
        .def_readonly("warnings", &Simulation::warnings);

    m.def("theta_names", &theta_names, py::arg("updates"));
    m.def("reproduction_number", &reproduction_number, py::arg("params"));

    m.def(
        "load_scenario",
        [](const std::filesystem::path& path) {
            auto s = load_scenario(path);
            return py::make_tuple(s.spec, s.x0);
        },
        py::arg("path"), "Returns (spec, x0) from a scenario JSON file.");
    m.def(
        "scenario_from_dict",
        [](const py::object& d) {
            auto s = scenario_from_json(from_python(d));
            return py::make_tuple(s.spec, s.x0);
        },
        py::arg("scenario"));

    m.def(
        "simulate_dt",
        [](const HybridModelSpec& spec, double x0, bool clamp) {
            return simulate_dt(spec, x0, clamp ? RangePolicy::Clamp : RangePolicy::Error);
        },
        py::arg("spec"), py::arg("x0"), py::arg("clamp") = false);
    m.def(
        "simulate_ct",
        [](const HybridModelSpec& spec, double x0, int substeps, const std::string& integrator) {
            return simulate_ct(spec, x0, make_config(substeps, 0.0, 0, integrator));
        },
        py::arg("spec"), py::arg("x0"), py::arg("substeps") = 100, py::arg("integrator") = "rk4");
    m.def(
        "simulate_sde",
        [](const HybridModelSpec& spec, double x0, double sigma, std::uint64_t seed, int substeps) {
            return simulate_sde(spec, x0, make_config(substeps, sigma, seed, "euler"));
        },
        py::arg("spec"), py::arg("x0"), py::arg("sigma"), py::arg("seed") = 0, py::arg("substeps") = 100);
    m.def("add_observation_noise", &add_observation_noise, py::arg("trajectory"), py::arg("sigma"),
          py::arg("seed") = 0);

    py::class_<RegressionSystem>(m, "RegressionSystem")
        .def_readonly("y", &RegressionSystem::y)
        .def_readonly("psi", &RegressionSystem::psi)
        .def_readonly("h", &RegressionSystem::step_size);
    m.def("build_regression", &build_regression, py::arg("trajectory"), py::arg("schedule"));
    m.def(
        "check_identifiability",
        [](const Trajectory& t, const UpdateSchedule& s) {
            return to_python(to_json(check_identifiability(build_regression(t, s), t, s)));
        },
        py::arg("trajectory"), py::arg("schedule"));
    m.def(
        "estimate",
        [](const Trajectory& t, const UpdateSchedule& s, std::optional<HybridModelSpec> truth, bool lenient) {
            auto system = build_regression(t, s);
            auto report = check_identifiability(system, t, s);
            if (!report.overall && !lenient) {
                throw IdentifiabilityError("parameters are not uniquely identifiable from this trajectory");
            }
            auto result = estimate(system);
            if (truth) {
                result.errors = error_metrics(result, *truth);
            }
            return to_python(to_json(result, report));
        },
        py::arg("trajectory"), py::arg("schedule"), py::arg("truth") = py::none(), py::arg("lenient") = false,
        "Fits every interval and returns the same dict the CLI writes.");
    m.def(
        "forecast",
        [](const HybridModelSpec& params, double x_start, int horizon, int start_step) {
            return forecast(params, x_start, horizon, start_step);
        },
        py::arg("params"), py::arg("x_start"), py::arg("horizon"), py::arg("start_step") = 0);

    m.def(
        "run_noise_study",
        [](const py::object& plan) {
            NoiseStudy study;
            {
                auto p = plan_from_json(from_python(plan));
                py::gil_scoped_release release;
                study = run_noise_study(p);
            }
            return to_python(summary_json(study));
        },
        py::arg("plan"), "Runs a plan given in study JSON form (scenario inline) and returns the summary.");
}
