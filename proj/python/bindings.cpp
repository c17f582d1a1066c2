#include "biot/assembly.hpp"
#include "biot/config.hpp"
#include "biot/errors.hpp"
#include "biot/problems.hpp"
#include "biot/quadrature.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace biot;

namespace {

using Entries = std::map<std::string, std::string>;

std::optional<Study> parse_study(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  if (*name == "convergence") return Study::Convergence;
  if (*name == "benchmark") return Study::Benchmark;
  if (*name == "run" || *name == "single") return Study::Single;
  throw ConfigError(ConfigError::Kind::InvalidValue, "study",
                    "study must be convergence, benchmark or run, got '" + *name + "'");
}

RunConfig config_from(const Entries& entries, const std::optional<std::string>& study) {
  std::vector<ConfigEntry> list(entries.begin(), entries.end());
  RunConfig c = make_config(list, parse_study(study));
  c.validate();
  return c;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::tuple rule_tuple(const QuadRule& rule) {
  return py::make_tuple(to_array(rule.points), to_array(rule.weights));
}

py::dict convergence(const Entries& entries) {
  const RunConfig c = config_from(entries, std::string("convergence"));
  std::vector<ConvergenceRow> rows;
  {
    py::gil_scoped_release release;
    rows = run_convergence(c.manufactured, c.scheme, c.k, c.r, c.levels, c.solver);
  }
  std::vector<int> level;
  std::vector<double> h, tau, gu, v, p;
  for (const auto& row : rows) {
    level.push_back(row.level);
    h.push_back(row.h);
    tau.push_back(row.tau);
    gu.push_back(row.errors.grad_u);
    v.push_back(row.errors.v);
    p.push_back(row.errors.p);
  }
  py::dict d;
  d["level"] = level;
  d["h"] = to_array(h);
  d["tau"] = to_array(tau);
  d["err_grad_u"] = to_array(gu);
  d["err_v"] = to_array(v);
  d["err_p"] = to_array(p);
  return d;
}

py::dict benchmark(const Entries& entries, int level) {
  const RunConfig c = config_from(entries, std::string("benchmark"));
  const double step = c.tau > 0.0 ? c.tau : c.benchmark.tau(level);
  BenchmarkRun run;
  {
    py::gil_scoped_release release;
    run = run_benchmark(c.benchmark, c.scheme, c.k, c.r, level, step, c.benchmark.T, c.solver);
  }
  const auto [w0, w1] = c.window();
  const GoalCharacteristics ch = goal_characteristics(run.series, w0, w1, step / 4.0);
  py::dict d;
  d["level"] = run.level;
  d["h"] = run.h;
  d["tau"] = run.tau;
  d["t"] = to_array(run.series.t);
  d["G_u"] = to_array(run.series.G_u);
  d["G_p"] = to_array(run.series.G_p);
  d["window"] = py::make_tuple(w0, w1);
  d["min_G_p"] = ch.min_p;
  d["max_G_p"] = ch.max_p;
  d["min_G_u"] = ch.min_u;
  d["max_G_u"] = ch.max_u;
  return d;
}

int run_study(const Entries& entries, const std::optional<std::string>& study) {
  std::vector<ConfigEntry> list(entries.begin(), entries.end());
  const RunConfig c = make_config(list, parse_study(study));
  std::ostringstream err;
  int status = 0;
  {
    py::gil_scoped_release release;
    status = run(c, err);
  }
  if (!err.str().empty()) py::print(err.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
  return status;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Space-time finite elements for the dynamic Biot model";

  static py::exception<Error> biot_error(m, "BiotError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const InvalidArgument& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(biot_error, e.what());
    }
  });

  m.def("gauss_legendre", [](int n) { return rule_tuple(gauss_legendre(n)); }, py::arg("n"),
        "Gauss-Legendre points and weights on [-1, 1].");
  m.def("gauss_radau", [](int n) { return rule_tuple(gauss_radau_right(n)); }, py::arg("n"),
        "Right-sided Gauss-Radau points and weights on [-1, 1].");
  m.def("gauss_lobatto", [](int n) { return rule_tuple(gauss_lobatto(n)); }, py::arg("n"),
        "Gauss-Lobatto points and weights on [-1, 1].");

  m.def(
      "lame_from_E_nu",
      [](double E, double nu) {
        const Lame l = lame_from_E_nu(E, nu);
        return py::make_tuple(l.lambda, l.mu);
      },
      py::arg("E"), py::arg("nu"), "Lame parameters (lambda, mu) of an isotropic material.");

  m.def(
      "manufactured_solution",
      [](double x, double y, double t) {
        const ManufacturedCase mc = ManufacturedCase::defaults(4);
        const auto u = mc.u({x, y}, t);
        const auto v = mc.v({x, y}, t);
        py::dict d;
        d["u"] = py::make_tuple(u[0], u[1]);
        d["v"] = py::make_tuple(v[0], v[1]);
        d["p"] = mc.p({x, y}, t);
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("t"), "Exact fields of the convergence test case.");

  m.def("config_keys", &config_keys, "Keys accepted in a run configuration.");
  m.def(
      "describe",
      [](const Entries& entries, std::optional<std::string> study) {
        return describe(config_from(entries, study));
      },
      py::arg("entries") = Entries{}, py::arg("study") = py::none(),
      "Effective configuration as a single key=value line.");

  m.def("convergence", &convergence, py::arg("entries") = Entries{},
        "Error norms of the manufactured case on each refinement level.");
  m.def("benchmark", &benchmark, py::arg("entries") = Entries{}, py::arg("level") = 0,
        "Goal series and characteristics of the L-shape benchmark on one level.");
  m.def("run", &run_study, py::arg("entries") = Entries{}, py::arg("study") = py::none(),
        "Runs a study and writes its artifacts; returns the exit status.");

  m.def(
      "dominant_period",
      [](const std::vector<double>& t, const std::vector<double>& values, double t_from) {
        return dominant_period(t, values, t_from);
      },
      py::arg("t"), py::arg("values"), py::arg("t_from") = 0.0,
      "Dominant period of a uniformly sampled signal.");

  m.attr("EXIT_SUCCESS") = kExitSuccess;
  m.attr("EXIT_CONFIG_ERROR") = kExitConfigError;
  m.attr("EXIT_SOLVER_FAILURE") = kExitSolverFailure;
}
