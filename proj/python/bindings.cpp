// Python module _riskd. Structured results cross the boundary as JSON text;
// the riskd package turns them into dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "riskd/error.hpp"
#include "riskd/harness.hpp"
#include "riskd/io.hpp"
#include "riskd/projected.hpp"
#include "riskd/risk.hpp"
#include "riskd/td.hpp"

namespace py = pybind11;
using namespace riskd;

namespace {

RiskMapping make_risk(const std::string& kind, double parameter) {
  if (kind == "expectation") return RiskMapping::expectation();
  if (kind == "mean_semideviation") return RiskMapping::mean_semideviation(parameter);
  if (kind == "cvar") return RiskMapping::cvar(parameter);
  throw InvalidInput("unknown risk kind '" + kind + "' (expectation, mean_semideviation, cvar)");
}

std::string solve(const Matrix& P, const Vector& c, double alpha, const Matrix& phi, const std::string& kind,
                  double parameter, double lambda, bool force) {
  const MarkovChain chain(P, c, alpha);
  const FeatureModel fm(phi, stationary_distribution(chain));
  SolverOptions so;
  so.allow_noncontractive = force;
  const auto m = make_risk(kind, parameter);
  const auto sol = lambda > 0.0 ? solve_multistep(fm, chain, m, lambda, so) : solve_single_step(fm, chain, m, so);
  return io::to_json(sol).dump();
}

std::string distortion(const std::string& kind, double parameter, const Matrix& P, double alpha) {
  return io::to_json(distortion_coefficient(make_risk(kind, parameter), P, alpha)).dump();
}

std::string check_schedule(double a, double b, double p, std::size_t horizon) {
  return io::to_json(validate_schedule({a, b, p}, horizon)).dump();
}

// (summary JSON, {table name: CSV text}, error count)
py::tuple run(const std::string& config, const std::string& base_dir, std::optional<std::uint64_t> seed,
              std::size_t parallel) {
  const auto cfg = harness::parse_experiment(io::parse_json_text(config, "<config>"), base_dir);
  harness::RunOptions opts;
  opts.seed = seed;
  opts.parallel = parallel;
  harness::ExperimentResult res;
  {
    py::gil_scoped_release release;
    res = harness::run_experiment(cfg, opts);
  }
  py::dict tables;
  for (const auto& t : res.tables) {
    std::ostringstream os;
    t.write_csv(os);
    tables[py::str(t.name)] = os.str();
  }
  return py::make_tuple(res.summary.dump(), tables, res.errors);
}

}  // namespace

PYBIND11_MODULE(_riskd, mod) {
  mod.doc() = "risk-averse temporal difference learning";

  py::register_exception<InvalidInput>(mod, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

  mod.def(
      "evaluate",
      [](const std::string& kind, double parameter, const Vector& p, const Vector& v) {
        return evaluate(make_risk(kind, parameter), p, v);
      },
      py::arg("kind"), py::arg("parameter"), py::arg("p"), py::arg("v"));
  mod.def(
      "stationary_distribution",
      [](const Matrix& P) { return stationary_distribution(MarkovChain(P, Vector::Zero(P.rows()), 0.5)).q; },
      py::arg("P"));
  mod.def("solve", &solve, py::arg("P"), py::arg("c"), py::arg("alpha"), py::arg("phi"), py::arg("kind"),
          py::arg("parameter") = 0.0, py::arg("lam") = 0.0, py::arg("force") = false);
  mod.def("distortion", &distortion, py::arg("kind"), py::arg("parameter"), py::arg("P"), py::arg("alpha"));
  mod.def("check_schedule", &check_schedule, py::arg("a"), py::arg("b"), py::arg("p"), py::arg("horizon"));
  mod.def("run", &run, py::arg("config"), py::arg("base_dir") = ".", py::arg("seed") = py::none(),
          py::arg("parallel") = 1);
}
