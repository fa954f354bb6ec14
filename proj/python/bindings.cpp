// Python module fedstab._core. Value objects (Scenario, GainReport,
// MutualGainVector, AllocationTable) are opaque handles; results come back
// as plain dicts shaped like the CLI's JSON output.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedstab/clustering_opt.hpp"
#include "fedstab/dynamics.hpp"
#include "fedstab/error.hpp"
#include "fedstab/io.hpp"
#include "fedstab/stable_set.hpp"

namespace py = pybind11;
using namespace fedstab;
using io::Json;

namespace {

py::object to_python(const Json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

Json from_python(const py::handle& obj) {
  return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

Partition partition_arg(const py::handle& blocks, int n) { return io::partition_from_json(from_python(blocks), n); }

Mask mask_arg(const std::vector<int>& members, int n) { return Coalition::of(members, n).mask(); }

py::dict trace_dict(const DynamicsTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps) steps.push_back(io::to_json(s));
  Json doc = io::trace_footer(trace);
  doc["steps"] = std::move(steps);
  doc["partition"] = io::to_json(partition_of(trace.terminal));
  return to_python(doc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nash-stable clustering of federated-learning agents";
  m.attr("__version__") = std::string(io::kToolVersion);

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_OverflowError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("n", &Scenario::n)
      .def_readonly("dim", &Scenario::dim)
      .def_readonly("seed", &Scenario::seed)
      .def("to_json", [](const Scenario& s) { return io::dump(io::to_json(s)); })
      .def("content_hash", [](const Scenario& s) { return io::scenario_hash(s); })
      .def_static("from_json", [](const std::string& text) { return io::scenario_from_json(Json::parse(text)); });

  m.def(
      "generate_scenario",
      [](int n, int dim, std::uint64_t seed, const std::string& evaluator, const std::string& gain_fn, double gain_scale,
         double cost, double mae_weight, int min_data, int max_data, double min_reliability, double max_reliability,
         bool infinite_data, std::optional<double> fallback_loss) {
        GenerationKnobs k;
        if (evaluator == "regression") {
          k.evaluator = EvaluatorKind::kRegression;
        } else if (evaluator != "quadratic") {
          throw ContractError("evaluator must be 'quadratic' or 'regression'");
        }
        k.gain_fn = {gain_fn_kind_from_string(gain_fn), gain_scale};
        k.cost_per_agent = cost;
        k.mae_weight = mae_weight;
        k.min_data = min_data;
        k.max_data = max_data;
        k.min_reliability = min_reliability;
        k.max_reliability = max_reliability;
        k.infinite_data = infinite_data;
        k.fallback_loss = fallback_loss;
        return generate_scenario(n, dim, seed, k);
      },
      py::arg("n"), py::arg("dim") = 2, py::arg("seed") = 0, py::arg("evaluator") = "quadratic",
      py::arg("gain_fn") = "linear", py::arg("gain_scale") = 1.0, py::arg("cost") = 0.01, py::arg("mae_weight") = 0.5,
      py::arg("min_data") = 10, py::arg("max_data") = 100, py::arg("min_reliability") = 0.5,
      py::arg("max_reliability") = 1.0, py::arg("infinite_data") = false, py::arg("fallback_loss") = py::none());

  m.def(
      "expected_loss",
      [](const Scenario& s, const std::vector<int>& members) { return expected_loss(Coalition::of(members, s.n), s); },
      py::arg("scenario"), py::arg("members"));

  py::class_<GainReport>(m, "GainReport")
      .def_static("from_scenario", &GainReport::from_scenario)
      .def_static("from_marginal", &GainReport::from_marginal, py::arg("n"), py::arg("delta"), py::arg("pi"))
      .def_property_readonly("n", &GainReport::population)
      .def("u", [](const GainReport& r, const std::vector<int>& s) { return r.u(mask_arg(s, r.population())); })
      .def("delta", [](const GainReport& r, const std::vector<int>& s) { return r.delta(mask_arg(s, r.population())); })
      .def("pi", &GainReport::pi)
      .def("is_superadditive", [](const GainReport& r) { return is_superadditive(r).superadditive; })
      .def("to_dict", [](const GainReport& r) { return to_python(io::to_json(r)); });

  py::class_<MutualGainVector>(m, "MutualGainVector")
      .def(py::init<int>(), py::arg("n"))
      .def_property_readonly("n", &MutualGainVector::population)
      .def("set", &MutualGainVector::set, py::arg("i"), py::arg("j"), py::arg("value"))
      .def("__call__", [](const MutualGainVector& v, int i, int j) { return v(i, j); })
      .def("values", [](const MutualGainVector& v) { return v.values(); })
      .def("to_dict", [](const MutualGainVector& v) { return to_python(io::to_json(v)); });

  py::class_<AllocationTable>(m, "AllocationTable")
      .def(py::init<int>(), py::arg("n"))
      .def_property_readonly("n", &AllocationTable::population)
      .def("set", [](AllocationTable& phi, int i, const std::vector<int>& s,
                     double value) { phi.set(i, mask_arg(s, phi.population()), value); })
      .def("__call__", [](const AllocationTable& phi, int i, const std::vector<int>& s) {
        return phi.at(i, mask_arg(s, phi.population()));
      })
      .def("to_dict", [](const AllocationTable& phi) { return to_python(io::to_json(phi)); });

  m.def("phi_from_v", &phi_from_v, py::arg("v"));

  m.def(
      "enumerate_partitions",
      [](int n) {
        py::list out;
        PartitionEnumerator it(n);
        while (auto p = it.next()) out.append(to_python(io::to_json(*p)));
        return out;
      },
      py::arg("n"));

  m.def(
      "check_nash_stable",
      [](const py::handle& blocks, const AllocationTable& phi) {
        return to_python(io::to_json(check_nash_stable(partition_arg(blocks, phi.population()), phi)));
      },
      py::arg("partition"), py::arg("phi"));

  m.def(
      "nash_stable_partitions",
      [](const AllocationTable& phi, int threads) {
        py::list out;
        for (const auto& p : nash_stable_partitions(phi, threads)) out.append(to_python(io::to_json(p)));
        return out;
      },
      py::arg("phi"), py::arg("threads") = 1);

  m.def(
      "find_general_allocation", [](const GainReport& r) { return to_python(io::to_json(find_general_allocation(r))); },
      py::arg("report"));

  m.def(
      "solve_symmetric_lp",
      [](const GainReport& r) {
        const auto result = solve_symmetric_lp(r);
        py::dict out = to_python(io::to_json(result));
        out["v"] = std::get<MutualGainVector>(result.allocation);
        return out;
      },
      py::arg("report"));

  m.def(
      "lp_solve",
      [](const std::vector<double>& c, const std::vector<std::pair<std::vector<double>, double>>& rows) {
        lp::Problem p;
        p.num_vars = static_cast<int>(c.size());
        p.objective = c;
        for (const auto& [a, b] : rows) p.rows.push_back({a, b});
        const auto sol = lp::solve(p);
        return to_python(io::to_json(sol, lp::certify(p, sol)));
      },
      py::arg("c"), py::arg("rows"), "Maximise c.x subject to a.x <= b for each (a, b); x is free.");

  m.def(
      "potential", [](const std::vector<int>& labels, const MutualGainVector& v) { return potential(StrategyTuple(labels), v); },
      py::arg("labels"), py::arg("v"));

  m.def(
      "run_dynamics",
      [](const MutualGainVector& v, const std::vector<int>& start, const std::string& schedule, std::uint64_t seed,
         std::int64_t max_steps) {
        Schedule sch;
        if (schedule == "random") {
          sch = Schedule::random(seed);
        } else if (schedule != "round-robin") {
          throw ContractError("schedule must be 'round-robin' or 'random'");
        }
        const StrategyTuple s = start.empty() ? StrategyTuple::singletons(v.population()) : StrategyTuple(start);
        return trace_dict(run_dynamics(s, v, sch, max_steps));
      },
      py::arg("v"), py::arg("start") = std::vector<int>{}, py::arg("schedule") = "round-robin", py::arg("seed") = 0,
      py::arg("max_steps") = 100000);

  m.def(
      "optimal_clustering",
      [](const GainReport& r, const std::string& direction) {
        if (direction != "min" && direction != "max") throw ContractError("direction must be 'min' or 'max'");
        return to_python(io::to_json(optimal_clustering(r, direction == "max" ? Direction::kMax : Direction::kMin)));
      },
      py::arg("report"), py::arg("direction") = "min");
}
