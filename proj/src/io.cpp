#include "fedstab/io.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "fedstab/error.hpp"

namespace fedstab::io {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

double number(const Json& doc, const char* key) {
  const Json& v = field(doc, key);
  if (!v.is_number()) throw FormatError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const Json& doc, const char* key) {
  const Json& v = field(doc, key);
  if (!v.is_number_integer()) throw FormatError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

Eigen::VectorXd vector_from(const Json& v, const char* what) {
  if (!v.is_array()) throw FormatError(std::string(what) + " must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) throw FormatError(std::string(what) + " must contain numbers");
    out(static_cast<Eigen::Index>(k)) = v[k].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_from(const Json& v, const char* what) {
  if (!v.is_array() || v.empty()) throw FormatError(std::string(what) + " must be a non-empty array of rows");
  const auto cols = v[0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = vector_from(v[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) throw FormatError(std::string(what) + " rows differ in length");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

Json evaluator_json(const LossEvaluator& evaluator) {
  if (const auto* q = evaluator.quadratic()) {
    return Json{{"kind", "quadratic"},
                {"target", vector_json(q->target)},
                {"curvature", matrix_json(q->curvature)},
                {"noise_floor", q->noise_floor}};
  }
  const auto* r = evaluator.regression();
  return Json{{"kind", "regression"}, {"features", matrix_json(r->features)}, {"labels", vector_json(r->labels)}};
}

LossEvaluator evaluator_from(const Json& doc) {
  const Json& kind = field(doc, "kind");
  if (kind == "quadratic") {
    return LossEvaluator(QuadraticLoss{vector_from(field(doc, "target"), "evaluator.target"),
                                       matrix_from(field(doc, "curvature"), "evaluator.curvature"),
                                       number(doc, "noise_floor")});
  }
  if (kind == "regression") {
    return LossEvaluator(RegressionLoss{matrix_from(field(doc, "features"), "evaluator.features"),
                                        vector_from(field(doc, "labels"), "evaluator.labels")});
  }
  throw FormatError("unknown evaluator kind");
}

std::string allocation_key(int i, Mask s) { return std::to_string(i) + ":" + std::to_string(s); }

}  // namespace

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const Scenario& s) {
  Json agents = Json::array();
  for (const auto& a : s.agents) {
    agents.push_back(Json{{"m", a.data_size}, {"p", a.reliability}, {"theta", vector_json(a.params)}, {"local_loss", a.local_loss}});
  }
  return Json{{"n", s.n},
              {"M", s.dim},
              {"agents", std::move(agents)},
              {"evaluator", evaluator_json(s.evaluator)},
              {"mae", Json{{"theta", vector_json(s.mae_params)}, {"w", s.mae_weight}}},
              {"gain_fn", Json{{"kind", std::string(to_string(s.gain_fn.kind))}, {"scale", s.gain_fn.scale}}},
              {"cost_per_agent", s.cost_per_agent},
              {"fallback_loss", s.fallback_loss},
              {"seed", s.seed}};
}

Scenario scenario_from_json(const Json& doc) {
  Scenario s;
  s.n = integer(doc, "n");
  s.dim = integer(doc, "M");
  const Json& agents = field(doc, "agents");
  if (!agents.is_array()) throw FormatError("agents must be an array");
  for (const auto& a : agents) {
    AgentProfile agent;
    agent.data_size = integer(a, "m");
    agent.reliability = number(a, "p");
    agent.params = vector_from(field(a, "theta"), "agent.theta");
    agent.local_loss = number(a, "local_loss");
    s.agents.push_back(std::move(agent));
  }
  s.evaluator = evaluator_from(field(doc, "evaluator"));
  const Json& mae = field(doc, "mae");
  s.mae_params = vector_from(field(mae, "theta"), "mae.theta");
  s.mae_weight = number(mae, "w");
  const Json& gain = field(doc, "gain_fn");
  try {
    s.gain_fn.kind = gain_fn_kind_from_string(field(gain, "kind").get<std::string>());
  } catch (const Json::exception&) {
    throw FormatError("gain_fn.kind must be a string");
  }
  s.gain_fn.scale = number(gain, "scale");
  s.cost_per_agent = number(doc, "cost_per_agent");
  s.fallback_loss = number(doc, "fallback_loss");
  const Json& seed = field(doc, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw FormatError("seed must be a non-negative integer");
  }
  s.seed = seed.get<std::uint64_t>();
  s.validate();
  return s;
}

std::string scenario_hash(const Scenario& scenario) { return content_hash(dump(to_json(scenario))); }

Json provenance(const Scenario& scenario) {
  return Json{{"tool_version", kToolVersion}, {"scenario_hash", scenario_hash(scenario)}, {"seed", scenario.seed}};
}

Json to_json(const GainReport& report) {
  Json coalitions = Json::object();
  const std::size_t size = std::size_t{1} << report.population();
  const auto& losses = report.expected_losses();
  for (Mask s = 1; s < size; ++s) {
    Json entry{{"u", report.u(s)}, {"delta", report.delta(s)}};
    if (!losses.empty()) entry["expected_loss"] = losses[s];
    coalitions[std::to_string(s)] = std::move(entry);
  }
  return Json{{"n", report.population()}, {"pi", report.prices()}, {"coalitions", std::move(coalitions)}};
}

GainReport gain_report_from_json(const Json& doc) {
  const int n = integer(doc, "n");
  require_subset_capacity(n);
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> u(size, 0.0), delta(size, 0.0), loss;
  const Json& pi_doc = field(doc, "pi");
  if (!pi_doc.is_array() || !std::all_of(pi_doc.begin(), pi_doc.end(), [](const Json& x) { return x.is_number(); })) {
    throw FormatError("pi must be an array of numbers");
  }
  std::vector<double> pi = pi_doc.get<std::vector<double>>();
  const Json& coalitions = field(doc, "coalitions");
  bool has_loss = true;
  std::vector<double> losses(size, 0.0);
  for (Mask s = 1; s < size; ++s) {
    const auto key = std::to_string(s);
    if (!coalitions.contains(key)) throw FormatError("gain report missing coalition " + key);
    const Json& e = coalitions.at(key);
    u[s] = number(e, "u");
    delta[s] = number(e, "delta");
    if (e.contains("expected_loss")) {
      losses[s] = number(e, "expected_loss");
    } else {
      has_loss = false;
    }
  }
  if (has_loss) loss = std::move(losses);
  return GainReport::from_tables(n, std::move(u), std::move(delta), std::move(pi), std::move(loss));
}

Json to_json(const AllocationTable& phi) {
  Json entries = Json::object();
  const int n = phi.population();
  const std::size_t size = std::size_t{1} << n;
  for (Mask s = 1; s < size; ++s) {
    for (Mask m = s; m != 0; m &= m - 1) {
      const int i = std::countr_zero(m);
      entries[allocation_key(i, s)] = phi(i, s);
    }
  }
  return Json{{"n", n}, {"phi", std::move(entries)}};
}

AllocationTable allocation_from_json(const Json& doc) {
  AllocationTable phi(integer(doc, "n"));
  const Json& entries = field(doc, "phi");
  if (!entries.is_object()) throw FormatError("phi must be an object");
  for (const auto& [key, value] : entries.items()) {
    int i = -1;
    unsigned long long s = 0;
    char tail = 0;
    if (std::sscanf(key.c_str(), "%d:%llu%c", &i, &s, &tail) != 2) throw FormatError("bad allocation key '" + key + "'");
    if (!value.is_number()) throw FormatError("allocation values must be numbers");
    phi.set(i, static_cast<Mask>(s), value.get<double>());
  }
  return phi;
}

Json to_json(const MutualGainVector& v) {
  Json entries = Json::object();
  for (const auto& [i, j] : pairs_of(Coalition::grand(v.population()))) {
    entries[std::to_string(i) + "," + std::to_string(j)] = v(i, j);
  }
  return Json{{"n", v.population()}, {"v", std::move(entries)}};
}

MutualGainVector mutual_gains_from_json(const Json& doc) {
  MutualGainVector v(integer(doc, "n"));
  const Json& entries = field(doc, "v");
  if (!entries.is_object()) throw FormatError("v must be an object");
  for (const auto& [key, value] : entries.items()) {
    int i = -1, j = -1;
    char tail = 0;
    if (std::sscanf(key.c_str(), "%d,%d%c", &i, &j, &tail) != 2) throw FormatError("bad pair key '" + key + "'");
    if (!value.is_number()) throw FormatError("mutual gains must be numbers");
    v.set(i, j, value.get<double>());
  }
  return v;
}

Json to_json(const Partition& partition) {
  Json out = Json::array();
  for (const auto& block : partition.blocks()) out.push_back(block.members());
  return out;
}

Partition partition_from_json(const Json& doc, int n) {
  if (!doc.is_array()) throw FormatError("partition must be an array of member arrays");
  std::vector<Coalition> blocks;
  for (const auto& b : doc) {
    if (!b.is_array()) throw FormatError("partition blocks must be arrays of agent indices");
    for (const auto& i : b) {
      if (!i.is_number_integer() || i.get<int>() < 0 || i.get<int>() >= n) throw FormatError("agent index out of range");
    }
    blocks.push_back(Coalition::of(b.get<std::vector<int>>(), n));
  }
  return Partition(std::move(blocks), n);
}

Json to_json(const StabilityCertificate& c) {
  Json out{{"partition", to_json(c.partition)}, {"verdict", c.stable ? "stable" : "unstable"}};
  if (c.witness) {
    out["witness"] = Json{{"agent", c.witness->agent},
                          {"target", c.witness->target.members()},
                          {"current_value", c.witness->current_value},
                          {"deviation_value", c.witness->deviation_value}};
  }
  return out;
}

Json to_json(const StableSetResult& r) {
  Json out{{"status", to_string(r.status)}, {"partitions_tried", r.partitions_tried}};
  if (r.certified_partition) out["certified_partition"] = to_json(*r.certified_partition);
  if (r.objective_value) out["objective_value"] = *r.objective_value;
  if (const auto* phi = std::get_if<AllocationTable>(&r.allocation)) {
    out["mode"] = "general";
    out["allocation"] = to_json(*phi);
  } else if (const auto* v = std::get_if<MutualGainVector>(&r.allocation)) {
    out["mode"] = "symmetric";
    out["allocation"] = to_json(*v);
  }
  return out;
}

Json to_json(const ClusteringSolution& s) {
  return Json{{"partition", to_json(s.partition)},
              {"objective", s.objective},
              {"feasible_count", s.feasible_count},
              {"direction", to_string(s.direction)}};
}

Json to_json(const lp::Solution& s, const lp::Certificate& c) {
  Json out{{"status", lp::to_string(s.status)}, {"iterations", s.iterations}};
  if (s.x) out["x"] = *s.x;
  if (s.objective) out["objective"] = *s.objective;
  if (s.duals) out["duals"] = *s.duals;
  out["certificate"] = Json{{"ok", c.ok},
                            {"max_primal_violation", c.max_primal_violation},
                            {"max_dual_residual", c.max_dual_residual},
                            {"min_dual", c.min_dual},
                            {"duality_gap", c.duality_gap},
                            {"objective_mismatch", c.objective_mismatch}};
  return out;
}

Json to_json(const DynamicsStep& step) {
  return Json{{"deviator", step.deviator},         {"old_label", step.old_label},
              {"new_label", step.new_label},       {"gain_before", step.gain_before},
              {"gain_after", step.gain_after},     {"potential_before", step.potential_before},
              {"potential_after", step.potential_after}};
}

Json trace_footer(const DynamicsTrace& trace) {
  return Json{{"terminal", trace.terminal.labels()},
              {"converged", trace.converged},
              {"rounds", trace.rounds},
              {"final_potential", trace.final_potential}};
}

std::string trace_to_jsonl(const DynamicsTrace& trace) {
  std::string out;
  for (const auto& step : trace.steps) out += to_json(step).dump() + "\n";
  out += trace_footer(trace).dump() + "\n";
  return out;
}

}  // namespace fedstab::io
