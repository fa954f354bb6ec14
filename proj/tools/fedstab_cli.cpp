// Command-line front end. Every stage reads a scenario (file or inline
// knobs), writes one JSON document (JSON lines for traces) headed by the
// provenance record, and exits 0 ok / 1 infeasible at cap / 2 usage /
// 3 capacity / 4 other failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fedstab/clustering_opt.hpp"
#include "fedstab/dynamics.hpp"
#include "fedstab/error.hpp"
#include "fedstab/io.hpp"
#include "fedstab/stable_set.hpp"

namespace fs = std::filesystem;
using fedstab::io::Json;

namespace {

constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitFailure = 4;

constexpr int kMaxOracleAgents = 10;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioSource {
  std::string path;
  int n = 4;
  int dim = 2;
  std::uint64_t seed = 0;
  std::string evaluator = "quadratic";
  std::string gain_fn = "linear";
  double gain_scale = 1.0;
  double cost = 0.01;
  double mae_weight = 0.5;
  int min_data = 10;
  int max_data = 100;
  double min_reliability = 0.5;
  double max_reliability = 1.0;
  bool infinite_data = false;
  std::optional<double> fallback_loss;

  void attach(CLI::App* cmd) {
    cmd->add_option("--scenario", path, "Scenario JSON file; inline knobs are ignored when given");
    cmd->add_option("--n", n, "Number of agents");
    cmd->add_option("--dim", dim, "Model dimension");
    cmd->add_option("--seed", seed, "Generation seed");
    cmd->add_option("--evaluator", evaluator)->check(CLI::IsMember({"quadratic", "regression"}));
    cmd->add_option("--gain-fn", gain_fn)->check(CLI::IsMember({"linear", "log"}));
    cmd->add_option("--gain-scale", gain_scale);
    cmd->add_option("--cost", cost, "Per-agent communication cost");
    cmd->add_option("--mae-weight", mae_weight);
    cmd->add_option("--min-data", min_data);
    cmd->add_option("--max-data", max_data);
    cmd->add_option("--min-reliability", min_reliability);
    cmd->add_option("--max-reliability", max_reliability);
    cmd->add_flag("--infinite-data", infinite_data, "Local models equal the target exactly");
    cmd->add_option("--fallback-loss", fallback_loss, "Loss charged when no upload arrives");
  }

  fedstab::GenerationKnobs knobs() const {
    fedstab::GenerationKnobs k;
    k.evaluator = evaluator == "regression" ? fedstab::EvaluatorKind::kRegression : fedstab::EvaluatorKind::kQuadratic;
    k.gain_fn = {fedstab::gain_fn_kind_from_string(gain_fn), gain_scale};
    k.cost_per_agent = cost;
    k.mae_weight = mae_weight;
    k.min_data = min_data;
    k.max_data = max_data;
    k.min_reliability = min_reliability;
    k.max_reliability = max_reliability;
    k.infinite_data = infinite_data;
    k.fallback_loss = fallback_loss;
    return k;
  }

  fedstab::Scenario load() const;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

fedstab::Scenario ScenarioSource::load() const {
  if (!path.empty()) return fedstab::io::scenario_from_json(read_json(path));
  return fedstab::generate_scenario(n, dim, seed, knobs());
}

Json stage_document(const fedstab::Scenario& s, const char* stage, Json params, Json result) {
  return Json{{"provenance", fedstab::io::provenance(s)}, {"stage", stage}, {"params", std::move(params)}, {"result", std::move(result)}};
}

int thread_count() {
  const char* env = std::getenv("FEDSTAB_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 256) throw UsageError("FEDSTAB_THREADS must be an integer in [1, 256]");
  return static_cast<int>(v);
}

// Mutual gains from a file, or the symmetric LP optimum for the scenario.
fedstab::MutualGainVector mutual_gains(const std::string& path, const fedstab::GainReport& report) {
  if (!path.empty()) {
    auto v = fedstab::io::mutual_gains_from_json(read_json(path));
    if (v.population() != report.population()) throw UsageError("mutual gains population does not match the scenario");
    return v;
  }
  const auto lp = fedstab::solve_symmetric_lp(report);
  return std::get<fedstab::MutualGainVector>(lp.allocation);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number_text(double v) { return Json(v).dump(); }

// --- stages -------------------------------------------------------------

int run_gen(const ScenarioSource& src, const std::string& out) {
  const auto s = src.load();
  Json doc = fedstab::io::to_json(s);
  doc["provenance"] = fedstab::io::provenance(s);
  const std::string text = fedstab::io::dump(doc);
  write_text(out, text);
  const std::string line = fedstab::io::content_hash(text) + "  " + (out.empty() || out == "-" ? "-" : out) + "\n";
  (out.empty() || out == "-" ? std::cerr : std::cout) << line;
  return 0;
}

int run_gains(const ScenarioSource& src, const std::string& out) {
  const auto s = src.load();
  const auto report = fedstab::GainReport::from_scenario(s);
  Json result = fedstab::io::to_json(report);
  if (s.n <= fedstab::kMaxSuperadditivityAgents) {
    const auto sa = fedstab::is_superadditive(report);
    result["superadditive"] = sa.superadditive;
    if (sa.witness) result["superadditivity_witness"] = {sa.witness->first.members(), sa.witness->second.members()};
  }
  write_text(out, fedstab::io::dump(stage_document(s, "gains", Json::object(), std::move(result))));
  return 0;
}

int run_lp(const ScenarioSource& src, const std::string& out, const std::string& mps_out) {
  const auto s = src.load();
  const auto report = fedstab::GainReport::from_scenario(s);
  const auto r = fedstab::solve_symmetric_lp(report);
  const auto problem = r.system->to_problem();
  Json result{{"v", fedstab::io::to_json(std::get<fedstab::MutualGainVector>(r.allocation))},
              {"objective", *r.objective_value},
              {"grand_coalition_bound", report.delta(fedstab::Coalition::grand(s.n)) / 2},
              {"certified_partition", fedstab::io::to_json(*r.certified_partition)},
              {"lp", fedstab::io::to_json(*r.lp_solution, fedstab::lp::certify(problem, *r.lp_solution))}};
  if (!mps_out.empty()) write_text(mps_out, r.system->to_mps());
  write_text(out, fedstab::io::dump(stage_document(s, "lp", Json::object(), std::move(result))));
  return 0;
}

int run_stable_set(const ScenarioSource& src, const std::string& mode, const std::string& out) {
  const auto s = src.load();
  if (mode == "general" && s.n > fedstab::kMaxGeneralAgents) {
    throw fedstab::CapacityError("general search handles at most " + std::to_string(fedstab::kMaxGeneralAgents) + " agents");
  }
  const auto report = fedstab::GainReport::from_scenario(s);
  const auto r = mode == "general" ? fedstab::find_general_allocation(report) : fedstab::solve_symmetric_lp(report);
  Json result = fedstab::io::to_json(r);
  if (r.system && r.lp_solution) {
    const auto cert = fedstab::lp::certify(r.system->to_problem(), *r.lp_solution);
    result["lp_certificate_ok"] = cert.ok;
    result["duality_gap"] = cert.duality_gap;
  }
  if (const auto* phi = std::get_if<fedstab::AllocationTable>(&r.allocation)) {
    result["membership"] = fedstab::membership_check(*phi, report);
  } else if (const auto* v = std::get_if<fedstab::MutualGainVector>(&r.allocation)) {
    result["membership"] = fedstab::membership_check(fedstab::phi_from_v(*v), report);
  }
  write_text(out, fedstab::io::dump(stage_document(s, "stable-set", Json{{"mode", mode}}, std::move(result))));
  return r.status == fedstab::StableSetStatus::kMemberFound ? 0 : kExitInfeasible;
}

struct DynamicsOptions {
  std::string schedule = "round-robin";
  std::optional<std::uint64_t> schedule_seed;
  std::optional<std::int64_t> max_steps;
  std::string start = "singletons";
  std::string mutual_gains_path;
};

int run_dynamics(const ScenarioSource& src, const DynamicsOptions& opt, const std::string& out) {
  const auto s = src.load();
  const auto report = fedstab::GainReport::from_scenario(s);
  const auto v = mutual_gains(opt.mutual_gains_path, report);
  const std::uint64_t seed = opt.schedule_seed.value_or(s.seed);
  const auto schedule = opt.schedule == "random" ? fedstab::Schedule::random(seed) : fedstab::Schedule::round_robin();
  const std::int64_t n = s.n;
  const std::int64_t max_steps = opt.max_steps.value_or(10 * n * n * n);
  const auto start = opt.start == "grand" ? fedstab::StrategyTuple::grand(s.n) : fedstab::StrategyTuple::singletons(s.n);
  const auto trace = fedstab::run_dynamics(start, v, schedule, max_steps);

  Json params{{"schedule", opt.schedule}, {"max_steps", max_steps}, {"start", opt.start}};
  if (opt.schedule == "random") params["schedule_seed"] = seed;
  std::string text = Json{{"provenance", fedstab::io::provenance(s)},
                          {"stage", "dynamics"},
                          {"params", params},
                          {"initial_potential", fedstab::potential(start, v)}}
                         .dump() +
                     "\n";
  for (const auto& step : trace.steps) text += fedstab::io::to_json(step).dump() + "\n";
  Json footer = fedstab::io::trace_footer(trace);
  footer["partition"] = fedstab::io::to_json(fedstab::partition_of(trace.terminal));
  text += footer.dump() + "\n";
  write_text(out, text);
  return 0;
}

int run_oracle(const ScenarioSource& src, const std::string& allocation_path, const std::string& mutual_gains_path,
               const std::string& out) {
  const auto s = src.load();
  if (s.n > kMaxOracleAgents) {
    throw fedstab::CapacityError("oracle enumerates at most " + std::to_string(kMaxOracleAgents) + " agents, got " +
                                 std::to_string(s.n));
  }
  const int threads = thread_count();
  fedstab::AllocationTable phi;
  std::string source;
  if (!allocation_path.empty()) {
    phi = fedstab::io::allocation_from_json(read_json(allocation_path));
    if (phi.population() != s.n) throw UsageError("allocation population does not match the scenario");
    source = "allocation";
  } else {
    phi = fedstab::phi_from_v(mutual_gains(mutual_gains_path, fedstab::GainReport::from_scenario(s)));
    source = mutual_gains_path.empty() ? "symmetric_lp" : "mutual_gains";
  }
  const auto stable = fedstab::nash_stable_partitions(phi, threads);
  Json listing = Json::array();
  for (const auto& p : stable) listing.push_back(fedstab::io::to_json(p));
  Json result{{"count", stable.size()}, {"partitions", std::move(listing)}};
  write_text(out, fedstab::io::dump(stage_document(s, "oracle", Json{{"source", source}}, std::move(result))));
  return 0;
}

int run_optimal(const ScenarioSource& src, const std::string& direction, const std::string& out) {
  const auto s = src.load();
  const auto report = fedstab::GainReport::from_scenario(s);
  const auto dir = direction == "max" ? fedstab::Direction::kMax : fedstab::Direction::kMin;
  const auto sol = fedstab::optimal_clustering(report, dir);
  Json result = fedstab::io::to_json(sol);
  if (s.n >= 2) {
    const auto v = std::get<fedstab::MutualGainVector>(fedstab::solve_symmetric_lp(report).allocation);
    result["stable_under_symmetric_allocation"] = fedstab::check_nash_stable(sol.partition, v).stable;
  }
  write_text(out, fedstab::io::dump(stage_document(s, "optimal", Json{{"direction", direction}}, std::move(result))));
  return 0;
}

// --- report -------------------------------------------------------------

struct StageFile {
  const char* stage;
  const char* file;
};

constexpr StageFile kStages[] = {{"gains", "gains.json"},   {"lp", "lp.json"},         {"stable-set", "stable-set.json"},
                                 {"dynamics", "dynamics.jsonl"}, {"oracle", "oracle.json"}, {"optimal", "optimal.json"}};

std::vector<Json> read_jsonl(const std::string& path) {
  std::vector<Json> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw UsageError("'" + path + "' has a malformed line: " + e.what());
    }
  }
  if (lines.size() < 2) throw UsageError("'" + path + "' needs a header and a footer line");
  return lines;
}

int run_report(const std::string& dir, const std::string& out, const std::string& csv_out) {
  for (const auto& st : kStages) {
    const fs::path p = fs::path(dir) / st.file;
    if (!fs::exists(p)) throw UsageError(std::string("missing stage output '") + st.stage + "': expected " + p.string());
  }
  auto path_of = [&](const char* file) { return (fs::path(dir) / file).string(); };
  const Json gains = read_json(path_of("gains.json"));
  const Json lp = read_json(path_of("lp.json"));
  const Json stable = read_json(path_of("stable-set.json"));
  const Json oracle = read_json(path_of("oracle.json"));
  const Json optimal = read_json(path_of("optimal.json"));
  const auto trace = read_jsonl(path_of("dynamics.jsonl"));

  const Json provenance = gains.at("provenance");
  const std::pair<const char*, const Json*> headers[] = {{"lp", &lp.at("provenance")},
                                                         {"stable-set", &stable.at("provenance")},
                                                         {"dynamics", &trace.front().at("provenance")},
                                                         {"oracle", &oracle.at("provenance")},
                                                         {"optimal", &optimal.at("provenance")}};
  for (const auto& [stage, header] : headers) {
    if (header->at("scenario_hash") != provenance.at("scenario_hash")) {
      throw UsageError(std::string("stage '") + stage + "' was produced from a different scenario");
    }
  }

  const Json& footer = trace.back();
  const Json& listing = oracle.at("result").at("partitions");
  bool terminal_listed = false;
  for (const auto& p : listing) terminal_listed = terminal_listed || p == footer.at("partition");

  Json summary{{"provenance", provenance},
               {"stage", "report"},
               {"gains", {{"n", gains.at("result").at("n")}, {"pi", gains.at("result").at("pi")}}},
               {"lp",
                {{"objective", lp.at("result").at("objective")},
                 {"grand_coalition_bound", lp.at("result").at("grand_coalition_bound")},
                 {"certificate_ok", lp.at("result").at("lp").at("certificate").at("ok")}}},
               {"stable_set",
                {{"status", stable.at("result").at("status")},
                 {"mode", stable.at("params").at("mode")},
                 {"membership", stable.at("result").value("membership", false)}}},
               {"dynamics",
                {{"steps", trace.size() - 2},
                 {"converged", footer.at("converged")},
                 {"final_potential", footer.at("final_potential")},
                 {"partition", footer.at("partition")},
                 {"partition_in_oracle", terminal_listed}}},
               {"oracle", {{"count", oracle.at("result").at("count")}, {"source", oracle.at("params").at("source")}}},
               {"optimal", optimal.at("result")}};
  if (gains.at("result").contains("superadditive")) summary["gains"]["superadditive"] = gains.at("result").at("superadditive");
  if (stable.at("result").contains("certified_partition")) {
    summary["stable_set"]["certified_partition"] = stable.at("result").at("certified_partition");
  }

  std::string csv = "step,deviator,potential,gain_delta\r\n";
  csv += "0,," + number_text(trace.front().at("initial_potential").get<double>()) + ",\r\n";
  for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
    const Json& step = trace[k];
    const double delta = step.at("gain_after").get<double>() - step.at("gain_before").get<double>();
    csv += std::to_string(k) + "," + csv_field(std::to_string(step.at("deviator").get<int>())) + "," +
           number_text(step.at("potential_after").get<double>()) + "," + number_text(delta) + "\r\n";
  }
  write_text(csv_out, csv);
  write_text(out, fedstab::io::dump(summary));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash-stable clustering of federated-learning agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fedstab::io::kToolVersion));
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print the stage summary to stderr");

  ScenarioSource src;
  std::string out = "-";

  auto* gen = app.add_subcommand("gen", "Generate a scenario and print its content hash");
  auto* gains = app.add_subcommand("gains", "Cluster gains, minimal prices and marginal gains");
  auto* lp = app.add_subcommand("lp", "Symmetric mutual-gain LP with its optimality certificate");
  auto* stable = app.add_subcommand("stable-set", "Find an allocation with a certified Nash-stable partition");
  auto* dyn = app.add_subcommand("dynamics", "Best-reply dynamics trace (JSON lines)");
  auto* oracle = app.add_subcommand("oracle", "Every Nash-stable partition of an allocation");
  auto* optimal = app.add_subcommand("optimal", "Extremal feasible clustering by total gain");
  auto* report = app.add_subcommand("report", "Merge stage outputs into a summary and a potential CSV");

  for (auto* cmd : {gen, gains, lp, stable, dyn, oracle, optimal}) {
    src.attach(cmd);
    cmd->add_option("-o,--out", out, "Output path ('-' for stdout)");
  }

  std::string mps_out;
  lp->add_option("--mps", mps_out, "Also write the constraint system in MPS format");

  std::string mode = "general";
  stable->add_option("--mode", mode)->check(CLI::IsMember({"general", "symmetric"}));

  DynamicsOptions dopt;
  dyn->add_option("--schedule", dopt.schedule)->check(CLI::IsMember({"round-robin", "random"}));
  dyn->add_option("--schedule-seed", dopt.schedule_seed, "Defaults to the scenario seed");
  dyn->add_option("--max-steps", dopt.max_steps, "Defaults to 10 n^3")->check(CLI::PositiveNumber);
  dyn->add_option("--start", dopt.start)->check(CLI::IsMember({"singletons", "grand"}));
  dyn->add_option("--mutual-gains", dopt.mutual_gains_path, "Mutual gains JSON; defaults to the LP optimum");

  std::string allocation_path, oracle_v_path;
  auto* alloc_opt = oracle->add_option("--allocation", allocation_path, "Allocation table JSON");
  oracle->add_option("--mutual-gains", oracle_v_path, "Mutual gains JSON")->excludes(alloc_opt);

  std::string direction = "min";
  optimal->add_option("--direction", direction)->check(CLI::IsMember({"min", "max"}));

  std::string report_dir = ".", summary_out = "-", csv_out = "potential.csv";
  report->add_option("--dir", report_dir, "Directory holding the stage outputs");
  report->add_option("-o,--out", summary_out, "Summary JSON path");
  report->add_option("--csv", csv_out, "Potential series CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    int code = 0;
    if (*gen) code = run_gen(src, out);
    if (*gains) code = run_gains(src, out);
    if (*lp) code = run_lp(src, out, mps_out);
    if (*stable) code = run_stable_set(src, mode, out);
    if (*dyn) code = run_dynamics(src, dopt, out);
    if (*oracle) code = run_oracle(src, allocation_path, oracle_v_path, out);
    if (*optimal) code = run_optimal(src, direction, out);
    if (*report) code = run_report(report_dir, summary_out, csv_out);
    if (verbose) std::cerr << app.get_subcommands().front()->get_name() << ": exit " << code << "\n";
    return code;
  } catch (const fedstab::CapacityError& e) {
    std::cerr << "fedstab: capacity: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const UsageError& e) {
    std::cerr << "fedstab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fedstab::ContractError& e) {
    std::cerr << "fedstab: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fedstab::FormatError& e) {
    std::cerr << "fedstab: malformed input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "fedstab: malformed input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fedstab: " << e.what() << "\n";
    return kExitFailure;
  }
}
