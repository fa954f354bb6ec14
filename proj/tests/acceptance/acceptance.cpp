// Acceptance checks, one PASS/FAIL line each. Exit status is the number of
// failed checks (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "fedstab/clustering_opt.hpp"
#include "fedstab/combinatorics.hpp"
#include "fedstab/dynamics.hpp"
#include "fedstab/gains.hpp"
#include "fedstab/hedonic.hpp"
#include "fedstab/learning.hpp"
#include "fedstab/lp_solver.hpp"
#include "fedstab/stable_set.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace fedstab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool contains(const std::vector<Partition>& list, const Partition& p) {
  return std::find(list.begin(), list.end(), p) != list.end();
}

Outcome bell_count() {
  const auto start = Clock::now();
  std::uint64_t count = 0;
  PartitionEnumerator it(10);
  while (it.next()) ++count;
  const double t = seconds_since(start);
  std::ostringstream os;
  os << count << " partitions in " << t << " s";
  return {count == 115975 && t < 5.0, os.str()};
}

Outcome potential_identity() {
  Rng rng(1001);
  int failures = 0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = static_cast<int>(rng.uniform_int(2, 8));
    const auto v = testing::random_mutual_gains(n, rng, 3.0);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
    const StrategyTuple sigma(labels);
    const int i = static_cast<int>(rng.uniform_int(0, n - 1));
    const StrategyTuple moved = sigma.with(i, static_cast<int>(rng.uniform_int(0, n - 1)));
    // Independent potential: sum of v over co-located pairs.
    auto pairs_potential = [&](const StrategyTuple& s) {
      double total = 0.0;
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (s[a] == s[b]) total += v(a, b);
        }
      }
      return total;
    };
    const double dp = potential(moved, v) - potential(sigma, v);
    const double dg = player_gain(i, moved, v) - player_gain(i, sigma, v);
    const double err = std::max(std::abs(dp - dg), std::abs(dp - (pairs_potential(moved) - pairs_potential(sigma))));
    worst = std::max(worst, err);
    if (err > 1e-10) ++failures;
  }
  std::ostringstream os;
  os << failures << " failures of 1000, max error " << worst;
  return {failures == 0, os.str()};
}

std::vector<MutualGainVector> existence_instances() {
  Rng rng(3003);
  std::vector<MutualGainVector> out;
  for (int n = 2; n <= 7; ++n) {
    for (int k = 0; k < 100; ++k) out.push_back(testing::random_mutual_gains(n, rng));
  }
  return out;
}

Outcome existence(const std::vector<MutualGainVector>& instances) {
  int failures = 0;
  for (const auto& v : instances) {
    if (nash_stable_partitions(phi_from_v(v)).empty()) ++failures;
  }
  std::ostringstream os;
  os << failures << " empty of " << instances.size();
  return {failures == 0, os.str()};
}

Outcome dynamics_soundness(const std::vector<MutualGainVector>& instances) {
  const auto start = Clock::now();
  Rng rng(4004);
  int failures = 0, runs = 0;
  for (const auto& v : instances) {
    const int n = v.population();
    const auto stable = nash_stable_partitions(phi_from_v(v));
    for (int r = 0; r < 3; ++r) {
      std::vector<int> labels;
      for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
      const StrategyTuple start_tuple(labels);
      const auto trace = run_dynamics(start_tuple, v, Schedule::random(rng.bits()), 10 * n * n * n);
      ++runs;
      bool ok = trace.converged;
      double last = potential(start_tuple, v);
      for (const auto& step : trace.steps) {
        ok = ok && step.potential_after > last;
        last = step.potential_after;
      }
      const Partition terminal = partition_of(trace.terminal);
      ok = ok && check_nash_stable(terminal, v).stable && contains(stable, terminal);
      if (!ok) ++failures;
    }
  }
  const double t = seconds_since(start);
  std::ostringstream os;
  os << failures << " failures of " << runs << " runs in " << t << " s";
  return {failures == 0 && t < 60.0, os.str()};
}

Outcome lp_correctness() {
  Rng rng(5005);
  int failures = 0;
  double worst_gap = 0.0, worst_pair = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 7;
    const auto report = testing::random_report(n, rng);
    const auto r = solve_symmetric_lp(report);
    bool ok = r.lp_solution && r.lp_solution->status == lp::Status::kOptimal && r.objective_value;
    if (ok) {
      const auto cert = lp::certify(r.system->to_problem(), *r.lp_solution);
      worst_gap = std::max(worst_gap, cert.duality_gap);
      ok = cert.ok && cert.duality_gap <= 1e-8 && *r.objective_value <= report.delta(Coalition::grand(n)) / 2 + 1e-9;
      if (n == 2) {
        const double err = std::abs(*r.objective_value - report.delta(Mask{0b11}) / 2);
        worst_pair = std::max(worst_pair, err);
        ok = ok && err <= 1e-9;
      }
    }
    if (!ok) ++failures;
  }
  std::ostringstream os;
  os << failures << " failures of 200, max gap " << worst_gap << ", max n=2 error " << worst_pair;
  return {failures == 0, os.str()};
}

Outcome general_pipeline() {
  Rng rng(6006);
  int failures = 0, found = 0, exhausted = 0;
  double slowest = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 5;
    const auto report = GainReport::from_scenario(generate_scenario(n, 2, rng.bits()));
    const auto start = Clock::now();
    const auto r = find_general_allocation(report);
    const double t = seconds_since(start);
    slowest = std::max(slowest, t);
    bool ok = t < 30.0;
    if (r.status == StableSetStatus::kMemberFound) {
      ++found;
      const auto& phi = std::get<AllocationTable>(r.allocation);
      ok = ok && membership_check(phi, report) && contains(nash_stable_partitions(phi), *r.certified_partition);
    } else {
      ++exhausted;
      ok = ok && r.partitions_tried == testing::bell_triangle(n);
    }
    if (!ok) ++failures;
  }
  std::ostringstream os;
  os << failures << " failures of 50 (" << found << " found, " << exhausted << " exhausted), slowest " << slowest << " s";
  return {failures == 0, os.str()};
}

Outcome expected_loss_exactness() {
  // Monte-Carlo over receptions for coalitions of size 1..3.
  const std::vector<double> th{-1.0, 0.5, 2.0};
  const std::vector<int> m{2, 3, 5};
  const std::vector<double> p{0.5, 0.7, 0.3};
  Scenario s = testing::scalar_scenario(th, m, p, 0.25, 1.5, 0.05);
  s.fallback_loss = 2.0;
  Rng rng(7007);
  int mc_failures = 0;
  double worst_z = 0.0;
  for (Mask mask : {Mask{0b001}, Mask{0b011}, Mask{0b111}}) {
    const double exact = expected_loss(Coalition(mask, 3), s);
    const int samples = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < samples; ++k) {
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 3; ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (((mask >> i) & 1u) && rng.uniform() < p[u]) {
          num += m[u] * th[u];
          den += m[u];
        }
      }
      const double loss = den == 0.0 ? 2.0 : 1.5 * (num / den - 0.25) * (num / den - 0.25) + 0.05;
      sum += loss;
      sum_sq += loss * loss;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
    const double z = std::abs(exact - mean) / se;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++mc_failures;
  }

  // Jensen on the always-defined MAE aggregate: the expectation of the
  // aggregate is folded here from reception probabilities.
  Rng gen(7008);
  int jensen_failures = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = static_cast<int>(gen.uniform_int(1, 8));
    const Scenario sc = generate_scenario(n, 3, gen.bits());
    const Coalition all = Coalition::grand(n);
    Eigen::VectorXd mean_params = Eigen::VectorXd::Zero(sc.dim);
    double mean_loss = 0.0;
    ReceptionEnumerator it(all);
    while (auto x = it.next()) {
      const double w = reception_probability(all, *x, sc);
      const auto theta = mae_aggregate(*x, sc);
      mean_params += w * theta;
      mean_loss += w * sc.evaluator(theta);
    }
    if (mean_loss < sc.evaluator(mean_params) - 1e-10) ++jensen_failures;
    if (std::abs(mean_loss - expected_mae_loss(sc)) > 1e-10 * std::max(1.0, mean_loss)) ++jensen_failures;
  }
  std::ostringstream os;
  os << mc_failures << " Monte-Carlo misses (max " << worst_z << " SE), " << jensen_failures << " Jensen failures of 100";
  return {mc_failures == 0 && jensen_failures == 0, os.str()};
}

Outcome superadditivity_implication() {
  Rng rng(8008);
  int checked = 0, failures = 0;
  for (int trial = 0; trial < 400 && checked < 40; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    std::vector<double> delta(std::size_t{1} << n);
    const double scale = rng.uniform(0.5, 2.0);
    for (Mask s = 0; s < delta.size(); ++s) {
      const int k = std::popcount(s);
      delta[s] = k >= 2 ? scale * (k * k - k) + rng.uniform(0.0, 0.3) : 0.0;
    }
    const auto report = GainReport::from_marginal(n, delta, std::vector<double>(static_cast<std::size_t>(n), 1.0));
    if (!is_superadditive(report).superadditive) continue;
    const auto& v = std::get<MutualGainVector>(solve_symmetric_lp(report).allocation);
    if (std::any_of(v.values().begin(), v.values().end(), [](double x) { return x < 0.0; })) continue;
    ++checked;
    const auto phi = phi_from_v(v);
    const Mask full = Coalition::grand(n).mask();
    for (int i = 0; i < n; ++i) {
      for (Mask s = 1; s <= full; ++s) {
        if (((s >> i) & 1u) && phi(i, full) < phi(i, s)) ++failures;
      }
    }
  }
  std::ostringstream os;
  os << failures << " violations over " << checked << " instances";
  return {failures == 0 && checked >= 20, os.str()};
}

Outcome optimal_clustering_fold() {
  Rng rng(9009);
  int failures = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 6;
    const auto report = GainReport::from_scenario(generate_scenario(n, 2, rng.bits()));
    std::optional<Partition> best;
    double best_total = 0.0;
    std::uint64_t feasible = 0;
    PartitionEnumerator it(n);
    while (auto p = it.next()) {
      bool ok = true;
      double total = 0.0;
      for (const auto& b : p->blocks()) {
        double prices = 0.0;
        for (int i : b.members()) prices += report.pi(i);
        if (prices > report.u(b) + 1e-9) ok = false;
        total += report.u(b);
      }
      if (!ok) continue;
      ++feasible;
      if (!best || total < best_total) {
        best = *p;
        best_total = total;
      }
    }
    const auto sol = optimal_clustering(report, Direction::kMin);
    if (sol.partition != *best || sol.objective != best_total || sol.feasible_count != feasible) ++failures;
  }
  std::ostringstream os;
  os << failures << " mismatches of 50";
  return {failures == 0, os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_pipeline(const fs::path& dir, int threads) {
  fs::create_directories(dir);
  const std::string cli = FEDSTAB_CLI_PATH;
  const std::string d = dir.string();
  const std::string env = "FEDSTAB_THREADS=" + std::to_string(threads) + " ";
  const std::vector<std::string> commands = {
      cli + " gen --n 5 --seed 42 -o " + d + "/scenario.json",
      cli + " gains --scenario " + d + "/scenario.json -o " + d + "/gains.json",
      cli + " lp --scenario " + d + "/scenario.json -o " + d + "/lp.json --mps " + d + "/lp.mps",
      cli + " stable-set --mode general --scenario " + d + "/scenario.json -o " + d + "/stable-set.json",
      cli + " dynamics --schedule random --scenario " + d + "/scenario.json -o " + d + "/dynamics.jsonl",
      env + cli + " oracle --scenario " + d + "/scenario.json -o " + d + "/oracle.json",
      cli + " optimal --scenario " + d + "/scenario.json -o " + d + "/optimal.json",
      cli + " report --dir " + d + " -o " + d + "/summary.json --csv " + d + "/potential.csv",
  };
  for (const auto& c : commands) {
    const int rc = std::system((c + " > " + d + "/stdout.txt 2>&1").c_str());
    if (rc != 0) return rc;
  }
  return 0;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("fedstab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const int a = run_pipeline(root / "a", 1);
  const int b = run_pipeline(root / "b", 3);
  std::ostringstream os;
  if (a != 0 || b != 0) {
    os << "pipeline failed (" << a << ", " << b << ")";
    fs::remove_all(root);
    return {false, os.str()};
  }
  int files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    if (slurp(entry.path()) != slurp(root / "b" / entry.path().filename())) {
      ++differing;
      os << entry.path().filename().string() << " differs; ";
    }
  }
  os << differing << " of " << files << " artifacts differ";
  fs::remove_all(root);
  return {differing == 0 && files >= 10, os.str()};
}

}  // namespace

int main() {
  const auto instances = existence_instances();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"bell-count", bell_count},
      {"potential-identity", potential_identity},
      {"existence", [&] { return existence(instances); }},
      {"dynamics-soundness", [&] { return dynamics_soundness(instances); }},
      {"lp-correctness", lp_correctness},
      {"general-pipeline", general_pipeline},
      {"expected-loss-exactness", expected_loss_exactness},
      {"superadditivity-implication", superadditivity_implication},
      {"optimal-clustering", optimal_clustering_fold},
      {"cli-determinism", cli_determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : checks) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << index << " " << name << ": " << o.detail << std::endl;
  }
  return failed;
}
