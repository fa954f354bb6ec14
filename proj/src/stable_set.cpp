#include "fedstab/stable_set.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "fedstab/dynamics.hpp"
#include "fedstab/error.hpp"

namespace fedstab {

namespace {

// offsets[S] = index of the first phi_i^S variable; valid for |S| >= 2.
std::vector<int> general_offsets(int n) {
  const std::size_t size = std::size_t{1} << n;
  std::vector<int> offsets(size, -1);
  int next = 0;
  for (Mask s = 0; s < size; ++s) {
    if (std::popcount(s) < 2) continue;
    offsets[s] = next;
    next += std::popcount(s);
  }
  return offsets;
}

int rank_in(Mask s, int i) { return std::popcount(s & ((Mask{1} << i) - 1)); }

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError("bad number '" + token + "' in MPS dump");
  }
  return value;
}

// Snaps entries that break a C2 row by at most the constraint tolerance so
// the exact stability check sees the intended weak inequality.
void snap_to_partition(AllocationTable& table, const Partition& partition) {
  const int n = table.population();
  for (int i = 0; i < n; ++i) {
    const Coalition& own = partition.block_of(i);
    double own_value = table(i, own);
    if (own.size() >= 2 && own_value < 0.0 && own_value >= -kConstraintTolerance) {
      table.set(i, own.mask(), 0.0);
      own_value = 0.0;
    }
    for (const auto& block : partition.blocks()) {
      if (block == own) continue;
      const Mask target = block.mask() | (Mask{1} << i);
      const double value = table(i, target);
      if (value > own_value && value - own_value <= kConstraintTolerance) table.set(i, target, own_value);
    }
  }
}

Partition stable_partition_for(const MutualGainVector& v) {
  const int n = v.population();
  const auto trace = run_dynamics(StrategyTuple::singletons(n), v, Schedule::round_robin(),
                                  10 * static_cast<std::int64_t>(n) * n * n);
  if (trace.converged) {
    Partition p = partition_of(trace.terminal);
    if (check_nash_stable(p, v).stable) return p;
  }
  if (auto p = first_nash_stable_partition(phi_from_v(v))) return *p;
  throw std::logic_error("no Nash-stable partition for symmetric separable gains");
}

}  // namespace

const char* to_string(StableSetStatus status) {
  return status == StableSetStatus::kMemberFound ? "member_found" : "infeasible_at_cap";
}

int ConstraintSystem::variable_index(const std::string& name) const {
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (variables[k].name == name) return static_cast<int>(k);
  }
  return -1;
}

lp::Problem ConstraintSystem::to_problem() const {
  lp::Problem p;
  p.num_vars = static_cast<int>(variables.size());
  p.objective.assign(variables.size(), 0.0);
  for (const auto& [var, coef] : objective) p.objective[static_cast<std::size_t>(var)] += coef;
  p.rows.reserve(rows.size());
  for (const auto& row : rows) {
    lp::Row dense{std::vector<double>(variables.size(), 0.0), row.bound};
    for (const auto& [var, coef] : row.terms) dense.coeffs[static_cast<std::size_t>(var)] += coef;
    p.rows.push_back(std::move(dense));
  }
  return p;
}

void ConstraintSystem::append_rows(const ConstraintSystem& other) {
  if (other.mode != mode || other.n != n || other.variables.size() != variables.size()) {
    throw ContractError("cannot merge constraint systems over different variables");
  }
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string ConstraintSystem::to_mps(const std::string& model_name) const {
  std::ostringstream os;
  os << "* fedstab n=" << n << " mode=" << (mode == AllocationMode::kGeneral ? "general" : "symmetric") << "\n";
  os << "NAME " << model_name << "\n";
  os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n N obj\n";
  for (const auto& row : rows) os << " L " << row.name << "\n";

  std::vector<std::vector<std::pair<std::string, double>>> entries(variables.size());
  for (const auto& [var, coef] : objective) entries[static_cast<std::size_t>(var)].emplace_back("obj", coef);
  for (const auto& row : rows) {
    for (const auto& [var, coef] : row.terms) entries[static_cast<std::size_t>(var)].emplace_back(row.name, coef);
  }
  os << "COLUMNS\n";
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (entries[k].empty()) os << "    " << variables[k].name << " obj 0\n";
    for (const auto& [row, coef] : entries[k]) os << "    " << variables[k].name << " " << row << " " << format_double(coef) << "\n";
  }
  os << "RHS\n";
  for (const auto& row : rows) {
    if (row.bound != 0.0) os << "    RHS " << row.name << " " << format_double(row.bound) << "\n";
  }
  os << "BOUNDS\n";
  for (const auto& v : variables) os << " FR BND " << v.name << "\n";
  os << "ENDATA\n";
  return os.str();
}

ConstraintSystem ConstraintSystem::from_mps(const std::string& text) {
  ConstraintSystem sys;
  sys.n = -1;
  std::map<std::string, int> row_index;
  std::map<std::string, int> var_index;
  std::string objective_row;
  std::string section;
  bool saw_end = false;

  auto variable = [&](const std::string& name) {
    auto it = var_index.find(name);
    if (it != var_index.end()) return it->second;
    Variable v;
    v.name = name;
    int a = -1, b = -1;
    unsigned long long s = 0;
    if (std::sscanf(name.c_str(), "phi_%d_%llu", &a, &s) == 2) {
      v.agent = a;
      v.coalition = static_cast<Mask>(s);
    } else if (std::sscanf(name.c_str(), "v_%d_%d", &a, &b) == 2) {
      v.agent = a;
      v.partner = b;
    }
    const int k = static_cast<int>(sys.variables.size());
    sys.variables.push_back(std::move(v));
    var_index.emplace(name, k);
    return k;
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '*') {
      int n = 0;
      char mode[32] = {0};
      if (std::sscanf(line.c_str(), "* fedstab n=%d mode=%31s", &n, mode) == 2) {
        sys.n = n;
        sys.mode = std::string(mode) == "symmetric" ? AllocationMode::kSymmetric : AllocationMode::kGeneral;
      }
      continue;
    }
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      section = tok[0];
      if (section == "ENDATA") {
        saw_end = true;
        break;
      }
      continue;
    }
    if (section == "OBJSENSE") {
      if (tok[0] != "MAX") throw FormatError("only maximisation dumps are supported");
    } else if (section == "ROWS") {
      if (tok.size() != 2) throw FormatError("bad ROWS line: " + line);
      if (tok[0] == "N") {
        objective_row = tok[1];
      } else if (tok[0] == "L") {
        row_index.emplace(tok[1], static_cast<int>(sys.rows.size()));
        sys.rows.push_back(SparseRow{tok[1], {}, 0.0});
      } else {
        throw FormatError("only L and N rows are supported: " + line);
      }
    } else if (section == "COLUMNS") {
      if (tok.size() < 3 || tok.size() % 2 == 0) throw FormatError("bad COLUMNS line: " + line);
      const int var = variable(tok[0]);
      for (std::size_t f = 1; f + 1 < tok.size(); f += 2) {
        const double coef = parse_double(tok[f + 1]);
        if (tok[f] == objective_row) {
          if (coef != 0.0) sys.objective.emplace_back(var, coef);
        } else {
          auto it = row_index.find(tok[f]);
          if (it == row_index.end()) throw FormatError("unknown row '" + tok[f] + "'");
          sys.rows[static_cast<std::size_t>(it->second)].terms.emplace_back(var, coef);
        }
      }
    } else if (section == "RHS") {
      if (tok.size() < 3 || tok.size() % 2 == 0) throw FormatError("bad RHS line: " + line);
      for (std::size_t f = 1; f + 1 < tok.size(); f += 2) {
        auto it = row_index.find(tok[f]);
        if (it == row_index.end()) throw FormatError("unknown row '" + tok[f] + "'");
        sys.rows[static_cast<std::size_t>(it->second)].bound = parse_double(tok[f + 1]);
      }
    } else if (section == "BOUNDS") {
      if (tok.size() != 3 || tok[0] != "FR") throw FormatError("only FR bounds are supported: " + line);
      variable(tok[2]);
    } else if (section != "NAME") {
      throw FormatError("unsupported MPS section '" + section + "'");
    }
  }
  if (!saw_end) throw FormatError("MPS dump missing ENDATA");
  if (sys.n < 0) {
    int n = 0;
    for (const auto& v : sys.variables) n = std::max({n, v.agent + 1, v.partner + 1});
    sys.n = n;
  }
  return sys;
}

int general_variable_index(int n, int i, Mask s) {
  const Coalition c(s, n);
  if (c.size() < 2 || !c.contains(i)) throw ContractError("phi variable needs |S| >= 2 and i in S");
  return general_offsets(n)[s] + rank_in(s, i);
}

ConstraintSystem general_variables(int n) {
  if (n < 1 || n > kMaxAllocationAgents) throw CapacityError("general allocation supports n <= 16");
  ConstraintSystem sys;
  sys.mode = AllocationMode::kGeneral;
  sys.n = n;
  const Mask full = Coalition::grand(n).mask();
  for (Mask s = 0; s <= full; ++s) {
    if (std::popcount(s) < 2) continue;
    for (Mask m = s; m != 0; m &= m - 1) {
      const int i = std::countr_zero(m);
      sys.variables.push_back(Variable{"phi_" + std::to_string(i) + "_" + std::to_string(s), i, s, -1});
    }
  }
  return sys;
}

ConstraintSystem symmetric_variables(int n) {
  require_subset_capacity(n);
  ConstraintSystem sys;
  sys.mode = AllocationMode::kSymmetric;
  sys.n = n;
  for (const auto& [i, j] : pairs_of(Coalition::grand(n))) {
    sys.variables.push_back(Variable{"v_" + std::to_string(i) + "_" + std::to_string(j), i, 0, j});
  }
  return sys;
}

ConstraintSystem build_c1(const GainReport& report, AllocationMode mode) {
  const int n = report.population();
  ConstraintSystem sys = mode == AllocationMode::kGeneral ? general_variables(n) : symmetric_variables(n);
  for (std::size_t k = 0; k < sys.variables.size(); ++k) sys.objective.emplace_back(static_cast<int>(k), 1.0);
  const Mask full = Coalition::grand(n).mask();
  const auto offsets = mode == AllocationMode::kGeneral ? general_offsets(n) : std::vector<int>{};
  MutualGainVector indexer(n);
  for (Mask s = 0; s <= full; ++s) {
    if (std::popcount(s) < 2) continue;
    SparseRow row{"c1_" + std::to_string(s), {}, 0.0};
    if (mode == AllocationMode::kGeneral) {
      for (int r = 0; r < std::popcount(s); ++r) row.terms.emplace_back(offsets[s] + r, 1.0);
      row.bound = report.delta(s);
    } else {
      for (const auto& [i, j] : pairs_of(Coalition(s, n))) {
        row.terms.emplace_back(static_cast<int>(indexer.pair_index(i, j)), 1.0);
      }
      row.bound = report.delta(s) / 2.0;
    }
    sys.rows.push_back(std::move(row));
  }
  return sys;
}

ConstraintSystem build_c2_for_partition(const Partition& partition) {
  const int n = partition.population();
  ConstraintSystem sys = general_variables(n);
  const auto offsets = general_offsets(n);
  auto var = [&](int i, Mask s) { return offsets[s] + rank_in(s, i); };
  for (int i = 0; i < n; ++i) {
    const Mask own = partition.block_of(i).mask();
    const Mask self = Mask{1} << i;
    std::vector<Mask> targets;
    for (const auto& block : partition.blocks()) {
      if (block.mask() != own) targets.push_back(block.mask());
    }
    targets.push_back(0);  // going alone
    for (Mask t : targets) {
      const Mask joined = t | self;
      if (joined == own) continue;
      SparseRow row{"c2_" + std::to_string(i) + "_" + std::to_string(t), {}, 0.0};
      if (std::popcount(joined) >= 2) row.terms.emplace_back(var(i, joined), 1.0);
      if (std::popcount(own) >= 2) row.terms.emplace_back(var(i, own), -1.0);
      if (row.terms.empty()) continue;
      sys.rows.push_back(std::move(row));
    }
  }
  return sys;
}

bool satisfies_c1(const AllocationTable& phi, const GainReport& report) {
  const int n = report.population();
  if (phi.population() != n) throw ContractError("allocation and gain report sizes differ");
  const Mask full = Coalition::grand(n).mask();
  for (Mask s = 1; s <= full; ++s) {
    double total = 0.0;
    for (Mask m = s; m != 0; m &= m - 1) total += phi(std::countr_zero(m), s);
    if (total > report.delta(s) + kConstraintTolerance) return false;
  }
  return true;
}

bool membership_check(const AllocationTable& phi, const GainReport& report) {
  require_partition_capacity(report.population());
  return satisfies_c1(phi, report) && first_nash_stable_partition(phi).has_value();
}

StableSetResult find_general_allocation(const GainReport& report, const GeneralSearchOptions& options) {
  const int n = report.population();
  if (n > kMaxGeneralAgents) {
    throw CapacityError("general allocation search supports n <= " + std::to_string(kMaxGeneralAgents));
  }
  const ConstraintSystem c1 = build_c1(report, AllocationMode::kGeneral);
  StableSetResult result;
  PartitionEnumerator it(n);
  while (it.advance()) {
    const Partition partition = it.partition();
    ConstraintSystem sys = c1;
    sys.append_rows(build_c2_for_partition(partition));
    const lp::Problem problem = sys.to_problem();
    lp::Solution solution = lp::solve(problem);
    ++result.partitions_tried;
    if (solution.status == lp::Status::kUnbounded) throw std::runtime_error("general allocation LP unbounded");
    if (solution.status != lp::Status::kOptimal) continue;

    std::vector<bool> seen(sys.variables.size(), false);
    for (const auto& row : sys.rows) {
      for (const auto& term : row.terms) seen[static_cast<std::size_t>(term.first)] = true;
    }
    AllocationTable table(n);
    for (std::size_t k = 0; k < sys.variables.size(); ++k) {
      const auto& v = sys.variables[k];
      table.set(v.agent, v.coalition, seen[k] ? (*solution.x)[k] : options.sentinel);
    }
    snap_to_partition(table, partition);
    if (!check_nash_stable(partition, table).stable || !satisfies_c1(table, report)) continue;

    result.status = StableSetStatus::kMemberFound;
    result.objective_value = solution.objective;
    result.allocation = std::move(table);
    result.certified_partition = partition;
    result.system = std::move(sys);
    result.lp_solution = std::move(solution);
    return result;
  }
  return result;
}

StableSetResult solve_symmetric_lp(const GainReport& report) {
  const int n = report.population();
  if (n < 2) throw ContractError("symmetric LP needs n >= 2");
  ConstraintSystem sys = build_c1(report, AllocationMode::kSymmetric);
  lp::Solution solution = lp::solve(sys.to_problem());
  if (solution.status != lp::Status::kOptimal) {
    throw std::runtime_error(std::string("symmetric LP returned ") + lp::to_string(solution.status));
  }
  MutualGainVector v(n, *solution.x);
  StableSetResult result;
  result.status = StableSetStatus::kMemberFound;
  result.objective_value = solution.objective;
  result.certified_partition = stable_partition_for(v);
  result.allocation = std::move(v);
  result.system = std::move(sys);
  result.lp_solution = std::move(solution);
  return result;
}

}  // namespace fedstab
