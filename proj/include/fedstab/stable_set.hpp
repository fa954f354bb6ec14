#pragma once

// Budget-balance constraints (C1), Nash-stability constraints for a fixed
// partition (C2), the general feasibility search over partitions and the
// linear program over symmetric mutual gains.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fedstab/gains.hpp"
#include "fedstab/hedonic.hpp"
#include "fedstab/lp_solver.hpp"

namespace fedstab {

inline constexpr int kMaxGeneralAgents = 8;
inline constexpr double kConstraintTolerance = 1e-9;

enum class AllocationMode { kGeneral, kSymmetric };

// Either phi_i^S (general) or v(i,j) (symmetric).
struct Variable {
  std::string name;
  int agent = -1;      // general: i; symmetric: i
  Mask coalition = 0;  // general: S
  int partner = -1;    // symmetric: j
};

struct SparseRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)
  double bound = 0.0;                         // terms . x <= bound
};

struct ConstraintSystem {
  AllocationMode mode = AllocationMode::kGeneral;
  int n = 0;
  std::vector<Variable> variables;
  std::vector<SparseRow> rows;
  std::vector<std::pair<int, double>> objective;  // maximised

  int variable_index(const std::string& name) const;
  lp::Problem to_problem() const;
  // Appends other's rows; variables must match.
  void append_rows(const ConstraintSystem& other);

  // Free-format MPS with all columns free (BOUNDS FR).
  std::string to_mps(const std::string& model_name = "fedstab") const;
  static ConstraintSystem from_mps(const std::string& text);
};

// Variable index of phi_i^S in the general layout (|S| >= 2, i in S).
int general_variable_index(int n, int i, Mask s);
ConstraintSystem general_variables(int n);
ConstraintSystem symmetric_variables(int n);

ConstraintSystem build_c1(const GainReport& report, AllocationMode mode);
ConstraintSystem build_c2_for_partition(const Partition& partition);

enum class StableSetStatus { kMemberFound, kInfeasibleAtCap };

struct StableSetResult {
  StableSetStatus status = StableSetStatus::kInfeasibleAtCap;
  std::variant<std::monostate, AllocationTable, MutualGainVector> allocation;
  std::optional<Partition> certified_partition;
  std::optional<double> objective_value;
  std::uint64_t partitions_tried = 0;
  // The LP that produced the allocation and its solution, for certificates.
  std::optional<ConstraintSystem> system;
  std::optional<lp::Solution> lp_solution;
};

struct GeneralSearchOptions {
  // Entries that appear in no constraint row are completed with this value.
  double sentinel = -1e6;
};

StableSetResult find_general_allocation(const GainReport& report, const GeneralSearchOptions& options = {});
StableSetResult solve_symmetric_lp(const GainReport& report);

bool satisfies_c1(const AllocationTable& phi, const GainReport& report);
bool membership_check(const AllocationTable& phi, const GainReport& report);

const char* to_string(StableSetStatus status);

}  // namespace fedstab
