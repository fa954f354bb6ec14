#pragma once

#include <string_view>

namespace fedstab {

enum class GainFnKind { kLinear, kLog };

// Monetary value of an inverse-loss quantity z: linear alpha*z or
// logarithmic alpha*ln(1+z). Both are strictly increasing on (0, inf).
struct GainFnSpec {
  GainFnKind kind = GainFnKind::kLinear;
  double scale = 1.0;

  bool operator==(const GainFnSpec&) const = default;
};

std::string_view to_string(GainFnKind kind);
GainFnKind gain_fn_kind_from_string(std::string_view name);

}  // namespace fedstab
