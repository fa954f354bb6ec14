#pragma once

// Synthetic local models, parameter aggregation over received uploads, and
// exact expected-loss evaluation by enumerating reception vectors.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "fedstab/combinatorics.hpp"
#include "fedstab/gain_fn.hpp"

namespace fedstab {

using ModelParams = Eigen::VectorXd;

// L(theta) = (theta - target)^T H (theta - target) + noise_floor
struct QuadraticLoss {
  Eigen::VectorXd target;
  Eigen::MatrixXd curvature;
  double noise_floor = 0.0;
};

// Mean squared error of a linear model on a shared held-out set.
struct RegressionLoss {
  Eigen::MatrixXd features;  // rows are samples
  Eigen::VectorXd labels;
};

enum class EvaluatorKind { kQuadratic, kRegression };

class LossEvaluator {
 public:
  explicit LossEvaluator(QuadraticLoss loss);
  explicit LossEvaluator(RegressionLoss loss);

  double operator()(const ModelParams& theta) const;

  EvaluatorKind kind() const;
  int dim() const;
  const QuadraticLoss* quadratic() const { return std::get_if<QuadraticLoss>(&loss_); }
  const RegressionLoss* regression() const { return std::get_if<RegressionLoss>(&loss_); }

 private:
  std::variant<QuadraticLoss, RegressionLoss> loss_;
};

struct AgentProfile {
  int data_size = 1;
  double reliability = 1.0;
  ModelParams params;
  double local_loss = 0.0;  // cached L(params)
};

struct Scenario {
  int n = 0;
  int dim = 0;
  std::vector<AgentProfile> agents;
  LossEvaluator evaluator{QuadraticLoss{}};
  ModelParams mae_params;
  double mae_weight = 0.5;
  GainFnSpec gain_fn;
  double cost_per_agent = 0.0;
  double fallback_loss = 1.0;  // charged when no upload in a coalition arrives
  std::uint64_t seed = 0;

  // Throws ContractError naming the first broken invariant.
  void validate() const;
};

struct GenerationKnobs {
  EvaluatorKind evaluator = EvaluatorKind::kQuadratic;
  int min_data = 10;
  int max_data = 100;
  double min_reliability = 0.5;
  double max_reliability = 1.0;
  // Quadratic: theta_i ~ target + N(0, spread^2 / m_i) per coordinate.
  double spread = 1.0;
  // Quadratic: the m_i -> infinity limit, theta_i = target exactly.
  bool infinite_data = false;
  double noise_floor = 0.01;
  // Regression: label noise standard deviation.
  double label_noise = 0.5;
  int holdout_size = 200;
  double mae_weight = 0.5;
  int mae_data = 50;
  GainFnSpec gain_fn;
  double cost_per_agent = 0.01;
  // Defaults to the evaluator's loss at the MAE parameters.
  std::optional<double> fallback_loss;

  void validate(int dim) const;
};

Scenario generate_scenario(int n, int dim, std::uint64_t seed, const GenerationKnobs& knobs = {});

// P[x] restricted to the members of S (bits of x outside S are ignored).
double reception_probability(const Coalition& coalition, const ReceptionVector& x, const Scenario& scenario);

// Data-size weighted average of received models in S; mae_params when
// nothing in S was received.
ModelParams aggregate(const Coalition& coalition, const ReceptionVector& x, const Scenario& scenario);

double expected_loss(const Coalition& coalition, const Scenario& scenario);

ModelParams mae_aggregate(const ReceptionVector& x, const Scenario& scenario);

ModelParams expected_mae_params(const Scenario& scenario);

// E_x[L(mae_aggregate(x))], exact over 2^n vectors.
double expected_mae_loss(const Scenario& scenario);

struct MergeCheck {
  ReceptionVector x;
  // Aggregate loss of S is at most the received members' average loss.
  bool single_applicable = false;
  bool single_holds = false;
  double single_margin = 0.0;
  // Loss of S u T is at most the reception-weighted mix of S and T losses.
  bool merge_applicable = false;
  bool merge_holds = false;
  double merge_margin = 0.0;
};

struct MergeDiagnostics {
  std::vector<MergeCheck> checks;
  double single_fraction = 1.0;  // over applicable vectors
  double merge_fraction = 1.0;
};

// Reports, without enforcing, the two modelling assumptions that merging
// clusters does not increase loss. Enumerates reception vectors over S u T.
MergeDiagnostics loss_merge_diagnostics(const Coalition& s, const Coalition& t, const Scenario& scenario);

}  // namespace fedstab
