#include "fedstab/learning.hpp"

#include <cmath>
#include <string>

#include "fedstab/error.hpp"
#include "fedstab/rng.hpp"

namespace fedstab {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr int kRegressionRetries = 3;
constexpr double kSingularRcond = 1e-12;
constexpr double kAssumptionSlack = 1e-12;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void check_quadratic(const QuadraticLoss& q) {
  const auto dim = q.target.size();
  if (q.curvature.rows() != dim || q.curvature.cols() != dim) {
    throw ContractError("quadratic curvature must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!(q.noise_floor >= 0.0) || !std::isfinite(q.noise_floor)) {
    throw ContractError("quadratic noise floor must be finite and >= 0");
  }
  if (dim == 0) return;
  if (!q.curvature.isApprox(q.curvature.transpose(), 1e-12)) {
    throw ContractError("quadratic curvature must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.curvature, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kPsdTolerance) {
    throw ContractError("quadratic curvature is not positive semidefinite");
  }
}

void check_regression(const RegressionLoss& r) {
  if (r.features.rows() == 0) throw ContractError("regression evaluation set is empty");
  if (r.labels.size() != r.features.rows()) throw ContractError("regression labels/features length mismatch");
}

// Weighted combination of received models; nullopt when none received.
std::optional<ModelParams> received_average(const Coalition& coalition, const ReceptionVector& x,
                                            const Scenario& scenario) {
  double total = 0.0;
  for (int i : coalition.members()) {
    if (x.bit(i)) total += scenario.agents[static_cast<std::size_t>(i)].data_size;
  }
  if (total == 0.0) return std::nullopt;
  ModelParams out = ModelParams::Zero(scenario.dim);
  for (int i : coalition.members()) {
    if (!x.bit(i)) continue;
    const auto& agent = scenario.agents[static_cast<std::size_t>(i)];
    out += (agent.data_size / total) * agent.params;
  }
  return out;
}

void require_nonempty(const Coalition& coalition) {
  if (coalition.is_empty()) throw ContractError("coalition must be non-empty");
}

ModelParams fit_least_squares(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, bool& ok) {
  const Eigen::MatrixXd gram = features.transpose() * features;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > kSingularRcond;
  if (!ok) return {};
  return ldlt.solve(features.transpose() * labels);
}

struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
};

Dataset draw_dataset(Rng& rng, int samples, const Eigen::VectorXd& truth, double noise) {
  const auto dim = truth.size();
  Dataset d{Eigen::MatrixXd(samples, dim), Eigen::VectorXd(samples)};
  for (int r = 0; r < samples; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) d.features(r, c) = rng.normal();
    d.labels(r) = d.features.row(r).dot(truth) + rng.normal(0.0, noise);
  }
  return d;
}

ModelParams fit_with_retries(Rng& rng, int samples, const Eigen::VectorXd& truth, double noise) {
  for (int attempt = 0; attempt <= kRegressionRetries; ++attempt) {
    const Dataset d = draw_dataset(rng, samples, truth, noise);
    bool ok = false;
    ModelParams fit = fit_least_squares(d.features, d.labels, ok);
    if (ok) return fit;
  }
  throw DomainError("least-squares fit singular after " + std::to_string(kRegressionRetries) +
                    " regenerations (samples = " + std::to_string(samples) + ", dim = " +
                    std::to_string(truth.size()) + ")");
}

}  // namespace

std::string_view to_string(GainFnKind kind) { return kind == GainFnKind::kLinear ? "linear" : "log"; }

GainFnKind gain_fn_kind_from_string(std::string_view name) {
  if (name == "linear") return GainFnKind::kLinear;
  if (name == "log") return GainFnKind::kLog;
  throw ContractError("unknown gain function kind '" + std::string(name) + "'");
}

LossEvaluator::LossEvaluator(QuadraticLoss loss) : loss_(std::move(loss)) { check_quadratic(std::get<QuadraticLoss>(loss_)); }

LossEvaluator::LossEvaluator(RegressionLoss loss) : loss_(std::move(loss)) {
  check_regression(std::get<RegressionLoss>(loss_));
}

double LossEvaluator::operator()(const ModelParams& theta) const {
  if (const auto* q = quadratic()) {
    const Eigen::VectorXd d = theta - q->target;
    return d.dot(q->curvature * d) + q->noise_floor;
  }
  const auto& r = std::get<RegressionLoss>(loss_);
  return (r.features * theta - r.labels).squaredNorm() / static_cast<double>(r.features.rows());
}

EvaluatorKind LossEvaluator::kind() const {
  return quadratic() ? EvaluatorKind::kQuadratic : EvaluatorKind::kRegression;
}

int LossEvaluator::dim() const {
  if (const auto* q = quadratic()) return static_cast<int>(q->target.size());
  return static_cast<int>(std::get<RegressionLoss>(loss_).features.cols());
}

void Scenario::validate() const {
  if (n < 1) throw ContractError("scenario needs at least one agent");
  if (static_cast<int>(agents.size()) != n) throw ContractError("scenario agent list length != n");
  if (dim < 1) throw ContractError("model dimension must be >= 1");
  if (evaluator.dim() != dim) throw ContractError("evaluator dimension != model dimension");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string who = "agent " + std::to_string(i) + ": ";
    if (a.data_size < 1) throw ContractError(who + "data size must be >= 1");
    if (!(a.reliability >= 0.0 && a.reliability <= 1.0)) throw ContractError(who + "reliability outside [0,1]");
    if (a.params.size() != dim || !all_finite(a.params)) throw ContractError(who + "bad parameter vector");
    if (!(a.local_loss >= 0.0) || !std::isfinite(a.local_loss)) throw ContractError(who + "bad local loss");
  }
  if (mae_params.size() != dim || !all_finite(mae_params)) throw ContractError("bad MAE parameter vector");
  if (!(mae_weight >= 0.0 && mae_weight <= 1.0)) throw ContractError("MAE weight outside [0,1]");
  if (!(gain_fn.scale > 0.0) || !std::isfinite(gain_fn.scale)) throw ContractError("gain scale must be > 0");
  if (!(cost_per_agent >= 0.0) || !std::isfinite(cost_per_agent)) throw ContractError("cost per agent must be >= 0");
  if (!(fallback_loss > 0.0) || !std::isfinite(fallback_loss)) throw ContractError("fallback loss must be > 0");
}

void GenerationKnobs::validate(int dim) const {
  if (min_data < 1 || max_data < min_data) throw ContractError("need 1 <= min_data <= max_data");
  if (!(min_reliability >= 0.0 && max_reliability <= 1.0 && min_reliability <= max_reliability)) {
    throw ContractError("need 0 <= min_reliability <= max_reliability <= 1");
  }
  if (!(spread >= 0.0)) throw ContractError("spread must be >= 0");
  if (!(noise_floor >= 0.0)) throw ContractError("noise floor must be >= 0");
  if (!(label_noise >= 0.0)) throw ContractError("label noise must be >= 0");
  if (holdout_size < 1) throw ContractError("holdout size must be >= 1");
  if (!(mae_weight >= 0.0 && mae_weight <= 1.0)) throw ContractError("MAE weight outside [0,1]");
  if (mae_data < 1) throw ContractError("MAE data size must be >= 1");
  if (!(gain_fn.scale > 0.0)) throw ContractError("gain scale must be > 0");
  if (!(cost_per_agent >= 0.0)) throw ContractError("cost per agent must be >= 0");
  if (fallback_loss && !(*fallback_loss > 0.0)) throw ContractError("fallback loss must be > 0");
  // Fewer samples than dim is allowed; the fit then fails its retries.
  (void)dim;
}

Scenario generate_scenario(int n, int dim, std::uint64_t seed, const GenerationKnobs& knobs) {
  if (n < 1) throw ContractError("n must be >= 1");
  if (dim < 1) throw ContractError("dim must be >= 1");
  knobs.validate(dim);
  Rng rng(seed);

  Scenario s;
  s.n = n;
  s.dim = dim;
  s.seed = seed;
  s.mae_weight = knobs.mae_weight;
  s.gain_fn = knobs.gain_fn;
  s.cost_per_agent = knobs.cost_per_agent;

  std::vector<int> sizes(static_cast<std::size_t>(n));
  std::vector<double> reliabilities(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    sizes[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(knobs.min_data, knobs.max_data));
    reliabilities[static_cast<std::size_t>(i)] = rng.uniform(knobs.min_reliability, knobs.max_reliability);
  }

  Eigen::VectorXd truth(dim);
  for (int c = 0; c < dim; ++c) truth(c) = rng.normal();

  std::vector<ModelParams> params;
  if (knobs.evaluator == EvaluatorKind::kQuadratic) {
    Eigen::MatrixXd a(dim, dim);
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) a(r, c) = rng.normal();
    }
    Eigen::MatrixXd h = a * a.transpose() / dim + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    h = 0.5 * (h + h.transpose());
    s.evaluator = LossEvaluator(QuadraticLoss{truth, h, knobs.noise_floor});
    auto draw_near_truth = [&](int samples) {
      ModelParams theta = truth;
      const double sd = knobs.spread / std::sqrt(static_cast<double>(samples));
      for (int c = 0; c < dim; ++c) {
        const double z = rng.normal();
        if (!knobs.infinite_data) theta(c) += sd * z;
      }
      return theta;
    };
    for (int i = 0; i < n; ++i) params.push_back(draw_near_truth(sizes[static_cast<std::size_t>(i)]));
    s.mae_params = draw_near_truth(knobs.mae_data);
  } else {
    Dataset holdout = draw_dataset(rng, knobs.holdout_size, truth, knobs.label_noise);
    s.evaluator = LossEvaluator(RegressionLoss{std::move(holdout.features), std::move(holdout.labels)});
    for (int i = 0; i < n; ++i) {
      params.push_back(fit_with_retries(rng, sizes[static_cast<std::size_t>(i)], truth, knobs.label_noise));
    }
    s.mae_params = fit_with_retries(rng, knobs.mae_data, truth, knobs.label_noise);
  }

  for (int i = 0; i < n; ++i) {
    AgentProfile agent;
    agent.data_size = sizes[static_cast<std::size_t>(i)];
    agent.reliability = reliabilities[static_cast<std::size_t>(i)];
    agent.params = std::move(params[static_cast<std::size_t>(i)]);
    agent.local_loss = s.evaluator(agent.params);
    s.agents.push_back(std::move(agent));
  }
  s.fallback_loss = knobs.fallback_loss.value_or(std::max(s.evaluator(s.mae_params), 1e-12));
  s.validate();
  return s;
}

double reception_probability(const Coalition& coalition, const ReceptionVector& x, const Scenario& scenario) {
  double prob = 1.0;
  for (int i : coalition.members()) {
    const double p = scenario.agents[static_cast<std::size_t>(i)].reliability;
    prob *= x.bit(i) ? p : 1.0 - p;
  }
  return prob;
}

ModelParams aggregate(const Coalition& coalition, const ReceptionVector& x, const Scenario& scenario) {
  require_nonempty(coalition);
  auto avg = received_average(coalition, x, scenario);
  return avg ? *std::move(avg) : scenario.mae_params;
}

double expected_loss(const Coalition& coalition, const Scenario& scenario) {
  require_nonempty(coalition);
  double total = 0.0;
  ReceptionEnumerator it(coalition);
  while (auto x = it.next()) {
    const double prob = reception_probability(coalition, *x, scenario);
    if (prob == 0.0) continue;
    if (x->received == 0) {
      total += scenario.fallback_loss * prob;
    } else {
      total += scenario.evaluator(*received_average(coalition, *x, scenario)) * prob;
    }
  }
  return total;
}

ModelParams mae_aggregate(const ReceptionVector& x, const Scenario& scenario) {
  const Coalition everyone = Coalition::grand(scenario.n);
  const double w = scenario.mae_weight;
  return w * scenario.mae_params + (1.0 - w) * aggregate(everyone, x, scenario);
}

ModelParams expected_mae_params(const Scenario& scenario) {
  const Coalition everyone = Coalition::grand(scenario.n);
  ModelParams mean = ModelParams::Zero(scenario.dim);
  ReceptionEnumerator it(everyone);
  while (auto x = it.next()) {
    const double prob = reception_probability(everyone, *x, scenario);
    if (prob == 0.0) continue;
    mean += prob * aggregate(everyone, *x, scenario);
  }
  const double w = scenario.mae_weight;
  return w * scenario.mae_params + (1.0 - w) * mean;
}

double expected_mae_loss(const Scenario& scenario) {
  const Coalition everyone = Coalition::grand(scenario.n);
  double total = 0.0;
  ReceptionEnumerator it(everyone);
  while (auto x = it.next()) {
    const double prob = reception_probability(everyone, *x, scenario);
    if (prob == 0.0) continue;
    total += prob * scenario.evaluator(mae_aggregate(*x, scenario));
  }
  return total;
}

MergeDiagnostics loss_merge_diagnostics(const Coalition& s, const Coalition& t, const Scenario& scenario) {
  require_nonempty(s);
  require_nonempty(t);
  const bool disjoint = (s.mask() & t.mask()) == 0;
  const Coalition both(s.mask() | t.mask(), scenario.n);

  auto received_count = [](const Coalition& c, const ReceptionVector& x) {
    return std::popcount(c.mask() & x.received);
  };

  MergeDiagnostics out;
  int single_total = 0, single_ok = 0, merge_total = 0, merge_ok = 0;
  ReceptionEnumerator it(both);
  while (auto x = it.next()) {
    MergeCheck check;
    check.x = *x;
    const int in_s = received_count(s, *x);
    const int in_t = received_count(t, *x);
    if (in_s > 0) {
      double avg = 0.0;
      for (int i : s.members()) {
        if (x->bit(i)) avg += scenario.agents[static_cast<std::size_t>(i)].local_loss;
      }
      avg /= in_s;
      const double lhs = scenario.evaluator(*received_average(s, *x, scenario));
      check.single_applicable = true;
      check.single_margin = avg - lhs;
      check.single_holds = check.single_margin >= -kAssumptionSlack;
      ++single_total;
      single_ok += check.single_holds;
    }
    if (disjoint && in_s + in_t > 0) {
      const double total = in_s + in_t;
      double rhs = 0.0;
      if (in_s > 0) rhs += (in_s / total) * scenario.evaluator(*received_average(s, *x, scenario));
      if (in_t > 0) rhs += (in_t / total) * scenario.evaluator(*received_average(t, *x, scenario));
      const double lhs = scenario.evaluator(*received_average(both, *x, scenario));
      check.merge_applicable = true;
      check.merge_margin = rhs - lhs;
      check.merge_holds = check.merge_margin >= -kAssumptionSlack;
      ++merge_total;
      merge_ok += check.merge_holds;
    }
    out.checks.push_back(check);
  }
  if (single_total) out.single_fraction = static_cast<double>(single_ok) / single_total;
  if (merge_total) out.merge_fraction = static_cast<double>(merge_ok) / merge_total;
  return out;
}

}  // namespace fedstab
