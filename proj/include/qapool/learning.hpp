#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qapool/pooling.hpp"
#include "qapool/scoring.hpp"

namespace qapool {

/// Expert weights on the probability simplex over m >= 1 experts.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);

  static WeightVector uniform(std::size_t m);
  static WeightVector vertex(std::size_t m, std::size_t i);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// One round of the online problem: every expert's forecast and the realized outcome (0-based).
struct StreamStep {
  std::vector<Forecast> forecasts;
  std::size_t outcome = 0;
};

struct LearningConfig {
  RuleSpec rule = RuleSpec::quadratic();
  std::size_t experts = 0;
  // Upper bound M on the exposure norm. Derived for bounded rules when absent.
  std::optional<double> gradient_bound;
  std::uint64_t seed = 0;
  // Zero means "length of the stream".
  std::size_t horizon = 0;
};

struct RegretReport {
  std::vector<double> per_step_loss;
  // Loss of the best fixed weights (chosen in hindsight over the whole run) at each step.
  std::vector<double> comparator_loss;
  WeightVector final_weights = WeightVector::uniform(1);
  WeightVector best_weights = WeightVector::uniform(1);
  double learner_loss = 0.0;
  double best_fixed_loss = 0.0;
  double cumulative_regret = 0.0;
  double gradient_bound = 0.0;
  double bound = 0.0;
  double max_exposure_norm = 0.0;
  // Set when some observed exposure norm exceeded the supplied bound M.
  bool gradient_bound_violated = false;

  /// Regret against the final comparator after the first t steps.
  double regret_after(std::size_t t) const;
};

/// WS_j(w): score of the QA pool under weights w when outcome j occurs.
double weight_score(const RuleSpec& rule, std::span<const Forecast> forecasts, const WeightVector& w,
                    std::size_t outcome);

/// Gradient of L(w) = -WS_j(w): entry i is <g(p_i), p*(w) - delta_j>, shifted to sum to zero.
std::vector<double> loss_gradient(const RuleSpec& rule, std::span<const Forecast> forecasts,
                                  const WeightVector& w, std::size_t outcome);

/// Euclidean projection onto the probability simplex.
WeightVector project_to_simplex(std::span<const double> y);

/// Analytic sup of the canonical exposure norm over the closed simplex, for
/// rules with bounded exposure and convex range. Throws ConfigError otherwise.
double default_gradient_bound(const RuleSpec& rule, std::size_t n);

/// 3 sqrt(m) M sqrt(T).
double regret_bound(std::size_t experts, double gradient_bound, std::size_t horizon);

struct OfflineBest {
  WeightVector weights = WeightVector::uniform(1);
  double total_score = 0.0;
  double residual = 0.0;
};

/// Weights maximizing the total weight-score of the first `prefix` steps
/// (all steps when prefix is 0).
OfflineBest offline_best_weights(const RuleSpec& rule, std::span<const StreamStep> stream,
                                 std::size_t prefix = 0);

/// Stateful online gradient descent over expert weights: pool with the current
/// weights, observe the outcome, take one projected gradient step.
class OgdLearner {
 public:
  OgdLearner(RuleSpec rule, std::size_t experts, double gradient_bound);

  const WeightVector& weights() const { return weights_; }
  std::size_t steps() const { return steps_; }

  /// Pool of `forecasts` under the current weights.
  Forecast predict(std::span<const Forecast> forecasts) const;

  /// Scores the current pool on `outcome`, updates the weights and returns the loss -s(p*; j).
  double update(std::span<const Forecast> forecasts, std::size_t outcome);

 private:
  RuleSpec rule_;
  double gradient_bound_;
  WeightVector weights_;
  std::size_t steps_ = 0;
};

/// Online gradient descent with eta_t = 1/(M sqrt(m t)) from uniform weights,
/// evaluated against offline_best_weights on the same stream.
RegretReport ogd_run(const LearningConfig& config, std::span<const StreamStep> stream);

/// Checks every step has config.experts forecasts of one outcome count and a valid outcome.
void validate_stream(std::span<const StreamStep> stream, std::size_t experts);

}  // namespace qapool
