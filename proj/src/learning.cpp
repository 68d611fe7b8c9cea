#include "qapool/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qapool/errors.hpp"
#include "qapool/numerics.hpp"

namespace qapool {

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("a weight vector needs at least one expert");
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw DomainError("weights must be nonnegative and finite");
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) throw DomainError("weights must sum to 1");
  for (double& w : weights_) w /= total;
}

WeightVector WeightVector::uniform(std::size_t m) {
  return WeightVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

WeightVector WeightVector::vertex(std::size_t m, std::size_t i) {
  if (i >= m) throw IndexError("expert index out of range");
  std::vector<double> w(m, 0.0);
  w[i] = 1.0;
  return WeightVector(std::move(w));
}

double RegretReport::regret_after(std::size_t t) const {
  t = std::min(t, per_step_loss.size());
  double regret = 0.0;
  for (std::size_t s = 0; s < t; ++s) regret += per_step_loss[s] - comparator_loss[s];
  return regret;
}

namespace {

// Exposures of one step's forecasts, computed once and reused for every weight vector.
struct StepExposures {
  std::vector<ExposureVector> exposures;
  std::size_t outcome = 0;
};

StepExposures cache_step(const RuleSpec& rule, std::span<const Forecast> forecasts, std::size_t outcome) {
  StepExposures cache;
  cache.outcome = outcome;
  cache.exposures.reserve(forecasts.size());
  for (const auto& p : forecasts) cache.exposures.push_back(exposure(rule, p));
  return cache;
}

Forecast pool_cached(const RuleSpec& rule, const StepExposures& step, std::span<const double> w) {
  const std::size_t n = step.exposures.front().size();
  std::vector<double> avg(n, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) avg[j] += w[i] * step.exposures[i][j];
  }
  return invert_exposure(rule, ExposureVector::canonicalize(std::move(avg)));
}

void gradient_cached(const StepExposures& step, const Forecast& pooled, std::span<double> out) {
  const std::size_t m = step.exposures.size();
  const std::size_t n = pooled.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += step.exposures[i][j] * (pooled[j] - (j == step.outcome ? 1.0 : 0.0));
    }
    out[i] = dot;
    mean += dot;
  }
  mean /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) out[i] -= mean;
}

void check_inputs(std::span<const Forecast> forecasts, const WeightVector& w, std::size_t outcome) {
  if (forecasts.empty()) throw DomainError("no expert forecasts");
  if (forecasts.size() != w.size()) throw DomainError("weight vector and forecast list differ in length");
  const std::size_t n = forecasts.front().size();
  for (const auto& p : forecasts) {
    if (p.size() != n) throw DomainError("expert forecasts must share the outcome count");
  }
  if (outcome >= n) throw IndexError("outcome index out of range");
}

}  // namespace

double weight_score(const RuleSpec& rule, std::span<const Forecast> forecasts, const WeightVector& w,
                    std::size_t outcome) {
  check_inputs(forecasts, w, outcome);
  std::vector<WeightedForecast> inputs;
  inputs.reserve(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) inputs.push_back({forecasts[i], w[i]});
  return score(rule, qa_pool(rule, inputs).pooled, outcome);
}

std::vector<double> loss_gradient(const RuleSpec& rule, std::span<const Forecast> forecasts,
                                  const WeightVector& w, std::size_t outcome) {
  check_inputs(forecasts, w, outcome);
  std::vector<WeightedForecast> inputs;
  inputs.reserve(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) inputs.push_back({forecasts[i], w[i]});
  const Forecast pooled = qa_pool(rule, inputs).pooled;
  const StepExposures step = cache_step(rule, forecasts, outcome);
  std::vector<double> grad(forecasts.size());
  gradient_cached(step, pooled, grad);
  return grad;
}

WeightVector project_to_simplex(std::span<const double> y) {
  if (y.empty()) throw DomainError("cannot project an empty vector");
  std::vector<double> x = numerics::project_to_simplex(y);
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= total;
  return WeightVector(std::move(x));
}

double default_gradient_bound(const RuleSpec& rule, std::size_t n) {
  if (rule.domain_kind() == DomainKind::OpenSimplex) {
    throw ConfigError("rule " + rule.to_string() +
                      " has unbounded exposure; supply the gradient bound M explicitly");
  }
  if (!has_convex_exposure(rule, n)) {
    throw ConfigError("rule " + rule.to_string() + " lacks convex exposure at this outcome count");
  }
  // The supremum sits at the centroid of some face of the simplex.
  double bound = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> centroid(n, 0.0);
    std::fill_n(centroid.begin(), k, 1.0 / static_cast<double>(k));
    bound = std::max(bound, exposure(rule, Forecast(std::move(centroid))).norm());
  }
  return bound;
}

double regret_bound(std::size_t experts, double gradient_bound, std::size_t horizon) {
  return 3.0 * std::sqrt(static_cast<double>(experts)) * gradient_bound *
         std::sqrt(static_cast<double>(horizon));
}

void validate_stream(std::span<const StreamStep> stream, std::size_t experts) {
  if (stream.empty()) throw DomainError("empty stream");
  const std::size_t m = experts == 0 ? stream.front().forecasts.size() : experts;
  if (m == 0) throw DomainError("stream steps need at least one expert forecast");
  const std::size_t n = stream.front().forecasts.front().size();
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const auto& step = stream[t];
    if (step.forecasts.size() != m) {
      std::ostringstream msg;
      msg << "step " << t + 1 << " has " << step.forecasts.size() << " forecasts, expected " << m;
      throw DomainError(msg.str());
    }
    for (const auto& p : step.forecasts) {
      if (p.size() != n) throw DomainError("stream forecasts must share the outcome count");
    }
    if (step.outcome >= n) throw IndexError("stream outcome out of range");
  }
}

OfflineBest offline_best_weights(const RuleSpec& rule, std::span<const StreamStep> stream, std::size_t prefix) {
  validate_stream(stream, 0);
  const std::size_t steps = prefix == 0 ? stream.size() : std::min(prefix, stream.size());
  const std::size_t m = stream.front().forecasts.size();

  std::vector<StepExposures> cache;
  cache.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    cache.push_back(cache_step(rule, stream[t].forecasts, stream[t].outcome));
  }
  const double scale = 1.0 / static_cast<double>(steps);

  // Average loss keeps the tolerance independent of the horizon.
  numerics::SimplexProblem problem;
  problem.objective = [&](std::span<const double> w) {
    double total = 0.0;
    for (const auto& step : cache) total -= score(rule, pool_cached(rule, step, w), step.outcome);
    return total * scale;
  };
  problem.gradient = [&](std::span<const double> w, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> g(m);
    for (const auto& step : cache) {
      gradient_cached(step, pool_cached(rule, step, w), g);
      for (std::size_t i = 0; i < m; ++i) out[i] += g[i] * scale;
    }
  };

  numerics::SimplexSolverOptions options;
  options.tolerance = 1e-10;
  options.max_iterations = 1000000;
  auto minimum = numerics::minimize_on_simplex(problem, std::vector<double>(m, 1.0 / static_cast<double>(m)),
                                               options);
  OfflineBest best;
  best.weights = project_to_simplex(minimum.point);
  best.total_score = -minimum.value / scale;
  best.residual = minimum.residual;
  return best;
}

OgdLearner::OgdLearner(RuleSpec rule, std::size_t experts, double gradient_bound)
    : rule_(std::move(rule)), gradient_bound_(gradient_bound), weights_(WeightVector::uniform(experts)) {
  if (experts == 0) throw ConfigError("the learner needs at least one expert");
  if (!(gradient_bound > 0.0) || !std::isfinite(gradient_bound)) throw ConfigError("gradient bound M must be positive");
}

Forecast OgdLearner::predict(std::span<const Forecast> forecasts) const {
  check_inputs(forecasts, weights_, 0);
  return pool_cached(rule_, cache_step(rule_, forecasts, 0), weights_.weights());
}

double OgdLearner::update(std::span<const Forecast> forecasts, std::size_t outcome) {
  check_inputs(forecasts, weights_, outcome);
  const std::size_t m = weights_.size();
  const StepExposures step = cache_step(rule_, forecasts, outcome);
  const Forecast pooled = pool_cached(rule_, step, weights_.weights());
  const double loss = -score(rule_, pooled, outcome);

  ++steps_;
  std::vector<double> grad(m), shifted(m);
  gradient_cached(step, pooled, grad);
  const double eta = 1.0 / (gradient_bound_ * std::sqrt(static_cast<double>(m) * static_cast<double>(steps_)));
  for (std::size_t i = 0; i < m; ++i) shifted[i] = weights_[i] - eta * grad[i];
  weights_ = project_to_simplex(shifted);
  return loss;
}

RegretReport ogd_run(const LearningConfig& config, std::span<const StreamStep> stream) {
  validate_stream(stream, config.experts);
  const RuleSpec& rule = config.rule;
  const std::size_t m = stream.front().forecasts.size();
  const std::size_t n = stream.front().forecasts.front().size();
  if (config.horizon > stream.size()) throw ConfigError("horizon exceeds the stream length");
  const std::size_t horizon = config.horizon == 0 ? stream.size() : config.horizon;
  const std::span<const StreamStep> steps = stream.first(horizon);

  double bound_m = 0.0;
  if (config.gradient_bound) {
    bound_m = *config.gradient_bound;
    if (!(bound_m > 0.0) || !std::isfinite(bound_m)) throw ConfigError("gradient bound M must be positive");
  } else {
    bound_m = default_gradient_bound(rule, n);
  }

  RegretReport report;
  report.gradient_bound = bound_m;
  report.per_step_loss.reserve(horizon);

  OgdLearner learner(rule, m, bound_m);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (const auto& p : steps[t].forecasts) {
      report.max_exposure_norm = std::max(report.max_exposure_norm, exposure(rule, p).norm());
    }
    report.per_step_loss.push_back(learner.update(steps[t].forecasts, steps[t].outcome));
  }
  report.gradient_bound_violated = report.max_exposure_norm > bound_m * (1.0 + 1e-12);
  report.final_weights = learner.weights();

  const OfflineBest best = offline_best_weights(rule, steps);
  report.best_weights = best.weights;
  report.comparator_loss.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const StepExposures step = cache_step(rule, steps[t].forecasts, steps[t].outcome);
    report.comparator_loss.push_back(-score(rule, pool_cached(rule, step, best.weights.weights()),
                                                   step.outcome));
  }
  report.learner_loss = std::accumulate(report.per_step_loss.begin(), report.per_step_loss.end(), 0.0);
  report.best_fixed_loss = std::accumulate(report.comparator_loss.begin(), report.comparator_loss.end(), 0.0);
  report.cumulative_regret = report.learner_loss - report.best_fixed_loss;
  report.bound = regret_bound(m, bound_m, horizon);
  return report;
}

}  // namespace qapool
