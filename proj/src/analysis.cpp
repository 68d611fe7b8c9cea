#include "qapool/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qapool/errors.hpp"
#include "qapool/learning.hpp"

namespace qapool {

namespace {

double normalized_weight_total(std::span<const WeightedForecast> inputs) {
  if (inputs.empty()) throw DegenerateError("no inputs");
  double total = 0.0;
  for (const auto& in : inputs) {
    if (!std::isfinite(in.weight) || in.weight < 0.0) throw DomainError("weights must be nonnegative and finite");
    total += in.weight;
  }
  if (total <= 0.0) throw DegenerateError("every weight is zero");
  return total;
}

double min_utility(const RuleSpec& rule, const Forecast& report, std::span<const WeightedForecast> inputs) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < report.size(); ++j) {
    worst = std::min(worst, aggregator_utility(rule, report, inputs, j));
  }
  return worst;
}

double max_abs_diff(const Forecast& a, const Forecast& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(d);
}

double uniform_weight(Rng& rng) {
  // (0, 1]: zero weights are handled separately by the pooling code.
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

Rng sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Forecast sample_forecast(Rng& rng, std::size_t n, double floor) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> x(n);
  for (;;) {
    double total = 0.0;
    for (double& v : x) {
      v = gamma(rng);
      total += v;
    }
    if (total <= 0.0) continue;
    for (double& v : x) v /= total;
    if (*std::min_element(x.begin(), x.end()) >= floor) return Forecast(x);
  }
}

double sampling_floor(const RuleSpec& rule) {
  return rule.domain_kind() == DomainKind::OpenSimplex ? 1e-3 : 0.0;
}

double aggregator_utility(const RuleSpec& rule, const Forecast& report, std::span<const WeightedForecast> inputs,
                          std::size_t outcome) {
  const double total = normalized_weight_total(inputs);
  double paid = 0.0;
  for (const auto& in : inputs) {
    if (in.forecast.size() != report.size()) throw DomainError("forecasts differ in outcome count");
    if (in.weight == 0.0) continue;
    paid += in.weight / total * score(rule, in.forecast, outcome);
  }
  return score(rule, report, outcome) - paid;
}

SurplusReport surplus_report(const RuleSpec& rule, std::span<const WeightedForecast> inputs) {
  PoolResult pool = qa_pool(rule, inputs);
  SurplusReport report{pool.pooled, {}, 0.0, 0.0, 0.0};
  const std::size_t n = pool.pooled.size();
  report.per_outcome_utility.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    report.per_outcome_utility.push_back(aggregator_utility(rule, pool.pooled, inputs, j));
  }
  const auto [lo, hi] = std::minmax_element(report.per_outcome_utility.begin(), report.per_outcome_utility.end());
  report.surplus = *lo;
  report.equalization_gap = *hi - *lo;
  for (const auto& in : inputs) {
    if (in.weight == 0.0) continue;
    report.bregman_sum += in.weight / pool.total_weight * bregman(rule, pool.pooled, in.forecast);
  }
  return report;
}

MaxMinCheck maxmin_verify(const RuleSpec& rule, std::span<const WeightedForecast> inputs, std::size_t trials,
                          std::uint64_t seed) {
  const Forecast pooled = qa_pool(rule, inputs).pooled;
  const std::size_t n = pooled.size();
  const double floor = rule.domain_kind() == DomainKind::OpenSimplex ? kOpenSimplexFloor : 0.0;

  MaxMinCheck check;
  check.best_value = min_utility(rule, pooled, inputs);
  check.worst_margin = std::numeric_limits<double>::infinity();

  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = sample_rng(seed, trial);
    std::vector<double> q;
    if (trial % 2 == 0) {
      // Small step from p* along a random tangent direction.
      std::normal_distribution<double> normal;
      std::vector<double> dir(n);
      for (int attempt = 0; attempt < 100 && q.empty(); ++attempt) {
        for (double& d : dir) d = normal(rng);
        const double mean = std::accumulate(dir.begin(), dir.end(), 0.0) / static_cast<double>(n);
        for (double& d : dir) d -= mean;
        const double len = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
        if (len == 0.0) continue;
        for (double& d : dir) d /= len;
        // Longest step keeping every coordinate above the floor.
        double reach = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (dir[j] < 0.0) reach = std::min(reach, (pooled[j] - floor) / -dir[j]);
        }
        if (reach < 1e-3) continue;
        const double radius = std::exp(std::uniform_real_distribution<double>(
            std::log(1e-3), std::log(std::min(0.1, reach)))(rng));
        std::vector<double> candidate(n);
        for (std::size_t j = 0; j < n; ++j) candidate[j] = std::max(pooled[j] + radius * dir[j], floor);
        q = std::move(candidate);
      }
    }
    if (q.empty()) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        Forecast draw = sample_forecast(rng, n, rule.domain_kind() == DomainKind::OpenSimplex ? 1e-6 : 0.0);
        if (distance(draw.probs(), pooled.probs()) >= 1e-3) {
          q.assign(draw.probs().begin(), draw.probs().end());
          break;
        }
      }
    }
    if (q.empty()) continue;
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& v : q) v /= total;
    const Forecast alternative(q);
    const double margin = check.best_value - min_utility(rule, alternative, inputs);
    check.worst_margin = std::min(check.worst_margin, margin);
    ++check.trials;
    if (!(margin > 1e-12)) check.passed = false;
  }
  if (check.trials == 0) check.worst_margin = 0.0;
  return check;
}

bool AxiomReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed; });
}

AxiomReport axiom_suite(const RuleSpec& rule, std::size_t n, std::size_t samples, std::uint64_t seed) {
  if (n < 2) throw ConfigError("axiom suite needs n >= 2");
  if (!has_convex_exposure(rule, n)) {
    throw ConfigError("rule " + rule.to_string() + " lacks convex exposure at n = " + std::to_string(n) +
                      "; the axioms only apply to QA pooling operators");
  }
  const double floor = sampling_floor(rule);

  AxiomCheck additivity{"weight_additivity", true, 0.0, 0.0, false};
  AxiomCheck commutativity{"commutativity", true, 0.0, 1e-12, false};
  AxiomCheck associativity{"associativity", true, 0.0, 1e-9, false};
  AxiomCheck idempotence{"idempotence", true, 0.0, 1e-12, false};
  AxiomCheck continuity{"continuity", true, 0.0, 1e-3, true};
  // For subtraction and the monotonicity checks the gap is the smallest
  // separation seen; it must stay above the tolerance.
  AxiomCheck subtraction{"subtraction", true, std::numeric_limits<double>::infinity(), 1e-12, true};
  AxiomCheck monotonicity{"monotonicity", true, std::numeric_limits<double>::infinity(), 0.0, true};
  AxiomCheck cyclic{"cyclical_monotonicity", true, std::numeric_limits<double>::infinity(), 0.0, true};

  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = sample_rng(seed, s);
    const WeightedForecast a{sample_forecast(rng, n, floor), uniform_weight(rng)};
    const WeightedForecast b{sample_forecast(rng, n, floor), uniform_weight(rng)};
    const WeightedForecast c{sample_forecast(rng, n, floor), uniform_weight(rng)};

    const WeightedForecast ab = combine(rule, a, b);
    const WeightedForecast ba = combine(rule, b, a);
    additivity.worst_gap = std::max(additivity.worst_gap, std::abs(ab.weight - (a.weight + b.weight)));
    commutativity.worst_gap = std::max(commutativity.worst_gap, max_abs_diff(ab.forecast, ba.forecast));

    const WeightedForecast left = combine(rule, ab, c);
    const WeightedForecast right = combine(rule, a, combine(rule, b, c));
    associativity.worst_gap = std::max(associativity.worst_gap, max_abs_diff(left.forecast, right.forecast));

    const WeightedForecast same = combine(rule, a, {a.forecast, b.weight});
    idempotence.worst_gap = std::max(idempotence.worst_gap, max_abs_diff(same.forecast, a.forecast));

    {
      const WeightedForecast triple[] = {a, b, c};
      std::vector<WeightedForecast> nudged(std::begin(triple), std::end(triple));
      std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
      for (auto& in : nudged) in.weight = std::max(0.0, in.weight + jitter(rng));
      const Forecast base = qa_pool(rule, triple).pooled;
      const Forecast moved = qa_pool(rule, nudged).pooled;
      continuity.worst_gap = std::max(continuity.worst_gap, max_abs_diff(base, moved));
    }

    if (distance(b.forecast.probs(), c.forecast.probs()) >= 1e-3) {
      const WeightedForecast with_b = combine(rule, a, {b.forecast, 1.0});
      const WeightedForecast with_c = combine(rule, a, {c.forecast, 1.0});
      subtraction.worst_gap = std::min(subtraction.worst_gap, max_abs_diff(with_b.forecast, with_c.forecast));
    }

    if (n == 2) {
      // pr((p1, x) + (p2, w - x)) must increase strictly in x when p1 > p2.
      Forecast hi = a.forecast;
      Forecast lo = b.forecast;
      if (hi[0] < lo[0]) std::swap(hi, lo);
      if (hi[0] - lo[0] >= 1e-2) {
        const double total = a.weight + b.weight;
        constexpr int kGrid = 50;
        double previous = -1.0;
        for (int k = 1; k < kGrid; ++k) {
          const double x = total * k / kGrid;
          const WeightedForecast pair[] = {{hi, x}, {lo, total - x}};
          const double value = qa_pool(rule, pair).pooled[0];
          if (k > 1) monotonicity.worst_gap = std::min(monotonicity.worst_gap, value - previous);
          previous = value;
        }
      }
    }

    {
      // Cycle lengths run through 2..5.
      const std::size_t k = 2 + s % 4;
      std::vector<Forecast> cycle;
      std::vector<ExposureVector> grads;
      for (std::size_t i = 0; i < k; ++i) {
        cycle.push_back(sample_forecast(rng, n, floor));
        grads.push_back(exposure(rule, cycle.back()));
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const Forecast& here = cycle[i];
        const Forecast& before = cycle[(i + k - 1) % k];
        for (std::size_t j = 0; j < n; ++j) sum += grads[i][j] * (here[j] - before[j]);
      }
      cyclic.worst_gap = std::min(cyclic.worst_gap, sum);
    }
  }

  additivity.passed = additivity.worst_gap == 0.0;
  commutativity.passed = commutativity.worst_gap <= commutativity.tolerance;
  associativity.passed = associativity.worst_gap <= associativity.tolerance;
  idempotence.passed = idempotence.worst_gap <= idempotence.tolerance;
  continuity.passed = continuity.worst_gap <= continuity.tolerance;
  if (std::isinf(subtraction.worst_gap)) subtraction.worst_gap = 0.0;
  else subtraction.passed = subtraction.worst_gap > subtraction.tolerance;
  cyclic.passed = cyclic.worst_gap > cyclic.tolerance;

  AxiomReport report;
  report.checks = {additivity, commutativity, associativity, idempotence, continuity, subtraction};
  if (n == 2) {
    if (std::isinf(monotonicity.worst_gap)) monotonicity.worst_gap = 0.0;
    else monotonicity.passed = monotonicity.worst_gap > monotonicity.tolerance;
    report.checks.push_back(monotonicity);
  }
  report.checks.push_back(cyclic);
  return report;
}

ExposureProbeReport exposure_probe(const RuleSpec& rule, std::size_t n, std::size_t samples, std::uint64_t seed) {
  if (n < 2) throw ConfigError("exposure probe needs n >= 2");
  ExposureProbeReport report;
  const double floor = sampling_floor(rule);

  const auto attempt = [&](const Forecast& p, const Forecast& q, double w) {
    const WeightedForecast pair[] = {{p, w}, {q, 1.0 - w}};
    ++report.samples;
    try {
      const PoolResult result = qa_pool(rule, pair);
      const double scale = std::max(1.0, average_exposure(rule, pair).norm());
      report.worst_residual = std::max(report.worst_residual, result.residual);
      if (result.residual > 1e-8 * scale) {
        ++report.failures;
        return false;
      }
      return true;
    } catch (const ExposureRangeError&) {
      ++report.failures;
      return false;
    }
  };

  if (rule.domain_kind() == DomainKind::ClosedSimplex) {
    report.canonical_attempted = true;
    report.canonical_failed = !attempt(Forecast::vertex(n, 0), Forecast::vertex(n, 1), 0.5);
  }
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = sample_rng(seed, s);
    const Forecast p = sample_forecast(rng, n, floor);
    const Forecast q = sample_forecast(rng, n, floor);
    attempt(p, q, uniform_weight(rng));
  }
  return report;
}

ConcavityProbeReport concavity_probe(const RuleSpec& rule, std::size_t n, std::size_t experts, std::size_t samples,
                                     std::uint64_t seed) {
  ConcavityProbeReport report;
  report.worst_gap = std::numeric_limits<double>::infinity();
  const double floor = sampling_floor(rule);
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = sample_rng(seed, s);
    std::vector<Forecast> forecasts;
    for (std::size_t i = 0; i < experts; ++i) forecasts.push_back(sample_forecast(rng, n, floor));
    std::vector<double> raw_v(experts), raw_w(experts);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    double tv = 0.0, tw = 0.0;
    for (std::size_t i = 0; i < experts; ++i) {
      raw_v[i] = gamma(rng);
      raw_w[i] = gamma(rng);
      tv += raw_v[i];
      tw += raw_w[i];
    }
    for (std::size_t i = 0; i < experts; ++i) {
      raw_v[i] /= tv;
      raw_w[i] /= tw;
    }
    const double c = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<double> raw_mix(experts);
    for (std::size_t i = 0; i < experts; ++i) raw_mix[i] = c * raw_v[i] + (1.0 - c) * raw_w[i];
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);

    const WeightVector wv(raw_v), ww(raw_w), mix(raw_mix);
    const double gap = weight_score(rule, forecasts, mix, j) - c * weight_score(rule, forecasts, wv, j) -
                       (1.0 - c) * weight_score(rule, forecasts, ww, j);
    report.worst_gap = std::min(report.worst_gap, gap);
    ++report.samples;
  }
  if (report.samples == 0) report.worst_gap = 0.0;
  return report;
}

}  // namespace qapool
