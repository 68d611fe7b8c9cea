#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qapool/pooling.hpp"
#include "qapool/scoring.hpp"

namespace qapool {

/// u(p; j) = s(p; j) - sum_i w_i s(p_i; j) with weights normalized: the
/// profit of an agent who reports p and pays each expert w_i s(p_i; j).
double aggregator_utility(const RuleSpec& rule, const Forecast& report, std::span<const WeightedForecast> inputs,
                          std::size_t outcome);

struct SurplusReport {
  Forecast pooled;
  std::vector<double> per_outcome_utility;
  double surplus = 0.0;            // min_j u(p*; j)
  double equalization_gap = 0.0;   // max_j u - min_j u
  double bregman_sum = 0.0;        // sum_i w_i D_G(p* || p_i)
};

SurplusReport surplus_report(const RuleSpec& rule, std::span<const WeightedForecast> inputs);

struct MaxMinCheck {
  bool passed = true;
  std::size_t trials = 0;
  double best_value = 0.0;    // min_j u(p*; j)
  double worst_margin = 0.0;  // smallest observed min_j u(p*) - min_j u(q)
};

/// Samples `trials` alternative reports q (perturbations of p* with
/// ||q - p*|| >= 1e-3, plus Dirichlet draws) and checks each strictly lowers
/// the worst-case utility.
MaxMinCheck maxmin_verify(const RuleSpec& rule, std::span<const WeightedForecast> inputs, std::size_t trials,
                          std::uint64_t seed = 0);

struct AxiomCheck {
  std::string name;
  bool passed = true;
  double worst_gap = 0.0;
  double tolerance = 0.0;
  // Sampled evidence rather than an exact identity check.
  bool evidence_only = false;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  bool all_passed() const;
};

/// Property suite for the pooling operator of `rule` on n outcomes: weight
/// additivity, commutativity, associativity, idempotence, continuity,
/// subtraction, monotonicity (n = 2) and strict cyclical monotonicity of g.
/// Throws ConfigError when the rule lacks convex exposure at n.
AxiomReport axiom_suite(const RuleSpec& rule, std::size_t n, std::size_t samples, std::uint64_t seed);

struct ExposureProbeReport {
  std::size_t samples = 0;
  std::size_t failures = 0;
  double worst_residual = 0.0;
  // Whether the vertex pair (delta_1, delta_2) at w = 1/2 was attempted and whether it failed.
  bool canonical_attempted = false;
  bool canonical_failed = false;
  double failure_rate() const { return samples ? static_cast<double>(failures) / static_cast<double>(samples) : 0.0; }
};

/// Averages the exposures of random forecast pairs and tries to invert the result.
ExposureProbeReport exposure_probe(const RuleSpec& rule, std::size_t n, std::size_t samples, std::uint64_t seed);

struct ConcavityProbeReport {
  std::size_t samples = 0;
  double worst_gap = 0.0;  // min of WS(cv + (1-c)w) - c WS(v) - (1-c) WS(w)
};

/// Random concavity triples for the weight-score of `rule`.
ConcavityProbeReport concavity_probe(const RuleSpec& rule, std::size_t n, std::size_t experts, std::size_t samples,
                                     std::uint64_t seed);

// Sampling helpers shared by the suites and the tests.
using Rng = std::mt19937_64;

/// Per-sample generator derived from a suite seed and a sample index.
Rng sample_rng(std::uint64_t seed, std::uint64_t index);

/// Dirichlet(1, ..., 1) forecast, redrawn until every coordinate is >= floor.
Forecast sample_forecast(Rng& rng, std::size_t n, double floor = 0.0);

/// Coordinate floor used when sampling forecasts for `rule`: 0 on the closed
/// simplex, 1e-3 on the open simplex so exposures stay well scaled.
double sampling_floor(const RuleSpec& rule);

}  // namespace qapool
