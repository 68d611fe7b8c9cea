#pragma once

#include <span>
#include <vector>

#include "qapool/scoring.hpp"

namespace qapool {

/// A forecast together with the nonnegative weight (amount of evidence) behind it.
struct WeightedForecast {
  Forecast forecast;
  double weight = 1.0;
};

enum class PoolMethod { ClosedForm, RootFind, ConvexMin, BregmanMin };

const char* to_string(PoolMethod method);

struct PoolResult {
  Forecast pooled;
  double total_weight = 0.0;
  // Euclidean norm, in sum-zero exposure coordinates, of g(pooled) minus the
  // weighted exposure average. For BregmanMin this is the KKT residual of the
  // divergence objective instead.
  double residual = 0.0;
  PoolMethod method = PoolMethod::ClosedForm;
};

/// Quasi-arithmetic pool: the forecast whose exposure equals the weighted
/// average of the inputs' exposures. Zero-weight inputs are ignored and
/// weights are normalized internally; total_weight is their plain sum.
///
/// Throws DegenerateError when every weight is zero, DomainError for inputs
/// outside the rule's domain, and ExposureRangeError when the averaged
/// exposure is not attained (only possible without convex exposure).
PoolResult qa_pool(const RuleSpec& rule, std::span<const WeightedForecast> inputs);

/// Binary form of the pooling operator on weighted forecasts.
WeightedForecast combine(const RuleSpec& rule, const WeightedForecast& a, const WeightedForecast& b);

/// g^{-1}: the forecast whose canonical exposure equals `target`.
/// Dispatches to a closed form or a scalar root find per family.
Forecast invert_exposure(const RuleSpec& rule, const ExposureVector& target);

/// Same contract as invert_exposure, but always solved as the convex program
/// min G(x) - <target, x> over the simplex. Used as an independent route.
Forecast invert_exposure_generic(const RuleSpec& rule, const ExposureVector& target);

struct TsallisInversion {
  Forecast forecast;
  double shift = 0.0;
};

/// Solves sum_j (v_j + c)^(1/(gamma-1)) = 1 for the shift c and returns
/// x_j = (v_j + c)^(1/(gamma-1)). `v` is the weighted average of the raw
/// powers p_ij^(gamma-1). Throws ExposureRangeError when the root needs
/// v_j + c < 0 for some j.
TsallisInversion tsallis_invert(double gamma, std::span<const double> v);

/// Spherical pooling through the unit beta-sphere, beta = alpha/(alpha-1):
/// map inputs onto the sphere, average, slide along +1 back onto the sphere,
/// map back to the simplex.
PoolResult spherical_pool(double alpha, std::span<const WeightedForecast> inputs);

struct GeneralizedPoolOptions {
  // Lower bound on every coordinate of the search region. Zero means automatic:
  // 0 for closed-simplex rules and 1e-12 for open-simplex rules with bounded G.
  // NegLog and Power with gamma < 0 need an explicit positive shell.
  double shell = 0.0;
  // KKT tolerance, relative to max(1, largest averaged exposure coordinate).
  double tolerance = 1e-10;
  int max_iterations = 100000;
};

/// Minimizer over the closed domain of sum_i w_i D_G(x || p_i). Agrees with
/// qa_pool whenever the latter exists and is defined for every rule.
PoolResult generalized_pool(const RuleSpec& rule, std::span<const WeightedForecast> inputs,
                            const GeneralizedPoolOptions& options = {});

/// Weighted average of canonical exposures, with normalized weights.
/// Throws DegenerateError when the weights sum to zero.
ExposureVector average_exposure(const RuleSpec& rule, std::span<const WeightedForecast> inputs);

}  // namespace qapool
