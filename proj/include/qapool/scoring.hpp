#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qapool {

// Tolerance on |sum(p) - 1| below which inputs are renormalized rather than rejected.
inline constexpr double kSimplexTolerance = 1e-9;
// Smallest coordinate accepted by rules defined on the open simplex.
inline constexpr double kOpenSimplexFloor = 1e-300;

/// A probability distribution over n >= 2 outcomes.
///
/// Construction validates the entries (finite, nonnegative, summing to one
/// within kSimplexTolerance) and renormalizes them so the sum is one up to
/// rounding. Instances are immutable.
class Forecast {
 public:
  explicit Forecast(std::vector<double> probs);

  static Forecast uniform(std::size_t n);
  /// One-hot forecast on outcome `j` (0-based).
  static Forecast vertex(std::size_t n, std::size_t j);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t j) const { return probs_[j]; }
  std::span<const double> probs() const { return probs_; }
  double min() const;

  bool operator==(const Forecast&) const = default;

 private:
  std::vector<double> probs_;
};

enum class RuleFamily { Quadratic, Logarithmic, NegLog, Power, Spherical, Tsallis, Hs };

enum class DomainKind { ClosedSimplex, OpenSimplex };

/// A proper scoring rule, identified by family and (where applicable) parameter.
///
///   Quadratic      G(p) = sum p_j^2
///   Logarithmic    G(p) = sum p_j ln p_j
///   NegLog         G(p) = -sum ln p_j
///   Power(g)       G(p) = -sum p_j^g for g in (0,1), +sum p_j^g for g < 0
///   Spherical(a)   G(p) = (sum p_j^a)^(1/a), a > 1
///   Tsallis(g)     G(p) = sum p_j^g, g > 1
///   Hs             G(p) = -prod p_j^(1/n)
class RuleSpec {
 public:
  static RuleSpec quadratic();
  static RuleSpec logarithmic();
  static RuleSpec neg_log();
  static RuleSpec power(double gamma);
  static RuleSpec spherical(double alpha);
  static RuleSpec tsallis(double gamma);
  static RuleSpec hs();

  /// Parses "quadratic", "log", "neglog", "power:0.5", "spherical:2",
  /// "tsallis:1.5" or "hs". Throws ConfigError on anything else.
  static RuleSpec parse(std::string_view text);

  RuleFamily family() const { return family_; }
  double parameter() const { return parameter_; }
  DomainKind domain_kind() const;
  /// True when G stays finite on the closed simplex.
  bool has_bounded_reward() const;
  std::string to_string() const;

  bool operator==(const RuleSpec&) const = default;

 private:
  RuleSpec(RuleFamily family, double parameter) : family_(family), parameter_(parameter) {}

  RuleFamily family_;
  double parameter_;
};

/// Gradient of G at a forecast, taken modulo the all-ones direction and
/// stored as the representative whose coordinates sum to zero.
class ExposureVector {
 public:
  /// Subtracts the mean of `raw`.
  static ExposureVector canonicalize(std::vector<double> raw);

  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t j) const { return coords_[j]; }
  std::span<const double> coords() const { return coords_; }

  double norm() const;

 private:
  explicit ExposureVector(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::vector<double> coords_;
};

/// Throws DomainError unless `p` lies in the rule's forecast domain.
void check_domain(const RuleSpec& rule, const Forecast& p);

double expected_reward(const RuleSpec& rule, const Forecast& p);
ExposureVector exposure(const RuleSpec& rule, const Forecast& p);

/// Two-outcome scalar exposure g(p) = g_1(p) - g_2(p); strictly increasing in p_1.
double exposure_scalar(const RuleSpec& rule, const Forecast& p);

/// s(p; j) = G(p) + <g(p), delta_j - p>, with `outcome` 0-based.
double score(const RuleSpec& rule, const Forecast& p, std::size_t outcome);

/// D_G(p || q) = G(p) - G(q) - <g(q), p - q>.
double bregman(const RuleSpec& rule, const Forecast& p, const Forecast& q);

/// Whether the range of the exposure map is convex on n outcomes.
bool has_convex_exposure(const RuleSpec& rule, std::size_t n);

namespace detail {

// Unvalidated kernels over raw coordinate arrays. Callers guarantee the point
// is inside the rule's domain. `gradient` receives the raw (uncanonicalized)
// partial derivatives of G extended to the positive orthant.
double reward_at(const RuleSpec& rule, std::span<const double> p);
void gradient_at(const RuleSpec& rule, std::span<const double> p, std::span<double> out);

}  // namespace detail

}  // namespace qapool
