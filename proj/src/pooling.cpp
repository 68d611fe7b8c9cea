#include "qapool/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "qapool/errors.hpp"
#include "qapool/numerics.hpp"

namespace qapool {

const char* to_string(PoolMethod method) {
  switch (method) {
    case PoolMethod::ClosedForm: return "ClosedForm";
    case PoolMethod::RootFind: return "RootFind";
    case PoolMethod::ConvexMin: return "ConvexMin";
    case PoolMethod::BregmanMin: return "BregmanMin";
  }
  return "?";
}

namespace {

// Slack allowed when a boundary root lands a rounding error past the sphere/simplex.
constexpr double kBoundarySlack = 1e-12;

struct Prepared {
  std::vector<const WeightedForecast*> inputs;  // positive weight only
  double total_weight = 0.0;
  std::size_t n = 0;
};

Prepared prepare(const RuleSpec& rule, std::span<const WeightedForecast> inputs) {
  if (inputs.empty()) throw DegenerateError("nothing to pool: no inputs");
  Prepared out;
  out.n = inputs.front().forecast.size();
  for (const auto& in : inputs) {
    if (in.forecast.size() != out.n) throw DomainError("pooled forecasts must share the outcome count");
    if (!std::isfinite(in.weight) || in.weight < 0.0) {
      throw DomainError("weights must be nonnegative and finite");
    }
    check_domain(rule, in.forecast);
    if (in.weight > 0.0) {
      out.inputs.push_back(&in);
      out.total_weight += in.weight;
    }
  }
  if (out.inputs.empty()) throw DegenerateError("every weight is zero");
  return out;
}

std::vector<double> average_raw_exposure(const RuleSpec& rule, const Prepared& prep) {
  std::vector<double> avg(prep.n, 0.0);
  for (const auto* in : prep.inputs) {
    const ExposureVector g = exposure(rule, in->forecast);
    const double w = in->weight / prep.total_weight;
    for (std::size_t j = 0; j < prep.n; ++j) avg[j] += w * g[j];
  }
  return avg;
}

double exposure_residual(const RuleSpec& rule, const Forecast& x, const ExposureVector& target) {
  const ExposureVector g = exposure(rule, x);
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) total += (g[j] - target[j]) * (g[j] - target[j]);
  return std::sqrt(total);
}

// Builds a Forecast from nonnegative weights that should already sum to ~1.
Forecast normalized(std::vector<double> x) {
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v = std::max(v, 0.0) / total;
  return Forecast(std::move(x));
}

std::string range_message(const RuleSpec& rule) {
  return "averaged exposure is outside the range of g for rule " + rule.to_string() +
         " (no convex exposure here); try the generalized pool";
}

// The separable and homogeneous families all reduce to: find u > 0 with
// sum_j phi(u + d_j) = 1 where d_j = max(t) - t_j >= 0 and phi decreasing.
Forecast invert_by_gap(std::span<const double> target, const std::function<double(double)>& phi) {
  const double top = *std::max_element(target.begin(), target.end());
  std::vector<double> gaps(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) gaps[j] = top - target[j];
  const auto excess = [&](double u) {
    double total = 0.0;
    for (double d : gaps) total += phi(u + d);
    return 1.0 - total;
  };
  const double u = numerics::bisect_increasing(excess, 0.0).root;
  std::vector<double> x(target.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = phi(u + gaps[j]);
  return normalized(std::move(x));
}

Forecast invert_fast(const RuleSpec& rule, const ExposureVector& target, PoolMethod& method) {
  const std::span<const double> t = target.coords();
  const std::size_t n = t.size();
  const double a = rule.parameter();
  method = PoolMethod::RootFind;
  switch (rule.family()) {
    case RuleFamily::Quadratic: {
      method = PoolMethod::ClosedForm;
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = 0.5 * t[j] + 1.0 / static_cast<double>(n);
        if (x[j] < -kBoundarySlack) throw ExposureRangeError(range_message(rule));
      }
      return normalized(std::move(x));
    }
    case RuleFamily::Logarithmic: {
      method = PoolMethod::ClosedForm;
      const double top = *std::max_element(t.begin(), t.end());
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = std::exp(t[j] - top);
      return normalized(std::move(x));
    }
    case RuleFamily::NegLog:
      return invert_by_gap(t, [](double y) { return 1.0 / y; });
    case RuleFamily::Power: {
      const double scale = std::abs(a);
      const double exponent = 1.0 / (a - 1.0);
      return invert_by_gap(t, [=](double y) { return std::pow(y / scale, exponent); });
    }
    case RuleFamily::Hs: {
      // g_j = -P/(n x_j) is homogeneous of degree 0: x_j ∝ 1/(s - t_j) with
      // the geometric mean of (s - t_j) pinned at 1/n.
      const double top = *std::max_element(t.begin(), t.end());
      const double log_target = -std::log(static_cast<double>(n));
      const auto excess = [&](double u) {
        double total = 0.0;
        for (double v : t) total += std::log(u + top - v);
        return total / static_cast<double>(n) - log_target;
      };
      const double u = numerics::bisect_increasing(excess, 0.0).root;
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 / (u + top - t[j]);
      return normalized(std::move(x));
    }
    case RuleFamily::Spherical: {
      const double beta = a / (a - 1.0);
      const double exponent = 1.0 / (a - 1.0);
      // Land on the unit beta-sphere, then map sphere points back to the simplex.
      const double bottom = *std::min_element(t.begin(), t.end());
      std::vector<double> lifts(n);
      for (std::size_t j = 0; j < n; ++j) lifts[j] = t[j] - bottom;
      const auto excess = [&](double u) {
        double total = 0.0;
        for (double e : lifts) total += std::pow(u + e, beta);
        return total - 1.0;
      };
      const double at_zero = excess(0.0);
      if (at_zero > kBoundarySlack) throw ExposureRangeError(range_message(rule));
      const double u = at_zero >= 0.0 ? 0.0 : numerics::bisect_increasing(excess, 0.0).root;
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = std::pow(u + lifts[j], exponent);
      return normalized(std::move(x));
    }
    case RuleFamily::Tsallis: {
      std::vector<double> v(n);
      for (std::size_t j = 0; j < n; ++j) v[j] = t[j] / a;
      try {
        return tsallis_invert(a, v).forecast;
      } catch (const ExposureRangeError&) {
        throw ExposureRangeError(range_message(rule));
      }
    }
  }
  throw ConfigError("unsupported rule");
}

}  // namespace

ExposureVector average_exposure(const RuleSpec& rule, std::span<const WeightedForecast> inputs) {
  const Prepared prep = prepare(rule, inputs);
  return ExposureVector::canonicalize(average_raw_exposure(rule, prep));
}

Forecast invert_exposure(const RuleSpec& rule, const ExposureVector& target) {
  if (target.size() < 2) throw DomainError("exposure needs at least two coordinates");
  PoolMethod method{};
  return invert_fast(rule, target, method);
}

Forecast invert_exposure_generic(const RuleSpec& rule, const ExposureVector& target) {
  const std::size_t n = target.size();
  if (n < 2) throw DomainError("exposure needs at least two coordinates");
  const double floor = rule.domain_kind() == DomainKind::OpenSimplex ? 1e-12 : 0.0;
  const std::span<const double> t = target.coords();

  numerics::SimplexProblem problem;
  problem.objective = [&](std::span<const double> x) {
    double linear = 0.0;
    for (std::size_t j = 0; j < n; ++j) linear += t[j] * x[j];
    return detail::reward_at(rule, x) - linear;
  };
  problem.gradient = [&](std::span<const double> x, std::span<double> out) {
    detail::gradient_at(rule, x, out);
    for (std::size_t j = 0; j < n; ++j) out[j] -= t[j];
  };
  numerics::SimplexSolverOptions options;
  options.floor = floor;
  double scale = 1.0;
  for (double v : t) scale = std::max(scale, std::abs(v));
  options.tolerance = 1e-12 * scale;
  const auto minimum = numerics::minimize_on_simplex(problem, std::vector<double>(n, 1.0 / n), options);

  Forecast x = normalized(minimum.point);
  if (exposure_residual(rule, x, target) > 1e-8 * std::max(1.0, target.norm())) throw ExposureRangeError(range_message(rule));
  return x;
}

TsallisInversion tsallis_invert(double gamma, std::span<const double> v) {
  if (!(gamma > 1.0)) throw ConfigError("tsallis inversion needs gamma > 1");
  if (v.size() < 2) throw DomainError("tsallis inversion needs at least two coordinates");
  const double exponent = 1.0 / (gamma - 1.0);
  const double bottom = *std::min_element(v.begin(), v.end());
  std::vector<double> lifts(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) lifts[j] = v[j] - bottom;
  const auto excess = [&](double u) {
    double total = 0.0;
    for (double e : lifts) total += std::pow(u + e, exponent);
    return total - 1.0;
  };
  const double at_zero = excess(0.0);
  if (at_zero > kBoundarySlack) {
    std::ostringstream msg;
    msg << "tsallis:" << gamma << " inversion needs v_j + c < 0 for some j";
    throw ExposureRangeError(msg.str());
  }
  const double u = at_zero >= 0.0 ? 0.0 : numerics::bisect_increasing(excess, 0.0).root;
  std::vector<double> x(v.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::pow(u + lifts[j], exponent);
  return {normalized(std::move(x)), u - bottom};
}

PoolResult qa_pool(const RuleSpec& rule, std::span<const WeightedForecast> inputs) {
  const Prepared prep = prepare(rule, inputs);
  const ExposureVector target = ExposureVector::canonicalize(average_raw_exposure(rule, prep));
  PoolMethod method{};
  Forecast pooled = invert_fast(rule, target, method);
  const double residual = exposure_residual(rule, pooled, target);
  return {std::move(pooled), prep.total_weight, residual, method};
}

WeightedForecast combine(const RuleSpec& rule, const WeightedForecast& a, const WeightedForecast& b) {
  const WeightedForecast pair[] = {a, b};
  PoolResult result = qa_pool(rule, pair);
  return {std::move(result.pooled), a.weight + b.weight};
}

PoolResult spherical_pool(double alpha, std::span<const WeightedForecast> inputs) {
  const RuleSpec rule = RuleSpec::spherical(alpha);
  const Prepared prep = prepare(rule, inputs);
  const std::size_t n = prep.n;
  const double beta = alpha / (alpha - 1.0);

  // (1) sphere points g(p_i); (2) their weighted average.
  std::vector<double> average(n, 0.0);
  std::vector<double> sphere_point(n);
  for (const auto* in : prep.inputs) {
    detail::gradient_at(rule, in->forecast.probs(), sphere_point);
    const double w = in->weight / prep.total_weight;
    for (std::size_t j = 0; j < n; ++j) average[j] += w * sphere_point[j];
  }

  // (3) slide along +1 onto the sphere.
  const auto excess = [&](double t) {
    double total = 0.0;
    for (double v : average) total += std::pow(std::max(v + t, 0.0), beta);
    return total - 1.0;
  };
  const double at_zero = excess(0.0);
  const double shift = at_zero >= 0.0 ? 0.0 : numerics::bisect_increasing(excess, 0.0).root;

  // (4) back to the simplex.
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = std::pow(average[j] + shift, 1.0 / (alpha - 1.0));
  Forecast pooled = normalized(std::move(x));

  const ExposureVector target = ExposureVector::canonicalize(average);
  const double residual = exposure_residual(rule, pooled, target);
  return {std::move(pooled), prep.total_weight, residual, PoolMethod::RootFind};
}

PoolResult generalized_pool(const RuleSpec& rule, std::span<const WeightedForecast> inputs,
                            const GeneralizedPoolOptions& options) {
  const Prepared prep = prepare(rule, inputs);
  const std::size_t n = prep.n;

  double shell = options.shell;
  if (shell < 0.0 || shell * static_cast<double>(n) >= 1.0) {
    throw DomainError("generalized pool shell must lie in [0, 1/n)");
  }
  if (shell == 0.0 && rule.domain_kind() == DomainKind::OpenSimplex) {
    if (!rule.has_bounded_reward()) {
      throw DomainError("rule " + rule.to_string() +
                        " has unbounded G on the closed simplex; supply a positive shell");
    }
    shell = 1e-12;
  }

  const std::vector<double> target = average_raw_exposure(rule, prep);

  numerics::SimplexProblem problem;
  problem.objective = [&](std::span<const double> x) {
    double linear = 0.0;
    for (std::size_t j = 0; j < n; ++j) linear += target[j] * x[j];
    return detail::reward_at(rule, x) - linear;
  };
  problem.gradient = [&](std::span<const double> x, std::span<double> out) {
    detail::gradient_at(rule, x, out);
    for (std::size_t j = 0; j < n; ++j) out[j] -= target[j];
  };

  // Separable rules with g -> -inf at the boundary: x_j = max(shell, g^-1(t_j + mu)),
  // with mu fixed by the sum constraint.
  std::function<double(double)> phi;
  if (rule.family() == RuleFamily::NegLog) {
    phi = [](double y) { return 1.0 / y; };
  } else if (rule.family() == RuleFamily::Power && rule.parameter() < 1.0) {
    const double a = rule.parameter();
    phi = [scale = std::abs(a), exponent = 1.0 / (a - 1.0)](double y) { return std::pow(y / scale, exponent); };
  }
  if (phi) {
    const double top = *std::max_element(target.begin(), target.end());
    const auto point = [&](double u) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = std::max(shell, phi(u + top - target[j]));
      return x;
    };
    const auto excess = [&](double u) {
      const auto x = point(u);
      return 1.0 - std::accumulate(x.begin(), x.end(), 0.0);
    };
    const std::vector<double> x = point(numerics::bisect_increasing(excess, 0.0).root);
    std::vector<double> grad(n);
    problem.gradient(x, grad);
    return {normalized(x), prep.total_weight, numerics::simplex_kkt_residual(x, grad, shell),
            PoolMethod::BregmanMin};
  }

  // Start from the linear pool.
  std::vector<double> start(n, 0.0);
  for (const auto* in : prep.inputs) {
    const double w = in->weight / prep.total_weight;
    for (std::size_t j = 0; j < n; ++j) start[j] += w * in->forecast[j];
  }

  // Gradients carry rounding error relative to the exposure magnitudes, so
  // tolerances scale with them.
  double scale = 1.0;
  for (double v : target) scale = std::max(scale, std::abs(v));

  numerics::SimplexSolverOptions solver;
  solver.floor = shell;
  solver.tolerance = options.tolerance * scale;
  solver.max_iterations = options.max_iterations;
  const auto minimum = numerics::minimize_on_simplex(problem, std::move(start), solver);
  if (!minimum.converged && minimum.residual > 1e-7 * scale) {
    std::ostringstream msg;
    msg << "generalized pool did not converge (KKT residual " << minimum.residual << " after "
        << minimum.iterations << " iterations)";
    throw ConvergenceError(msg.str());
  }
  return {normalized(minimum.point), prep.total_weight, minimum.residual, PoolMethod::BregmanMin};
}

}  // namespace qapool
