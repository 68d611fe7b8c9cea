#include "qapool/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace qapool::numerics {

std::vector<double> project_to_simplex(std::span<const double> y, double floor) {
  const std::size_t m = y.size();
  const double budget = 1.0 - floor * static_cast<double>(m);
  std::vector<double> sorted(y.begin(), y.end());
  for (double& v : sorted) v -= floor;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Largest k with sorted[k-1] - (prefix_k - budget)/k > 0.
  double prefix = 0.0;
  double threshold = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - budget) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }

  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = floor + std::max(y[j] - floor - threshold, 0.0);
  return x;
}

Bisection bisect_increasing(const std::function<double(double)>& f, double lo, double tolerance,
                            int max_iterations) {
  double step = std::max(1.0, std::abs(lo));
  double hi = lo + step;
  int iterations = 0;
  while (f(hi) < 0.0) {
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    if (++iterations > max_iterations || !std::isfinite(hi)) return {hi, iterations};
  }
  while (iterations < max_iterations && hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++iterations;
  }
  return {0.5 * (lo + hi), iterations};
}

double simplex_kkt_residual(std::span<const double> x, std::span<const double> grad, double floor) {
  const std::size_t n = x.size();
  const double pinned = floor + 1e-15;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (x[j] > pinned) {
      free_sum += grad[j];
      ++free_count;
    }
  }
  if (free_count == 0) return 0.0;
  const double lambda = free_sum / static_cast<double>(free_count);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = grad[j] - lambda;
    if (x[j] > pinned) {
      total += d * d;
    } else if (d < 0.0) {
      total += d * d;
    }
  }
  return std::sqrt(total);
}

namespace {

// Only the sum-zero part of the gradient matters on the simplex; dropping the
// common component keeps directional derivatives free of cancellation.
void center(std::span<double> g) {
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  for (double& v : g) v -= mean;
}

}  // namespace

SimplexMinimum minimize_on_simplex(const SimplexProblem& problem, std::vector<double> start,
                                   const SimplexSolverOptions& options) {
  const std::size_t n = start.size();
  SimplexMinimum result;
  std::vector<double> x = project_to_simplex(start, options.floor);
  std::vector<double> grad(n), trial(n), trial_grad(n), shifted(n);

  double value = problem.objective(x);
  problem.gradient(x, grad);
  center(grad);
  double step = 1.0;
  {
    const double gnorm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    if (gnorm > 0.0) step = std::min(1.0, 0.1 / gnorm);
  }

  int iteration = 0;
  double residual = simplex_kkt_residual(x, grad, options.floor);
  for (; iteration < options.max_iterations && residual > options.tolerance; ++iteration) {
    bool accepted = false;
    double t = step;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t j = 0; j < n; ++j) shifted[j] = x[j] - t * grad[j];
      trial = project_to_simplex(shifted, options.floor);
      double directional = 0.0;
      double moved = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        directional += grad[j] * (trial[j] - x[j]);
        moved = std::max(moved, std::abs(trial[j] - x[j]));
      }
      if (moved == 0.0) break;
      const double trial_value = problem.objective(trial);
      if (!std::isfinite(trial_value)) {
        t *= options.backtrack;
        continue;
      }
      problem.gradient(trial, trial_grad);
      center(trial_grad);
      // Armijo on values, with slack at rounding level. Once value differences
      // drop below that resolution the gradient test takes over: for convex f,
      // <grad f(trial), s> <= c1 <grad f(x), s> < 0 already forces a decrease.
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
      double trial_directional = 0.0;
      for (std::size_t j = 0; j < n; ++j) trial_directional += trial_grad[j] * (trial[j] - x[j]);
      const bool armijo = trial_value <= value + options.armijo_c1 * directional + slack;
      const bool by_gradient = directional < 0.0 && trial_directional <= options.armijo_c1 * directional;
      if (armijo || by_gradient) {
        double ss = 0.0, sy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double s = trial[j] - x[j];
          const double y = trial_grad[j] - grad[j];
          ss += s * s;
          sy += s * y;
        }
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-14, 1e14) : std::min(t * 2.0, 1e14);
        x.swap(trial);
        grad.swap(trial_grad);
        value = trial_value;
        accepted = true;
        break;
      }
      t *= options.backtrack;
    }
    residual = simplex_kkt_residual(x, grad, options.floor);
    if (!accepted) break;
  }

  result.point = std::move(x);
  result.value = value;
  result.residual = residual;
  result.iterations = iteration;
  result.converged = residual <= options.tolerance;
  return result;
}

}  // namespace qapool::numerics
