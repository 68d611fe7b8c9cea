#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qapool::numerics {

/// Euclidean projection of `y` onto {x : x_j >= floor, sum x = 1}.
/// Sort-and-threshold; requires floor * y.size() < 1.
std::vector<double> project_to_simplex(std::span<const double> y, double floor = 0.0);

struct Bisection {
  double root = 0.0;
  int iterations = 0;
};

/// Root of an increasing function f on (lo, +inf), located by doubling the
/// bracket upward and then bisecting until the bracket is no wider than
/// `tolerance`. The default of 0 bisects to full double precision.
/// f is never evaluated at `lo` itself, so it may be singular there.
Bisection bisect_increasing(const std::function<double(double)>& f, double lo, double tolerance = 0.0,
                            int max_iterations = 200);

/// KKT residual of min f over {x >= floor, sum x = 1} at `x` with gradient `grad`:
/// spread of the gradient over free coordinates plus any violated sign on
/// coordinates pinned at the floor.
double simplex_kkt_residual(std::span<const double> x, std::span<const double> grad, double floor = 0.0);

struct SimplexMinimum {
  std::vector<double> point;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexProblem {
  std::function<double(std::span<const double>)> objective;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct SimplexSolverOptions {
  double floor = 0.0;
  double tolerance = 1e-10;
  int max_iterations = 100000;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
};

/// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking along the projection arc. Stops on KKT residual <= tolerance.
/// The objective must be convex: the line search trusts gradient sign changes.
SimplexMinimum minimize_on_simplex(const SimplexProblem& problem, std::vector<double> start,
                                   const SimplexSolverOptions& options = {});

}  // namespace qapool::numerics
