#pragma once

// Reference computations written straight from the formulas, without the
// library's solvers, so the tests compare two independent routes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "qapool/scoring.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec probs(const qapool::Forecast& p) { return Vec(p.probs().begin(), p.probs().end()); }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Vec normalize(Vec v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

inline Vec center(Vec v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
  return v;
}

// Expected reward G for each family, evaluated from its textbook formula.
inline double G(const qapool::RuleSpec& rule, const Vec& p) {
  using F = qapool::RuleFamily;
  const double n = static_cast<double>(p.size());
  const double a = rule.parameter();
  double s = 0.0;
  switch (rule.family()) {
    case F::Quadratic:
      for (double x : p) s += x * x;
      return s;
    case F::Logarithmic:
      for (double x : p) s += x > 0.0 ? x * std::log(x) : 0.0;
      return s;
    case F::NegLog:
      for (double x : p) s -= std::log(x);
      return s;
    case F::Power:
      for (double x : p) s += std::pow(x, a);
      return a > 0.0 ? -s : s;
    case F::Spherical:
      for (double x : p) s += std::pow(x, a);
      return std::pow(s, 1.0 / a);
    case F::Tsallis:
      for (double x : p) s += std::pow(x, a);
      return s;
    case F::Hs: {
      double log_sum = 0.0;
      for (double x : p) log_sum += std::log(x);
      return -std::exp(log_sum / n);
    }
  }
  return 0.0;
}

// Sum-zero gradient of G by central differences along e_j - 1/n.
inline Vec fd_exposure(const qapool::RuleSpec& rule, const Vec& p, double h = 1e-6) {
  const std::size_t n = p.size();
  Vec g(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec plus = p, minus = p;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = (k == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(n);
      plus[k] += h * u;
      minus[k] -= h * u;
    }
    g[j] = (G(rule, plus) - G(rule, minus)) / (2.0 * h);
  }
  return g;
}

inline Vec linear_pool(const std::vector<Vec>& ps, const Vec& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Vec out(ps[0].size(), 0.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[i] / total * ps[i][j];
  }
  return out;
}

inline Vec geometric_pool(const std::vector<Vec>& ps, const Vec& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Vec out(ps[0].size(), 1.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= std::pow(ps[i][j], w[i] / total);
  }
  return normalize(out);
}

// NegLog pool: x_j = 1 / (H_j - c) with H_j the weighted mean of 1/p_ij and c
// chosen so the x_j sum to 1. Plain bisection on c in (-inf, min H).
inline Vec shifted_harmonic_pool(const std::vector<Vec>& ps, const Vec& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const std::size_t n = ps[0].size();
  Vec H(n, 0.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) H[j] += w[i] / total / ps[i][j];
  }
  const double hmin = *std::min_element(H.begin(), H.end());
  auto mass = [&](double c) {
    double s = 0.0;
    for (double h : H) s += 1.0 / (h - c);
    return s;
  };
  double hi = hmin;
  double lo = hmin - 1.0;
  while (mass(lo) > 1.0) lo = hmin - 2.0 * (hmin - lo);
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mass(mid) > 1.0 ? hi : lo) = mid;
  }
  const double c = 0.5 * (lo + hi);
  Vec x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 / (H[j] - c);
  return normalize(x);
}

// Plain normalized weighted harmonic mean (coincides with the shifted form only in special cases).
inline Vec harmonic_mean(const std::vector<Vec>& ps, const Vec& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Vec x(ps[0].size(), 0.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += w[i] / total / ps[i][j];
  }
  for (double& v : x) v = 1.0 / v;
  return normalize(x);
}

inline double kl(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) s += p[j] * std::log(p[j] / q[j]);
  }
  return s;
}

// Exhaustive projection onto the simplex over all supports (small m only).
inline Vec face_projection(const Vec& y) {
  const std::size_t m = y.size();
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1u) {
        sum += y[i];
        count += 1.0;
      }
    }
    const double shift = (sum - 1.0) / count;
    Vec x(m, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1u) {
        x[i] = y[i] - shift;
        if (x[i] < -1e-15) ok = false;
      }
    }
    if (!ok) continue;
    const double d = dist(x, y);
    if (d < best_dist) {
      best_dist = d;
      best = x;
    }
  }
  return best;
}

// Minimizes f over a regular grid of the simplex with n <= 3.
inline Vec grid_argmin(std::size_t n, double step, const std::function<double(const Vec&)>& f) {
  const int k = static_cast<int>(std::lround(1.0 / step));
  Vec best;
  double best_value = std::numeric_limits<double>::infinity();
  if (n == 2) {
    for (int a = 0; a <= k; ++a) {
      const Vec x{a * step, (k - a) * step};
      const double v = f(x);
      if (v < best_value) best_value = v, best = x;
    }
  } else {
    for (int a = 0; a <= k; ++a) {
      for (int b = 0; a + b <= k; ++b) {
        const Vec x{a * step, b * step, (k - a - b) * step};
        const double v = f(x);
        if (v < best_value) best_value = v, best = x;
      }
    }
  }
  return best;
}

struct Random {
  explicit Random(std::uint64_t seed) : rng(seed) {}
  std::mt19937_64 rng;

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  }
  Vec simplex(std::size_t n, double floor = 0.0) {
    for (;;) {
      Vec x(n);
      std::exponential_distribution<double> e(1.0);
      for (double& v : x) v = e(rng);
      x = normalize(x);
      if (*std::min_element(x.begin(), x.end()) >= floor) return x;
    }
  }
};

}  // namespace oracle
