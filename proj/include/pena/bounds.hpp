#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pena/errors.hpp"

namespace pena {

// Tail bound ((v2+x)/v2)^{v2} e^{-x} for {M_t >= x, sum dM^2 <= v2} under
// dM >= -1. Computed as exp(v2*log1p(x/v2) - x); the v2 -> 0 limit is e^{-x}.
inline double pena_poisson_bound(double x, double v2) {
  if (!(x > 0.0)) throw Error("pena_poisson_bound: x must be positive");
  if (v2 < 0.0) throw Error("pena_poisson_bound: v2 must be nonnegative");
  if (v2 == 0.0) return std::exp(-x);
  return std::min(1.0, std::exp(v2 * std::log1p(x / v2) - x));
}

// Gaussian-type bound exp(-x^2 / (2 v2)) under the S~ <= 0 hypothesis.
inline double pena_gauss_bound(double x, double v2) {
  if (!(x > 0.0)) throw Error("pena_gauss_bound: x must be positive");
  if (!(v2 > 0.0)) throw Error("pena_gauss_bound: v2 must be positive (bound degenerates)");
  return std::min(1.0, std::exp(-x * x / (2.0 * v2)));
}

enum class RatioScale { half, quarter };

// Self-normalized bound exp(-(x^2/s)(alpha*beta + beta^2 v2/2)), s = 2 or 4.
inline double ratio_bound(double x, double alpha, double beta, double v2,
                          RatioScale scale) {
  if (!(beta > 0.0)) throw Error("ratio_bound: beta must be positive");
  if (x < 0.0) throw Error("ratio_bound: x must be nonnegative");
  const double coeff = alpha * beta + beta * beta * v2 / 2.0;
  if (coeff < 0.0) throw Error("ratio_bound: vacuous bound parameters (alpha*beta + beta^2 v2/2 < 0)");
  const double s = (scale == RatioScale::half) ? 2.0 : 4.0;
  return std::min(1.0, std::exp(-x * x / s * coeff));
}

// Freedman/Bernstein bound exp(-x^2 / (2(v2 + c x))) for jumps bounded by c.
inline double freedman_bound(double x, double v2, double c) {
  if (!(x > 0.0)) throw Error("freedman_bound: x must be positive");
  if (c < 0.0) throw Error("freedman_bound: c must be nonnegative");
  const double denom = v2 + c * x;
  if (!(denom > 0.0)) throw Error("freedman_bound: v2 + c*x must be positive");
  return std::min(1.0, std::exp(-x * x / (2.0 * denom)));
}

// Discrete-time self-normalized bound 2 exp(-x^2 (a b + b^2 y / 2)).
inline double bt_self_normalized_bound(double x, double a, double b, double y) {
  if (!(x > 0.0 && y > 0.0)) throw Error("bt_self_normalized_bound: x, y must be positive");
  if (a < 0.0) throw Error("bt_self_normalized_bound: a must be nonnegative");
  if (!(b > 0.0)) throw Error("bt_self_normalized_bound: b must be positive");
  return std::min(1.0, 2.0 * std::exp(-x * x * (a * b + b * b * y / 2.0)));
}

struct OptimalLambda {
  double lambda_star;
  double achieved;  // exp(-l*x - (l* + log(1-l*)) v2)
};

// Minimizer of exp(-lambda x - (lambda + log(1-lambda)) v2) over [0, 1);
// the achieved value equals pena_poisson_bound(x, v2).
inline OptimalLambda optimal_lambda(double x, double v2) {
  if (!(x > 0.0 && v2 > 0.0)) throw Error("optimal_lambda: x, v2 must be positive");
  const double l = x / (x + v2);
  const double achieved = std::exp(-l * x - (l + std::log1p(-l)) * v2);
  return {l, achieved};
}

// Parameter bundle for the closed-form tail bounds: deviation level x,
// quadratic-variation level v2, ratio coefficients (alpha, beta), the
// bounded-jump constant c, and (a, b, y) for the discrete self-normalized
// bound.
struct TailQuery {
  double x = 1.0;
  double v2 = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  double c = 1.0;
  double a = 0.0;
  double b = 1.0;
  double y = 1.0;
};

struct AllBounds {
  double pena_poisson;
  double pena_gauss;
  double freedman;
  double ratio_half;
  double ratio_quarter;
  double bt_self_normalized;
};

inline AllBounds all_bounds(const TailQuery& q) {
  return {pena_poisson_bound(q.x, q.v2),
          pena_gauss_bound(q.x, q.v2),
          freedman_bound(q.x, q.v2, q.c),
          ratio_bound(q.x, q.alpha, q.beta, q.v2, RatioScale::half),
          ratio_bound(q.x, q.alpha, q.beta, q.v2, RatioScale::quarter),
          bt_self_normalized_bound(q.x, q.a, q.b, q.y)};
}

struct BoundRow {
  double x;
  double v2;
  std::string name;
  double value;
};

// Long-format scan of the two de la Pena bounds plus Freedman over a grid.
inline std::vector<BoundRow> bound_grid_scan(const std::vector<double>& xs,
                                             const std::vector<double>& v2s, double c) {
  std::vector<BoundRow> rows;
  for (double x : xs) {
    for (double v2 : v2s) {
      rows.push_back({x, v2, "pena_poisson", pena_poisson_bound(x, v2)});
      rows.push_back({x, v2, "pena_gauss", pena_gauss_bound(x, v2)});
      rows.push_back({x, v2, "freedman", freedman_bound(x, v2, c)});
    }
  }
  return rows;
}

}  // namespace pena
