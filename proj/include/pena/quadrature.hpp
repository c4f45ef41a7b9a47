#pragma once

#include <cmath>
#include <queue>
#include <utility>
#include <vector>

#include "pena/errors.hpp"

namespace pena {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_intervals = 4096;
};

namespace quad_detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK dqk15).
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
                                  0.4179591836734694};

template <class F>
inline void gk15(F& f, double a, double b, double& kronrod, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f_mid = f(mid);
  double gauss = kWg[3] * f_mid;
  kronrod = kWgk[7] * f_mid;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[i];
    const double sum = f(mid - dx) + f(mid + dx);
    kronrod += kWgk[i] * sum;
    if (i % 2 == 1) gauss += kWg[i / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  err = std::fabs(kronrod - gauss);
}

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& other) const { return error < other.error; }
};

}  // namespace quad_detail

// Globally adaptive Gauss-Kronrod integral of f over [a, b]: the interval
// with the largest error estimate is bisected until the total error meets
// max(abs_tol, rel_tol * |integral|) or the interval budget runs out.
template <class F>
inline double integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }

  std::priority_queue<quad_detail::Interval> heap;
  double total = 0.0, total_err = 0.0;
  {
    quad_detail::Interval first{a, b, 0.0, 0.0};
    quad_detail::gk15(f, a, b, first.value, first.error);
    total = first.value;
    total_err = first.error;
    heap.push(first);
  }

  int used = 1;
  while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
    if (used >= opts.max_intervals)
      throw QuadratureError("quadrature failed to converge", total_err);
    const quad_detail::Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval at machine resolution; keep its estimate and move on
      if (heap.empty()) break;
      total_err -= worst.error;  // cannot improve further, accept as-is
      continue;
    }
    quad_detail::Interval left{worst.a, mid, 0.0, 0.0};
    quad_detail::Interval right{mid, worst.b, 0.0, 0.0};
    quad_detail::gk15(f, left.a, left.b, left.value, left.error);
    quad_detail::gk15(f, right.a, right.b, right.value, right.error);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++used;
  }
  return sign * total;
}

}  // namespace pena
