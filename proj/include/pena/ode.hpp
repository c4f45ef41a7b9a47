#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pena/errors.hpp"

namespace pena {

// Accepted steps of an adaptive Dormand-Prince 5(4) integration, with the
// derivative stored at every knot so cubic Hermite interpolation is available
// between knots.
template <std::size_t N>
struct OdeSolution {
  std::vector<double> t;
  std::vector<std::array<double, N>> y;
  std::vector<std::array<double, N>> f;
  bool stopped_early = false;

  double t_end() const { return t.empty() ? 0.0 : t.back(); }

  // Cubic Hermite interpolation of component `c` at time `tq` (clamped to the
  // solved range).
  double eval(double tq, std::size_t c) const {
    if (tq <= t.front()) return y.front()[c];
    if (tq >= t.back()) return y.back()[c];
    const auto it = std::upper_bound(t.begin(), t.end(), tq);
    const std::size_t k = std::size_t(it - t.begin()) - 1;
    const double h = t[k + 1] - t[k];
    const double s = (tq - t[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y[k][c] + h10 * h * f[k][c] + h01 * y[k + 1][c] + h11 * h * f[k + 1][c];
  }
};

// Integrates y' = rhs(t, y) from (t0, y0) to t_end, stepping exactly onto
// every time in `targets` (must be sorted, within [t0, t_end]). `stop`
// receives (t, y) after each accepted step and may end the integration early.
template <std::size_t N, class RHS, class Stop>
OdeSolution<N> rk45_solve(RHS&& rhs, double t0, std::array<double, N> y0, double t_end,
                          std::vector<double> targets, double abs_tol, double rel_tol,
                          Stop&& stop, double h_max = std::numeric_limits<double>::infinity()) {
  // Dormand-Prince coefficients.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  OdeSolution<N> sol;
  double t = t0;
  std::array<double, N> y = y0;
  std::array<double, N> k1 = rhs(t, y);
  sol.t.push_back(t);
  sol.y.push_back(y);
  sol.f.push_back(k1);

  std::size_t target_idx = 0;
  while (target_idx < targets.size() && targets[target_idx] <= t0) ++target_idx;

  double h = std::min({1e-2 * std::max(1.0, std::fabs(t_end - t0)), t_end - t0, h_max});
  if (h <= 0) return sol;
  const double h_min = 1e-14 * std::max(1.0, std::fabs(t_end));
  int rejects_in_row = 0;

  while (t < t_end) {
    double h_try = std::min({h, t_end - t, h_max});
    if (target_idx < targets.size()) h_try = std::min(h_try, targets[target_idx] - t);
    h_try = std::max(h_try, h_min);

    std::array<double, N> y2, y3, y4, y5, y6, y7;
    for (std::size_t i = 0; i < N; ++i) y2[i] = y[i] + h_try * a21 * k1[i];
    const auto k2 = rhs(t + h_try / 5, y2);
    for (std::size_t i = 0; i < N; ++i) y3[i] = y[i] + h_try * (a31 * k1[i] + a32 * k2[i]);
    const auto k3 = rhs(t + 3 * h_try / 10, y3);
    for (std::size_t i = 0; i < N; ++i)
      y4[i] = y[i] + h_try * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const auto k4 = rhs(t + 4 * h_try / 5, y4);
    for (std::size_t i = 0; i < N; ++i)
      y5[i] = y[i] + h_try * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    const auto k5 = rhs(t + 8 * h_try / 9, y5);
    for (std::size_t i = 0; i < N; ++i)
      y6[i] = y[i] + h_try * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const auto k6 = rhs(t + h_try, y6);
    for (std::size_t i = 0; i < N; ++i)
      y7[i] = y[i] + h_try * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    const auto k7 = rhs(t + h_try, y7);

    double err_norm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double err_i = h_try * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i] + e7 * k7[i]);
      const double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(y7[i]));
      err_norm = std::max(err_norm, std::fabs(err_i) / scale);
    }

    if (err_norm <= 1.0 || h_try <= h_min * 1.0001) {
      t += h_try;
      y = y7;
      k1 = k7;
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.f.push_back(k1);
      if (target_idx < targets.size() && t >= targets[target_idx] - 1e-15) ++target_idx;
      rejects_in_row = 0;
      if (stop(t, y)) {
        sol.stopped_early = true;
        return sol;
      }
    } else if (++rejects_in_row > 200) {
      throw Error("ODE step size underflow");
    }
    const double factor =
        (err_norm > 0) ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
    h = h_try * std::clamp(factor, 0.2, 5.0);
  }
  return sol;
}

template <std::size_t N, class RHS>
OdeSolution<N> rk45_solve(RHS&& rhs, double t0, std::array<double, N> y0, double t_end,
                          std::vector<double> targets, double abs_tol, double rel_tol,
                          double h_max = std::numeric_limits<double>::infinity()) {
  return rk45_solve<N>(std::forward<RHS>(rhs), t0, y0, t_end, std::move(targets), abs_tol,
                       rel_tol, [](double, const std::array<double, N>&) { return false; },
                       h_max);
}

}  // namespace pena
