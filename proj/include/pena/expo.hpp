#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pena/errors.hpp"
#include "pena/ksum.hpp"
#include "pena/pp_core.hpp"
#include "pena/rng.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

enum class PenaltyKind { poissonian, gaussian, custom };

// Penalty c(lambda) entering the exponent X = lambda*M - c(lambda)*[M,M].
//
// poissonian: c(lambda) = -(lambda + log(1-lambda)) on [0,1). With this sign
// the event-branch integrand exp(lambda*u - c u^2) - 1 - lambda*u is <= 0 for
// u >= -1 (the scalar inequality behind the Poissonian tail bound), the
// compensator S stays nonpositive, and exp(X)/exp(S) is the supermartingale
// whose optimization yields ((v2+x)/v2)^{v2} e^{-x}.
// gaussian: c(lambda) = lambda^2 / 2 on [0, inf).
struct PenaltyFamily {
  PenaltyKind kind = PenaltyKind::gaussian;
  std::function<double(double)> c;
  double lambda_lo = 0.0;
  double lambda_hi = std::numeric_limits<double>::infinity();
  int declared_sign = 0;  // +1: c >= 0 on the domain, -1: c <= 0, 0: unconstrained

  bool contains(double lambda) const { return lambda >= lambda_lo && lambda < lambda_hi; }

  double penalty_at(double lambda) const {
    const double value = c(lambda);
    if (declared_sign > 0 && value < 0.0)
      throw Error("penalty family: c(lambda) negative but declared nonnegative");
    if (declared_sign < 0 && value > 0.0)
      throw Error("penalty family: c(lambda) positive but declared nonpositive");
    return value;
  }

  static PenaltyFamily poissonian() {
    PenaltyFamily f;
    f.kind = PenaltyKind::poissonian;
    f.c = [](double l) { return -(l + std::log1p(-l)); };
    f.lambda_lo = 0.0;
    f.lambda_hi = 1.0;
    f.declared_sign = +1;
    return f;
  }

  static PenaltyFamily gaussian() {
    PenaltyFamily f;
    f.kind = PenaltyKind::gaussian;
    f.c = [](double l) { return 0.5 * l * l; };
    f.declared_sign = +1;
    return f;
  }

  static PenaltyFamily custom(std::function<double(double)> c_fn, int declared_sign = 0,
                              double lo = 0.0,
                              double hi = std::numeric_limits<double>::infinity()) {
    PenaltyFamily f;
    f.kind = PenaltyKind::custom;
    f.c = std::move(c_fn);
    f.declared_sign = declared_sign;
    f.lambda_lo = lo;
    f.lambda_hi = hi;
    return f;
  }
};

// Sign convention for the (1 - a_s) atom term of S(lambda).
//
// compensator_consistent uses exp(-lambda*u - c u^2) - 1 + lambda*u, which is
// exactly E[e^{dX}] - 1 on the no-event branch and makes exp(X)/E(S) an exact
// martingale on atom-bearing models. paper_as_written flips the sign of the
// quadratic term; the two coincide when a_s = 1 or W_hat = 0.
enum class AtomSignConvention { compensator_consistent, paper_as_written };

namespace expo_detail {

// g(u) = exp(lambda*u - c*u^2) - 1 - lambda*u, series-expanded for small |u|
// to avoid cancellation.
inline double g_term(double u, double lambda, double c) {
  if (std::fabs(u) < 1e-4) {
    const double l2 = lambda * lambda;
    return u * u * (0.5 * l2 - c) + u * u * u * (lambda * l2 / 6.0 - lambda * c) +
           u * u * u * u * (l2 * l2 / 24.0 - 0.5 * l2 * c + 0.5 * c * c);
  }
  return std::expm1(lambda * u - c * u * u) - lambda * u;
}

// h(u) = exp(-lambda*u -/+ c*u^2) - 1 + lambda*u (sign by convention).
inline double h_term(double u, double lambda, double c, AtomSignConvention conv) {
  if (conv == AtomSignConvention::compensator_consistent) return g_term(-u, lambda, c);
  if (std::fabs(u) < 1e-4) {
    const double l2 = lambda * lambda;
    return u * u * (0.5 * l2 + c) + u * u * u * (-lambda * l2 / 6.0 - lambda * c) +
           u * u * u * u * (l2 * l2 / 24.0 + 0.5 * l2 * c + 0.5 * c * c);
  }
  return std::expm1(-lambda * u + c * u * u) + lambda * u;
}

}  // namespace expo_detail

// The exponent compensator S(lambda) along one martingale path, its
// Doleans-Dade exponential, and the two ratio processes built from it.
struct ExponentPath {
  double lambda = 0.0;
  double penalty = 0.0;  // c(lambda)
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<double> s_ac;    // cumulative absolutely continuous part of S
  std::vector<double> s_jump;  // dS at each time (nonzero only at atoms)
  std::vector<double> s;       // cumulative S
  std::vector<double> x;       // lambda*M - c(lambda)*QV right after the jump
  std::vector<double> log_dd;  // log E(S)
  std::vector<double> dd;      // E(S)
  std::vector<double> u;       // exp(X - S)
  std::vector<double> r;       // exp(X - log E(S))
  double s_final = 0.0;
  double x_final = 0.0;
  double log_dd_final = 0.0;
  double u_final = 1.0;
  double r_final = 1.0;
};

// Builds S(lambda) and X along `mp`. Jumps of S happen only at atom times;
// the ac part accrues between jumps from the compensator's intensity.
inline ExponentPath exponent_compensator(const CompensatorSpec& spec, const WeightSpec& w,
                                         const MartingalePath& mp, const MarkedPointPath& path,
                                         double lambda, const PenaltyFamily& family,
                                         AtomSignConvention conv =
                                             AtomSignConvention::compensator_consistent,
                                         const QuadratureOptions& quad = {}) {
  if (!family.contains(lambda))
    throw Error("exponent_compensator: lambda=" + std::to_string(lambda) +
                " outside penalty family domain");
  const double c = family.penalty_at(lambda);

  ExponentPath ep;
  ep.lambda = lambda;
  ep.penalty = c;
  ep.horizon = mp.horizon;
  const std::size_t n = mp.n_jumps();
  ep.times = mp.times;
  ep.s_ac.resize(n);
  ep.s_jump.resize(n);
  ep.s.resize(n);
  ep.x.resize(n);

  const auto events = std::span<const MarkEvent>(path.events);
  CompensatedSum s_ac_acc, s_acc;
  double seg_start = 0.0;
  std::size_t hist_len = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = mp.times[k];
    const auto hist = events.subspan(0, hist_len);
    const double seg = stoch_detail::ac_integral(
        spec, w, hist, seg_start, t,
        [&](double wv, double) { return expo_detail::g_term(wv, lambda, c); }, quad);
    s_ac_acc += seg;
    s_acc += seg;

    double jump = 0.0;
    if (mp.kinds[k] != JumpKind::ac_event) {
      auto it = std::lower_bound(spec.atoms.begin(), spec.atoms.end(), t,
                                 [](const AtomSpec& a, double v) { return a.time < v; });
      const AtomSpec& atom = *it;
      const double what = hat_w(spec, w, t, hist);
      jump = atom.mass * atom.mark_law.expectation([&](double xv) {
        return expo_detail::g_term(w.w(t, xv, hist) - what, lambda, c);
      });
      jump += (1.0 - atom.mass) * expo_detail::h_term(what, lambda, c, conv);
    }
    s_acc += jump;
    ep.s_ac[k] = s_ac_acc.value();
    ep.s_jump[k] = jump;
    ep.s[k] = s_acc.value();
    ep.x[k] = lambda * mp.m[k] - c * mp.qv[k];

    if (mp.kinds[k] != JumpKind::atom_silent) ++hist_len;
    seg_start = t;
  }
  const double tail = stoch_detail::ac_integral(
      spec, w, events, seg_start, mp.horizon,
      [&](double wv, double) { return expo_detail::g_term(wv, lambda, c); }, quad);
  s_acc += tail;
  ep.s_final = s_acc.value();
  ep.x_final = lambda * mp.m_final - c * mp.qv_final;
  return ep;
}

// E(S)_t = exp(S_ac_t) * prod_{s<=t} (1 + dS_s), kept in log space. Throws if
// any dS <= -1 (the exponential would hit zero or go negative).
inline void doleans(ExponentPath& ep) {
  const std::size_t n = ep.times.size();
  ep.log_dd.resize(n);
  ep.dd.resize(n);
  CompensatedSum log_acc;
  for (std::size_t k = 0; k < n; ++k) {
    if (ep.s_jump[k] <= -1.0) throw DoleansError(ep.times[k], ep.s_jump[k]);
    log_acc += std::log1p(ep.s_jump[k]);
    ep.log_dd[k] = ep.s_ac[k] + log_acc.value();
    ep.dd[k] = std::exp(ep.log_dd[k]);
  }
  const double s_ac_final = ep.s_final - (n ? (ep.s[n - 1] - ep.s_ac[n - 1]) : 0.0);
  ep.log_dd_final = s_ac_final + log_acc.value();
}

// U = exp(X)/exp(S) (supermartingale when S <= 0) and R = exp(X)/E(S) (the
// local-martingale ratio). doleans() must have run.
inline void ratio_processes(ExponentPath& ep) {
  const std::size_t n = ep.times.size();
  if (ep.log_dd.size() != n) throw Error("ratio_processes: doleans() has not been applied");
  ep.u.resize(n);
  ep.r.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    ep.u[k] = std::exp(ep.x[k] - ep.s[k]);
    ep.r[k] = std::exp(ep.x[k] - ep.log_dd[k]);
  }
  ep.u_final = std::exp(ep.x_final - ep.s_final);
  ep.r_final = std::exp(ep.x_final - ep.log_dd_final);
}

inline ExponentPath build_exponent_path(const CompensatorSpec& spec, const WeightSpec& w,
                                        const MartingalePath& mp, const MarkedPointPath& path,
                                        double lambda, const PenaltyFamily& family,
                                        AtomSignConvention conv =
                                            AtomSignConvention::compensator_consistent,
                                        const QuadratureOptions& quad = {}) {
  ExponentPath ep = exponent_compensator(spec, w, mp, path, lambda, family, conv, quad);
  doleans(ep);
  ratio_processes(ep);
  return ep;
}

// S evaluated at an arbitrary time (cumulative value at the last jump plus
// the ac increment up to t).
inline double s_at(const ExponentPath& ep, const CompensatorSpec& spec, const WeightSpec& w,
                   const MarkedPointPath& path, double t, const QuadratureOptions& quad = {}) {
  auto it = std::upper_bound(ep.times.begin(), ep.times.end(), t);
  const std::size_t k = std::size_t(it - ep.times.begin());
  const double base = (k == 0) ? 0.0 : ep.s[k - 1];
  const double seg_start = (k == 0) ? 0.0 : ep.times[k - 1];
  const auto hist =
      std::span<const MarkEvent>(path.events)
          .subspan(0, std::size_t(std::lower_bound(path.events.begin(), path.events.end(), t,
                                                   [](const MarkEvent& e, double v) {
                                                     return e.time < v;
                                                   }) -
                                  path.events.begin()));
  return base + stoch_detail::ac_integral(
                    spec, w, hist, seg_start, std::min(t, ep.horizon),
                    [&](double wv, double) {
                      return expo_detail::g_term(wv, ep.lambda, ep.penalty);
                    },
                    quad);
}

struct SNonpositiveReport {
  bool pass = true;
  double max_value = -std::numeric_limits<double>::infinity();
  double witness_lambda = 0.0;
  double witness_t = 0.0;
  std::uint64_t witness_path = 0;
};

// Checks the Gaussian-family hypothesis S~(lambda)_t <= 0 over sampled paths
// and the given (lambda, t) grids. Pass iff the maximum is <= 1e-12.
inline SNonpositiveReport check_s_nonpositive(const CompensatorSpec& spec, const WeightSpec& w,
                                              std::span<const double> lambda_grid,
                                              std::span<const double> t_grid,
                                              std::uint64_t n_paths, std::uint64_t seed,
                                              const QuadratureOptions& quad = {}) {
  SNonpositiveReport report;
  if (lambda_grid.empty() || t_grid.empty()) throw Error("check_s_nonpositive: empty grid");
  const double horizon = *std::max_element(t_grid.begin(), t_grid.end());
  const PenaltyFamily family = PenaltyFamily::gaussian();
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    PhiloxStream rng(seed, i);
    const MarkedPointPath path = sample_path(spec, horizon, rng);
    const MartingalePath mp = build_martingale(w, path, spec);
    for (double lambda : lambda_grid) {
      const ExponentPath ep = exponent_compensator(spec, w, mp, path, lambda, family,
                                                   AtomSignConvention::compensator_consistent,
                                                   quad);
      for (double t : t_grid) {
        const double value = s_at(ep, spec, w, path, t, quad);
        if (value > report.max_value) {
          report.max_value = value;
          report.witness_lambda = lambda;
          report.witness_t = t;
          report.witness_path = i;
        }
      }
    }
  }
  report.pass = report.max_value <= 1e-12;
  return report;
}

}  // namespace pena
