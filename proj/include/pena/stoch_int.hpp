#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pena/errors.hpp"
#include "pena/ksum.hpp"
#include "pena/pp_core.hpp"

namespace pena {

enum class DriftMonotone {
  nonincreasing_between_jumps,
  nondecreasing_between_jumps,
  constant,
  unknown
};

// Predictable integrand W(t, x, history). `jump_floor`, when set, asserts a
// lower bound for every jump of M during construction (the dM >= -1 guard).
struct WeightSpec {
  std::function<double(double, double, std::span<const MarkEvent>)> w;
  std::optional<double> jump_floor;
  DriftMonotone drift_monotone = DriftMonotone::unknown;

  static WeightSpec identity() {
    WeightSpec ws;
    ws.w = [](double, double x, std::span<const MarkEvent>) { return x; };
    return ws;
  }
};

enum class JumpKind { ac_event, atom_event, atom_silent };

// M = W*(mu - nu) recorded at its jump times. Between jumps M moves only by
// the absolutely continuous drift -(W*nu^ac); jump k sits at times[k] with
// size dm[k], and drift[k] is the drift increment over (times[k-1], times[k]].
// drift has one extra trailing entry for the segment (times.back(), horizon].
struct MartingalePath {
  std::vector<double> times;
  std::vector<JumpKind> kinds;
  std::vector<double> dm;
  std::vector<double> drift;
  std::vector<double> m;    // M right after each jump
  std::vector<double> qv;   // sum of dM^2 up to and including each jump
  std::vector<double> pqv;  // <M,M> right after each jump time
  double horizon = 0.0;
  double m_final = 0.0;    // M at the horizon
  double qv_final = 0.0;
  double pqv_final = 0.0;  // <M,M> at the horizon

  std::size_t n_jumps() const { return times.size(); }
};

// Conditional mark average of W against nu({t} x dx): mass * E[W(t, .)] at an
// atom time, 0 elsewhere.
inline double hat_w(const CompensatorSpec& spec, const WeightSpec& w, double t,
                    std::span<const MarkEvent> history = {}) {
  auto it = std::lower_bound(spec.atoms.begin(), spec.atoms.end(), t,
                             [](const AtomSpec& a, double v) { return a.time < v; });
  if (it == spec.atoms.end() || it->time != t) return 0.0;
  const double value = it->mass * it->mark_law.expectation([&](double x) {
    return w.w(t, x, history);
  });
  if (!std::isfinite(value)) throw Error("hat_w: W not integrable at atom t=" + std::to_string(t));
  return value;
}

struct BuildOptions {
  QuadratureOptions quad;
};

namespace stoch_detail {

struct Timeline {
  std::vector<double> times;
  std::vector<JumpKind> kinds;
  std::vector<double> marks;        // meaningful for *_event kinds
  std::vector<std::size_t> atom_of;  // index into spec.atoms for atom kinds
  std::vector<std::size_t> hist_len;  // events strictly before this time
};

// Merge path events with atom times <= horizon. Events at an atom time are
// attributed to that atom (sample_path reserves atom times for atom events).
inline Timeline merge_timeline(const MarkedPointPath& path, const CompensatorSpec& spec) {
  Timeline tl;
  std::size_t ei = 0, ai = 0;
  while (true) {
    const bool has_e = ei < path.events.size();
    const bool has_a = ai < spec.atoms.size() && spec.atoms[ai].time <= path.horizon;
    if (!has_e && !has_a) break;
    const double te = has_e ? path.events[ei].time : std::numeric_limits<double>::infinity();
    const double ta = has_a ? spec.atoms[ai].time : std::numeric_limits<double>::infinity();
    if (te < ta) {
      tl.times.push_back(te);
      tl.kinds.push_back(JumpKind::ac_event);
      tl.marks.push_back(path.events[ei].mark);
      tl.atom_of.push_back(std::size_t(-1));
      tl.hist_len.push_back(ei);
      ++ei;
    } else if (ta < te) {
      tl.times.push_back(ta);
      tl.kinds.push_back(JumpKind::atom_silent);
      tl.marks.push_back(0.0);
      tl.atom_of.push_back(ai);
      tl.hist_len.push_back(ei);
      ++ai;
    } else {
      tl.times.push_back(ta);
      tl.kinds.push_back(JumpKind::atom_event);
      tl.marks.push_back(path.events[ei].mark);
      tl.atom_of.push_back(ai);
      tl.hist_len.push_back(ei);
      ++ei;
      ++ai;
    }
  }
  return tl;
}

// Integral over (a, b] of intensity(s) * E_markLaw[ f(W(s, x)) ] ds with the
// history frozen to the segment's prefix.
template <class F>
inline double ac_integral(const CompensatorSpec& spec, const WeightSpec& w,
                          std::span<const MarkEvent> hist, double a, double b, F&& f,
                          const QuadratureOptions& opts) {
  if (!spec.has_ac() || b <= a) return 0.0;
  return integrate(
      [&](double s) {
        const double lam = spec.ac.intensity(s, hist);
        if (lam == 0.0) return 0.0;
        const MarkLaw law = spec.ac.mark_law_at(s);
        return lam * law.expectation([&](double x) { return f(w.w(s, x, hist), s); });
      },
      a, b, opts);
}

}  // namespace stoch_detail

// Builds the martingale, its quadratic variation and its predictable
// quadratic variation along one sampled path.
inline MartingalePath build_martingale(const WeightSpec& w, const MarkedPointPath& path,
                                       const CompensatorSpec& spec,
                                       const BuildOptions& opts = {}) {
  const auto tl = stoch_detail::merge_timeline(path, spec);
  MartingalePath mp;
  mp.horizon = path.horizon;
  const std::size_t n = tl.times.size();
  mp.times = tl.times;
  mp.kinds = tl.kinds;
  mp.dm.resize(n);
  mp.drift.resize(n + 1);
  mp.m.resize(n);
  mp.qv.resize(n);
  mp.pqv.resize(n);

  const bool zero_drift = spec.drift_sign_hint == DriftSignHint::zero_drift;
  const auto events = std::span<const MarkEvent>(path.events);

  CompensatedSum m_acc, qv_acc, pqv_acc;
  double seg_start = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = tl.times[k];
    const auto hist = events.subspan(0, tl.hist_len[k]);

    const double seg_drift =
        zero_drift ? 0.0
                   : -stoch_detail::ac_integral(spec, w, hist, seg_start, t,
                                                [](double wv, double) { return wv; }, opts.quad);
    const double seg_pqv = stoch_detail::ac_integral(
        spec, w, hist, seg_start, t, [](double wv, double) { return wv * wv; }, opts.quad);

    double jump = 0.0;
    double atom_pqv = 0.0;
    if (tl.kinds[k] == JumpKind::ac_event) {
      jump = w.w(t, tl.marks[k], hist);
    } else {
      const AtomSpec& atom = spec.atoms[tl.atom_of[k]];
      const double what = hat_w(spec, w, t, hist);
      jump = (tl.kinds[k] == JumpKind::atom_event) ? w.w(t, tl.marks[k], hist) - what : -what;
      const double centered_sq = atom.mass * atom.mark_law.expectation([&](double x) {
        const double u = w.w(t, x, hist) - what;
        return u * u;
      });
      atom_pqv = centered_sq + (1.0 - atom.mass) * what * what;
    }
    if (w.jump_floor && jump < *w.jump_floor) throw JumpFloorViolationError(t, jump, *w.jump_floor);

    mp.drift[k] = seg_drift;
    mp.dm[k] = jump;
    m_acc += seg_drift;
    m_acc += jump;
    qv_acc += jump * jump;
    pqv_acc += seg_pqv;
    pqv_acc += atom_pqv;
    mp.m[k] = m_acc.value();
    mp.qv[k] = qv_acc.value();
    mp.pqv[k] = pqv_acc.value();
    seg_start = t;
  }

  const auto full_hist = events;
  mp.drift[n] = zero_drift ? 0.0
                           : -stoch_detail::ac_integral(spec, w, full_hist, seg_start, path.horizon,
                                                        [](double wv, double) { return wv; },
                                                        opts.quad);
  const double tail_pqv = stoch_detail::ac_integral(
      spec, w, full_hist, seg_start, path.horizon, [](double wv, double) { return wv * wv; },
      opts.quad);
  m_acc += mp.drift[n];
  pqv_acc += tail_pqv;
  mp.m_final = m_acc.value();
  mp.qv_final = qv_acc.value();
  mp.pqv_final = pqv_acc.value();
  return mp;
}

// Right-continuous lookup of the pathwise quadratic variation.
inline double quadratic_variation(const MartingalePath& mp, double t) {
  auto it = std::upper_bound(mp.times.begin(), mp.times.end(), t);
  if (it == mp.times.begin()) return 0.0;
  return mp.qv[std::size_t(it - mp.times.begin()) - 1];
}

// <M,M> at time t: atoms and centered-square mass up to t plus the ac part.
inline double predictable_qv(const MartingalePath& mp, const CompensatorSpec& spec,
                             const WeightSpec& w, double t, const MarkedPointPath& path,
                             const QuadratureOptions& opts = {}) {
  auto it = std::upper_bound(mp.times.begin(), mp.times.end(), t);
  const std::size_t k = std::size_t(it - mp.times.begin());
  const double base = (k == 0) ? 0.0 : mp.pqv[k - 1];
  const double seg_start = (k == 0) ? 0.0 : mp.times[k - 1];
  const auto hist =
      std::span<const MarkEvent>(path.events)
          .subspan(0, std::size_t(std::lower_bound(path.events.begin(), path.events.end(), t,
                                                   [](const MarkEvent& e, double v) {
                                                     return e.time < v;
                                                   }) -
                                  path.events.begin()));
  return base + stoch_detail::ac_integral(spec, w, hist, seg_start, std::min(t, mp.horizon),
                                          [](double wv, double) { return wv * wv; }, opts);
}

// M at time t (jump value plus drift accrued since the last jump).
inline double m_at(const MartingalePath& mp, const CompensatorSpec& spec, const WeightSpec& w,
                   double t, const MarkedPointPath& path, const QuadratureOptions& opts = {}) {
  auto it = std::upper_bound(mp.times.begin(), mp.times.end(), t);
  const std::size_t k = std::size_t(it - mp.times.begin());
  const double base = (k == 0) ? 0.0 : mp.m[k - 1];
  const double seg_start = (k == 0) ? 0.0 : mp.times[k - 1];
  if (spec.drift_sign_hint == DriftSignHint::zero_drift || !spec.has_ac()) return base;
  const auto hist =
      std::span<const MarkEvent>(path.events)
          .subspan(0, std::size_t(std::lower_bound(path.events.begin(), path.events.end(), t,
                                                   [](const MarkEvent& e, double v) {
                                                     return e.time < v;
                                                   }) -
                                  path.events.begin()));
  return base - stoch_detail::ac_integral(spec, w, hist, seg_start, std::min(t, mp.horizon),
                                          [](double wv, double) { return wv; }, opts);
}

}  // namespace pena
