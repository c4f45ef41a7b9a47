#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pena/errors.hpp"
#include "pena/mark_law.hpp"
#include "pena/quadrature.hpp"
#include "pena/rng.hpp"

namespace pena {

struct MarkEvent {
  double time;
  double mark;
};

// One realization of a marked point process: finitely many events with
// strictly increasing times in (0, horizon].
struct MarkedPointPath {
  std::vector<MarkEvent> events;
  double horizon = 0.0;
};

// A predictable atom of the compensator: a jump happens at `time` with
// probability `mass`, with mark drawn from `mark_law`.
struct AtomSpec {
  double time = 0.0;
  double mass = 1.0;
  MarkLaw mark_law = MarkLaw::rademacher();
};

// Absolutely continuous part of the compensator. The intensity may consult
// the path so far (events strictly before the query time); the majorant must
// dominate it on the whole horizon.
struct AbsContSpec {
  std::function<double(double, std::span<const MarkEvent>)> intensity;
  double intensity_majorant = 0.0;
  MarkLaw mark_law = MarkLaw::rademacher();
  std::function<MarkLaw(double)> mark_law_fn;  // optional time dependence

  MarkLaw mark_law_at(double t) const { return mark_law_fn ? mark_law_fn(t) : mark_law; }

  static AbsContSpec none() {
    AbsContSpec ac;
    ac.intensity = [](double, std::span<const MarkEvent>) { return 0.0; };
    ac.intensity_majorant = 0.0;
    return ac;
  }

  static AbsContSpec homogeneous(double rate, MarkLaw law) {
    AbsContSpec ac;
    ac.intensity = [rate](double, std::span<const MarkEvent>) { return rate; };
    ac.intensity_majorant = rate;
    ac.mark_law = std::move(law);
    return ac;
  }
};

enum class DriftSignHint { nonneg_weight, nonpos_weight, zero_drift, unknown };

struct CompensatorSpec {
  AbsContSpec ac = AbsContSpec::none();
  std::vector<AtomSpec> atoms;
  DriftSignHint drift_sign_hint = DriftSignHint::unknown;

  bool has_ac() const { return ac.intensity_majorant > 0.0; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Structural checks on a compensator: atom masses in (0,1], strictly sorted
// atom times, nonnegative intensity below the majorant at probe points.
inline ValidationReport validate_compensator(const CompensatorSpec& spec,
                                             double probe_horizon = 10.0, int n_probe = 64) {
  ValidationReport report;
  for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
    const AtomSpec& atom = spec.atoms[i];
    if (!(atom.time > 0.0))
      report.violations.push_back("atom time must be positive (atom " + std::to_string(i) + ")");
    if (atom.mass > 1.0)
      report.violations.push_back("atom mass > 1 (atom " + std::to_string(i) + ")");
    else if (!(atom.mass > 0.0))
      report.violations.push_back("atom mass <= 0 (atom " + std::to_string(i) + ")");
    if (i > 0 && spec.atoms[i].time == spec.atoms[i - 1].time)
      report.violations.push_back("duplicate atom time at t=" + std::to_string(atom.time));
    else if (i > 0 && spec.atoms[i].time < spec.atoms[i - 1].time)
      report.violations.push_back("unsorted atom times at index " + std::to_string(i));
  }
  if (spec.ac.intensity) {
    const std::vector<MarkEvent> empty;
    for (int j = 0; j <= n_probe; ++j) {
      const double t = probe_horizon * double(j) / double(n_probe);
      const double lam = spec.ac.intensity(t, std::span<const MarkEvent>(empty));
      if (lam < 0.0) {
        report.violations.push_back("negative intensity at t=" + std::to_string(t));
        break;
      }
      if (lam > spec.ac.intensity_majorant * (1.0 + 1e-9)) {
        report.violations.push_back("intensity exceeds majorant at t=" + std::to_string(t));
        break;
      }
    }
  }
  return report;
}

// Samples one path by Ogata thinning for the absolutely continuous part and
// independent Bernoulli(mass) trials at atom times. Deterministic in
// (spec, horizon, stream state).
inline MarkedPointPath sample_path(const CompensatorSpec& spec, double horizon,
                                   PhiloxStream& rng) {
  if (!(horizon > 0.0)) throw Error("sample_path: horizon must be positive");
  MarkedPointPath path;
  path.horizon = horizon;

  std::size_t atom_idx = 0;
  double t = 0.0;
  const double majorant = spec.ac.intensity_majorant;
  double next_candidate = (majorant > 0.0) ? rng.exponential(majorant)
                                           : std::numeric_limits<double>::infinity();

  while (true) {
    const double atom_time = (atom_idx < spec.atoms.size() &&
                              spec.atoms[atom_idx].time <= horizon)
                                 ? spec.atoms[atom_idx].time
                                 : std::numeric_limits<double>::infinity();
    double cand = t + next_candidate;
    if (cand > horizon) cand = std::numeric_limits<double>::infinity();
    if (cand == std::numeric_limits<double>::infinity() &&
        atom_time == std::numeric_limits<double>::infinity())
      break;

    if (cand < atom_time) {
      t = cand;
      next_candidate = rng.exponential(majorant);
      const double lam = spec.ac.intensity(t, std::span<const MarkEvent>(path.events));
      if (lam > majorant * (1.0 + 1e-9)) throw MajorantViolationError(t, lam, majorant);
      if (rng.uniform01() * majorant < lam) {
        double event_time = t;
        // Atom times are reserved for atom-triggered events, and event times
        // must stay strictly increasing even if a waiting time rounds to 0.
        while ((atom_idx < spec.atoms.size() && event_time == spec.atoms[atom_idx].time) ||
               (!path.events.empty() && event_time <= path.events.back().time))
          event_time = std::nextafter(event_time, horizon + 1.0);
        const double mark = spec.ac.mark_law_at(event_time).sample(rng);
        if (event_time <= horizon) path.events.push_back({event_time, mark});
      }
    } else {
      // Process the atom first; the pending thinning candidate stays pending.
      next_candidate = cand - atom_time;
      t = atom_time;
      const AtomSpec& atom = spec.atoms[atom_idx];
      const bool fire = rng.bernoulli(atom.mass);
      const double mark = atom.mark_law.sample(rng);  // drawn either way, keeps stream aligned
      if (fire) path.events.push_back({atom.time, mark});
      ++atom_idx;
    }
  }
  return path;
}

inline MarkedPointPath sample_path(const CompensatorSpec& spec, double horizon,
                                   std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  return sample_path(spec, horizon, rng);
}

// A(t) = integral of the intensity over [0, t] plus the atom masses up to t.
// For history-dependent intensities the supplied history is used as-is.
inline double cumulative_A(const CompensatorSpec& spec, double t,
                           std::span<const MarkEvent> history = {},
                           const QuadratureOptions& opts = {}) {
  if (t < 0.0) throw Error("cumulative_A: t must be nonnegative");
  double total = 0.0;
  if (spec.has_ac()) {
    total += integrate([&](double s) { return spec.ac.intensity(s, history); }, 0.0, t, opts);
  }
  for (const AtomSpec& atom : spec.atoms) {
    if (atom.time <= t) total += atom.mass;
  }
  return total;
}

}  // namespace pena
