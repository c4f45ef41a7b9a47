#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pena/errors.hpp"
#include "pena/mark_law.hpp"
#include "pena/pp_core.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

// A compensator plus the integrand that turns its paths into a martingale.
struct PPModel {
  CompensatorSpec spec;
  WeightSpec weight;
};

// Compound Poisson martingale Y_t - t*kappa*E[mark]: homogeneous rate kappa,
// i.i.d. marks, W(t, x) = x. Zero-mean marks are required unless explicitly
// overridden, so the drift vanishes and first-entry scanning stays exact.
inline PPModel compound_poisson_model(double kappa, const MarkLaw& law,
                                      bool allow_nonzero_mean = false) {
  if (!(kappa > 0.0)) throw Error("compound_poisson_model: kappa must be positive");
  const double scale = std::sqrt(std::max(law.second_moment(), 1e-300));
  const bool zero_mean = std::fabs(law.mean()) <= 1e-12 * std::max(1.0, scale);
  if (!zero_mean && !allow_nonzero_mean)
    throw Error("compound_poisson_model: mark law has nonzero mean " +
                std::to_string(law.mean()) + " (pass allow_nonzero_mean to override)");
  PPModel model;
  model.spec.ac = AbsContSpec::homogeneous(kappa, law);
  model.spec.drift_sign_hint = zero_mean ? DriftSignHint::zero_drift : DriftSignHint::unknown;
  model.weight = WeightSpec::identity();
  model.weight.drift_monotone = zero_mean ? DriftMonotone::constant
                                          : (law.mean() > 0 ? DriftMonotone::nonincreasing_between_jumps
                                                            : DriftMonotone::nondecreasing_between_jumps);
  if (law.min_support() >= -1.0) model.weight.jump_floor = -1.0;
  return model;
}

struct HeavyLeftReport {
  bool heavy = true;
  std::optional<double> violating_a;
  double worst_value = 0.0;  // max over the grid of E[T_a]
};

// Heavy-on-left check: E[min(|xi|, a) sign(xi)] <= 0 for every truncation
// level a. For discrete laws E[T_a] is piecewise linear in a with kinks at
// the |support| points, so an empty grid defaults to those kinks.
inline HeavyLeftReport heavy_on_left_check(const MarkLaw& law,
                                           std::span<const double> a_grid = {}) {
  if (std::fabs(law.mean()) > 1e-10)
    throw Error("heavy_on_left_check: law must have zero mean");
  std::vector<double> grid(a_grid.begin(), a_grid.end());
  if (grid.empty()) {
    if (law.discrete()) {
      for (const auto& [v, p] : law.atoms())
        if (v != 0.0) grid.push_back(std::fabs(v));
    } else {
      const double hi = std::max(std::fabs(law.min_support()), std::fabs(law.max_support()));
      for (int i = 1; i <= 32; ++i) grid.push_back(hi * double(i) / 32.0);
    }
  }
  HeavyLeftReport report;
  report.worst_value = -std::numeric_limits<double>::infinity();
  for (double a : grid) {
    if (!(a > 0.0)) throw Error("heavy_on_left_check: truncation level must be positive");
    const double value = law.expectation([a](double x) {
      const double t = std::min(std::fabs(x), a);
      return x > 0 ? t : (x < 0 ? -t : 0.0);
    });
    if (value > report.worst_value) report.worst_value = value;
    if (value > 1e-12 && report.heavy) {
      report.heavy = false;
      report.violating_a = a;
    }
  }
  return report;
}

struct Hl2Report {
  bool pass = true;
  std::optional<double> witness_lambda;
  double worst_value = 1.0;  // max over the grid of E[exp(lambda x - lambda^2 x^2 / 2)]
};

// Integral condition E[exp(lambda x - lambda^2 x^2 / 2)] <= 1 for each lambda
// in the grid; this is the compound-Poisson form of the S~ <= 0 hypothesis.
inline Hl2Report hl2_condition_check(const MarkLaw& law, std::span<const double> lambda_grid) {
  Hl2Report report;
  report.worst_value = -std::numeric_limits<double>::infinity();
  for (double lambda : lambda_grid) {
    const double value = law.expectation(
        [lambda](double x) { return std::exp(lambda * x - 0.5 * lambda * lambda * x * x); });
    if (value > report.worst_value) report.worst_value = value;
    if (value > 1.0 + 1e-12 && report.pass) {
      report.pass = false;
      report.witness_lambda = lambda;
    }
  }
  return report;
}

// Pure-atom compensator: ac intensity 0, predictable atoms at the given
// times. With all masses 1 this embeds a discrete-time martingale.
inline PPModel atom_grid_model(std::span<const double> times, std::span<const double> masses,
                               std::span<const MarkLaw> laws) {
  if (times.size() != masses.size() || times.size() != laws.size())
    throw Error("atom_grid_model: times, masses, laws must have equal length");
  PPModel model;
  model.spec.ac = AbsContSpec::none();
  model.spec.drift_sign_hint = DriftSignHint::zero_drift;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(masses[i] > 0.0 && masses[i] <= 1.0))
      throw Error("atom_grid_model: mass outside (0,1]");
    model.spec.atoms.push_back({times[i], masses[i], laws[i]});
  }
  model.weight = WeightSpec::identity();
  model.weight.drift_monotone = DriftMonotone::constant;
  return model;
}

}  // namespace pena
