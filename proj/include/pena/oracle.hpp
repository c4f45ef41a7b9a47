#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pena/errors.hpp"
#include "pena/expo.hpp"
#include "pena/ksum.hpp"
#include "pena/mc.hpp"
#include "pena/models.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

// Finite atom-only model whose path space can be enumerated exhaustively:
// every atom contributes one branch per support point (weight mass * prob)
// plus a no-event branch of weight 1 - mass when the mass is below 1.
struct DiscreteModel {
  std::vector<AtomSpec> atoms;
  WeightSpec weight = default_weight();
  std::uint64_t path_budget = 1000000;

  // M is piecewise constant between atoms, so first-entry scanning is exact.
  static WeightSpec default_weight() {
    WeightSpec w = WeightSpec::identity();
    w.drift_monotone = DriftMonotone::constant;
    return w;
  }

  double horizon() const { return atoms.empty() ? 1.0 : atoms.back().time; }

  CompensatorSpec spec() const {
    CompensatorSpec s;
    s.ac = AbsContSpec::none();
    s.drift_sign_hint = DriftSignHint::zero_drift;
    s.atoms = atoms;
    return s;
  }
};

namespace oracle_detail {

struct Branch {
  bool fires;
  double mark;
  double prob;
};

inline std::vector<std::vector<Branch>> branch_table(const DiscreteModel& model) {
  std::vector<std::vector<Branch>> table;
  for (const AtomSpec& atom : model.atoms) {
    if (!atom.mark_law.discrete())
      throw Error("oracle: enumeration requires finite mark laws");
    std::vector<Branch> branches;
    if (atom.mass < 1.0) branches.push_back({false, 0.0, 1.0 - atom.mass});
    for (const auto& [value, prob] : atom.mark_law.atoms())
      branches.push_back({true, value, atom.mass * prob});
    table.push_back(std::move(branches));
  }
  return table;
}

}  // namespace oracle_detail

// Visits every path of the model with its exact probability. The visitor
// receives (probability, MarkedPointPath, MartingalePath).
template <class Visitor>
void enumerate(const DiscreteModel& model, Visitor&& visit) {
  const auto table = oracle_detail::branch_table(model);
  std::uint64_t total = 1;
  for (const auto& branches : table) {
    total *= branches.size();
    if (total > model.path_budget) throw PathBudgetError(total, model.path_budget);
  }

  const CompensatorSpec spec = model.spec();
  const std::size_t d = table.size();
  std::vector<std::size_t> choice(d, 0);
  MarkedPointPath path;
  path.horizon = model.horizon();

  while (true) {
    path.events.clear();
    double prob = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const auto& br = table[i][choice[i]];
      prob *= br.prob;
      if (br.fires) path.events.push_back({model.atoms[i].time, br.mark});
    }
    const MartingalePath mp = build_martingale(model.weight, path, spec);
    visit(prob, path, mp);

    std::size_t pos = d;
    while (pos > 0) {
      --pos;
      if (++choice[pos] < table[pos].size()) break;
      choice[pos] = 0;
      if (pos == 0) return;
    }
    if (d == 0) return;
  }
}

// Exact probability of the tail event by summing path probabilities.
inline double exact_tail(const DiscreteModel& model, const TailEvent& event) {
  CompensatedSum prob;
  enumerate(model, [&](double p, const MarkedPointPath&, const MartingalePath& mp) {
    for (std::size_t k = 0; k < mp.times.size(); ++k) {
      if (event.hit(mp.m[k], mp.qv[k], mp.pqv[k])) {
        prob += p;
        break;
      }
    }
  });
  return prob.value();
}

struct RatioMeans {
  double ratio_mean;  // E[exp(X_T) / E(S)_T]; exactly 1 under the default convention
  double u_mean;      // E[exp(X_T - S_T)]; at most 1
  double total_prob;  // enumeration sanity, ~1 to 1e-14
};

// Exact E[exp(X_T)/E(S)_T] and E[U_T] at the final atom time by enumeration.
inline RatioMeans exact_mean_ratio(const DiscreteModel& model, double lambda,
                                   const PenaltyFamily& family, AtomSignConvention conv) {
  const CompensatorSpec spec = model.spec();
  CompensatedSum ratio_acc, u_acc, prob_acc;
  enumerate(model, [&](double p, const MarkedPointPath& path, const MartingalePath& mp) {
    ExponentPath ep = exponent_compensator(spec, model.weight, mp, path, lambda, family, conv);
    doleans(ep);
    ratio_acc += p * std::exp(ep.x_final - ep.log_dd_final);
    u_acc += p * std::exp(ep.x_final - ep.s_final);
    prob_acc += p;
  });
  return {ratio_acc.value(), u_acc.value(), prob_acc.value()};
}

}  // namespace pena
