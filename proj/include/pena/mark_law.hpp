#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pena/errors.hpp"
#include "pena/quadrature.hpp"
#include "pena/rng.hpp"

namespace pena {

// Probability law of a jump mark. Finite-support laws evaluate expectations
// exactly; uniform(a, b) goes through quadrature.
class MarkLaw {
 public:
  enum class Kind { rademacher, two_point, uniform, finite_discrete };

  static MarkLaw rademacher() {
    MarkLaw law(Kind::rademacher);
    law.atoms_ = {{-1.0, 0.5}, {1.0, 0.5}};
    law.finish_discrete();
    return law;
  }

  // p_minus is the probability of x_minus; 1 - p_minus goes to x_plus.
  static MarkLaw two_point(double p_minus, double x_minus, double x_plus) {
    if (!(p_minus > 0.0 && p_minus < 1.0)) throw Error("two_point: p_minus must be in (0,1)");
    if (!(x_minus < x_plus)) throw Error("two_point: need x_minus < x_plus");
    MarkLaw law(Kind::two_point);
    law.atoms_ = {{x_minus, p_minus}, {x_plus, 1.0 - p_minus}};
    law.finish_discrete();
    return law;
  }

  static MarkLaw uniform(double a, double b) {
    if (!(a < b)) throw Error("uniform: need a < b");
    MarkLaw law(Kind::uniform);
    law.a_ = a;
    law.b_ = b;
    law.mean_ = 0.5 * (a + b);
    law.second_ = (a * a + a * b + b * b) / 3.0;
    law.min_ = a;
    law.max_ = b;
    return law;
  }

  static MarkLaw constant(double x) {
    MarkLaw law(Kind::finite_discrete);
    law.atoms_ = {{x, 1.0}};
    law.finish_discrete();
    return law;
  }

  static MarkLaw finite_discrete(std::vector<std::pair<double, double>> value_prob) {
    if (value_prob.empty()) throw Error("finite_discrete: empty support");
    double total = 0.0;
    for (const auto& [v, p] : value_prob) {
      if (!std::isfinite(v)) throw Error("finite_discrete: non-finite value");
      if (!(p > 0.0 && p <= 1.0)) throw Error("finite_discrete: probability outside (0,1]");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw Error("finite_discrete: probabilities sum to " + std::to_string(total));
    MarkLaw law(Kind::finite_discrete);
    law.atoms_ = std::move(value_prob);
    law.finish_discrete();
    return law;
  }

  Kind kind() const { return kind_; }
  bool discrete() const { return kind_ != Kind::uniform; }
  double mean() const { return mean_; }
  double second_moment() const { return second_; }
  double min_support() const { return min_; }
  double max_support() const { return max_; }

  // Support points with probabilities; only valid for discrete laws.
  const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }

  template <class F>
  double expectation(F&& f, const QuadratureOptions& opts = {}) const {
    if (discrete()) {
      double acc = 0.0;
      for (const auto& [v, p] : atoms_) acc += p * f(v);
      return acc;
    }
    const double width = b_ - a_;
    return integrate([&](double x) { return f(x); }, a_, b_, opts) / width;
  }

  double sample(PhiloxStream& rng) const {
    if (kind_ == Kind::uniform) return a_ + (b_ - a_) * rng.uniform01();
    if (atoms_.size() == 1) {
      rng.uniform01();  // keep the draw count law-independent
      return atoms_[0].first;
    }
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& [v, p] : atoms_) {
      acc += p;
      if (u < acc) return v;
    }
    return atoms_.back().first;
  }

 private:
  explicit MarkLaw(Kind kind) : kind_(kind) {}

  void finish_discrete() {
    mean_ = 0.0;
    second_ = 0.0;
    min_ = std::numeric_limits<double>::infinity();
    max_ = -std::numeric_limits<double>::infinity();
    for (const auto& [v, p] : atoms_) {
      mean_ += p * v;
      second_ += p * v * v;
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
    }
  }

  Kind kind_;
  std::vector<std::pair<double, double>> atoms_;
  double a_ = 0.0, b_ = 0.0;
  double mean_ = 0.0, second_ = 0.0;
  double min_ = 0.0, max_ = 0.0;
};

}  // namespace pena
