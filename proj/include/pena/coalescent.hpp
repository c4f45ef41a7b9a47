#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pena/errors.hpp"
#include "pena/ksum.hpp"
#include "pena/math_util.hpp"
#include "pena/ode.hpp"
#include "pena/quadrature.hpp"
#include "pena/rng.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

// Probability measure Lambda on [0,1] driving the coalescent rates.
class LambdaMeasure {
 public:
  enum class Kind { dirac, beta, uniform01, finite_mixture };

  static LambdaMeasure dirac(double p) {
    if (p < 0.0 || p > 1.0) throw Error("LambdaMeasure::dirac: p must be in [0,1]");
    LambdaMeasure m(Kind::dirac);
    m.points_ = {p};
    m.weights_ = {1.0};
    return m;
  }

  static LambdaMeasure kingman() { return dirac(0.0); }

  static LambdaMeasure beta(double a, double b) {
    if (!(a > 0.0 && b > 0.0)) throw Error("LambdaMeasure::beta: parameters must be positive");
    LambdaMeasure m(Kind::beta);
    m.a_ = a;
    m.b_ = b;
    return m;
  }

  static LambdaMeasure uniform01() { return LambdaMeasure(Kind::uniform01); }

  static LambdaMeasure finite_mixture(std::vector<double> points, std::vector<double> weights) {
    if (points.size() != weights.size() || points.empty())
      throw Error("LambdaMeasure::finite_mixture: bad point/weight lists");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i] < 0.0 || points[i] > 1.0)
        throw Error("LambdaMeasure::finite_mixture: point outside [0,1]");
      if (!(weights[i] > 0.0)) throw Error("LambdaMeasure::finite_mixture: nonpositive weight");
      total += weights[i];
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw Error("LambdaMeasure::finite_mixture: weights sum to " + std::to_string(total));
    LambdaMeasure m(Kind::finite_mixture);
    m.points_ = std::move(points);
    m.weights_ = std::move(weights);
    return m;
  }

  Kind kind() const { return kind_; }
  bool atomic() const { return kind_ == Kind::dirac || kind_ == Kind::finite_mixture; }
  double beta_a() const { return a_; }
  double beta_b() const { return b_; }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  // Integral of f against Lambda; exact sum for atomic measures.
  template <class F>
  double integrate(F&& f, const QuadratureOptions& opts = {}) const {
    switch (kind_) {
      case Kind::dirac:
      case Kind::finite_mixture: {
        double acc = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) acc += weights_[i] * f(points_[i]);
        return acc;
      }
      case Kind::uniform01:
        return pena::integrate([&](double y) { return f(y); }, 0.0, 1.0, opts);
      case Kind::beta: {
        const double log_norm = log_beta(a_, b_);
        return pena::integrate(
            [&](double y) {
              return f(y) * std::exp((a_ - 1.0) * std::log(y) + (b_ - 1.0) * std::log1p(-y) -
                                     log_norm);
            },
            0.0, 1.0, opts);
      }
    }
    return 0.0;
  }

 private:
  explicit LambdaMeasure(Kind kind) : kind_(kind) {}
  Kind kind_;
  std::vector<double> points_;
  std::vector<double> weights_;
  double a_ = 0.0, b_ = 0.0;
};

// lambda_{b,k} = int r^{k-2} (1-r)^{b-k} Lambda(dr), 0^0 = 1 at the
// endpoints. Exact Beta-function identities for dirac/beta/uniform.
inline double rate_lambda_bk(const LambdaMeasure& m, int b, int k,
                             const QuadratureOptions& opts = {}) {
  if (b < 2 || k < 2 || k > b) throw Error("rate_lambda_bk: need 2 <= k <= b");
  switch (m.kind()) {
    case LambdaMeasure::Kind::dirac:
    case LambdaMeasure::Kind::finite_mixture: {
      double acc = 0.0;
      for (std::size_t i = 0; i < m.points().size(); ++i) {
        const double r = m.points()[i];
        acc += m.weights()[i] * pow_int_00(r, k - 2) * pow_int_00(1.0 - r, b - k);
      }
      return acc;
    }
    case LambdaMeasure::Kind::uniform01:
      return std::exp(log_beta(double(k - 1), double(b - k + 1)));
    case LambdaMeasure::Kind::beta:
      return std::exp(log_beta(m.beta_a() + double(k - 2), m.beta_b() + double(b - k)) -
                      log_beta(m.beta_a(), m.beta_b()));
  }
  (void)opts;
  return 0.0;
}

// Total merge rate with b blocks, summed term-by-term over k.
inline double total_merge_rate(const LambdaMeasure& m, int b) {
  if (b < 2) return 0.0;
  CompensatedSum acc;
  for (int k = 2; k <= b; ++k) acc += std::exp(log_choose(b, k)) * rate_lambda_bk(m, b, k);
  return acc.value();
}

namespace coal_detail {

// (1 - (1-y)^b - b y (1-y)^{b-1}) / y^2, series-expanded near y = 0.
inline double total_rate_integrand(double y, int b) {
  if (y < 1e-6) {
    const double c2 = 0.5 * double(b) * double(b - 1);
    const double c3 = double(b) * double(b - 1) * double(b - 2) / 3.0;
    return c2 - c3 * y;
  }
  const double u = std::exp(double(b - 1) * std::log1p(-y));
  return (1.0 - u * (1.0 - y) - double(b) * y * u) / (y * y);
}

// (q y - 1 + (1-y)^q) / y^2, series-expanded near y = 0.
inline double psi_integrand(double y, double q) {
  if (y < 1e-6) return gen_binom(q, 2) - gen_binom(q, 3) * y + gen_binom(q, 4) * y * y;
  return (q * y - 1.0 + std::exp(q * std::log1p(-y))) / (y * y);
}

// (k y (1-y) + (k y - 1)^2 - (1-y)^k) / y^2, series-expanded near y = 0.
inline double psi2_integrand(double y, int k) {
  const double kd = double(k);
  if (y < 1e-6) return gen_binom(kd, 2) + gen_binom(kd, 3) * y + gen_binom(kd, 4) * y * y;
  const double num = kd * y * (1.0 - y) + (kd * y - 1.0) * (kd * y - 1.0) -
                     std::exp(kd * std::log1p(-y));
  return num / (y * y);
}

}  // namespace coal_detail

// Same total rate via direct quadrature of the binomial identity, used as the
// independent cross-check of total_merge_rate.
inline double total_merge_rate_direct(const LambdaMeasure& m, int b,
                                      const QuadratureOptions& opts = {}) {
  if (b < 2) return 0.0;
  return m.integrate([b](double y) { return coal_detail::total_rate_integrand(y, b); }, opts);
}

// Psi(q) = int (q y - 1 + (1-y)^q) y^{-2} Lambda(dy); the drift intensity of
// the block counting process, extended to real q by the binomial-expectation
// closed form. Kingman (dirac at 0) evaluates to q(q-1)/2 exactly.
inline double psi(const LambdaMeasure& m, double q, const QuadratureOptions& opts = {}) {
  if (!(q >= 1.0)) throw Error("psi: q must be >= 1");
  const double value =
      m.integrate([q](double y) { return coal_detail::psi_integrand(y, q); }, opts);
  if (!std::isfinite(value)) throw Error("psi: non-integrable singularity");
  return value;
}

// Psi2(k) = int E[f^2(k, y, .)] y^{-2} Lambda(dy) with
// E[f^2] = k y (1-y) + (k y - 1)^2 - (1-y)^k.
inline double psi2(const LambdaMeasure& m, int k, const QuadratureOptions& opts = {}) {
  if (k < 1) throw Error("psi2: k must be >= 1");
  const double value =
      m.integrate([k](double y) { return coal_detail::psi2_integrand(y, k); }, opts);
  if (!std::isfinite(value)) throw Error("psi2: non-integrable singularity");
  return value;
}

// Deterministic speed function: v' = -Psi(v) from (t0, v0), with the running
// integrals of 1/v and 1/v^2 carried along for drift and <M,M> evaluation.
class SpeedFunction {
 public:
  SpeedFunction(const LambdaMeasure& measure, double t0, double v0, double t_end,
                std::vector<double> targets = {}, double abs_tol = 1e-10)
      : t0_(t0) {
    if (!(v0 > 1.0)) throw Error("SpeedFunction: v0 must exceed 1");
    if (!(t_end > t0)) throw Error("SpeedFunction: empty time range");
    std::sort(targets.begin(), targets.end());
    QuadratureOptions psi_opts;
    psi_opts.abs_tol = 1e-12;
    psi_opts.rel_tol = 1e-10;
    auto rhs = [&measure, &psi_opts](double, const std::array<double, 3>& y) {
      const double v = std::max(y[0], 1.0);
      return std::array<double, 3>{-psi(measure, v, psi_opts), 1.0 / v, 1.0 / (v * v)};
    };
    const double h_max = std::max((t_end - t0) / 64.0, 1e-3);
    sol_ = rk45_solve<3>(rhs, t0, {v0, 0.0, 0.0}, t_end, std::move(targets), abs_tol, 1e-10,
                         [](double, const std::array<double, 3>& y) { return y[0] <= 1.0 + 1e-9; },
                         h_max);
    truncated_ = sol_.stopped_early;
  }

  double t0() const { return t0_; }
  double t_max() const { return sol_.t_end(); }
  bool truncated() const { return truncated_; }

  double v_at(double t) const { return sol_.eval(t, 0); }

  // int_{a}^{b} ds / v_s; linear extension past the solved range (v frozen).
  double int_inv_v(double a, double b) const { return cumulative(b, 1) - cumulative(a, 1); }
  double int_inv_v2(double a, double b) const { return cumulative(b, 2) - cumulative(a, 2); }

 private:
  double cumulative(double t, std::size_t c) const {
    if (t <= sol_.t_end()) return sol_.eval(t, c);
    const double v_last = sol_.y.back()[0];
    const double base = sol_.y.back()[c];
    const double slope = (c == 1) ? 1.0 / v_last : 1.0 / (v_last * v_last);
    return base + slope * (t - sol_.t_end());
  }

  double t0_;
  OdeSolution<3> sol_;
  bool truncated_ = false;
};

// v_t on a grid; the closed-form inverse of t = int_{v}^{inf} dq / Psi(q)
// started from the supplied (t0, v0).
inline std::vector<double> v_of_t(const LambdaMeasure& measure, double t0, double v0,
                                  std::vector<double> t_grid) {
  if (t_grid.empty()) return {};
  const double t_end = *std::max_element(t_grid.begin(), t_grid.end());
  SpeedFunction speed(measure, t0, v0, std::max(t_end, t0 + 1e-9), t_grid);
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    if (t < t0) throw Error("v_of_t: grid point before t0");
    out.push_back(speed.v_at(t));
  }
  return out;
}

// Kingman closed form v(t) = 1 / (1 - e^{-t/2}) and its matching start time.
inline double kingman_v_closed_form(double t) { return 1.0 / (-std::expm1(-0.5 * t)); }
inline double kingman_t0_for(double v0) { return 2.0 * std::log(v0 / (v0 - 1.0)); }

struct CoalescentEvent {
  double time;
  int k;  // number of blocks merged into one
};

struct CoalescentTrajectory {
  int n0 = 0;
  double t0 = 0.0;
  double end_time = 0.0;
  std::vector<CoalescentEvent> events;

  int n_at(double t) const {
    int n = n0;
    for (const auto& e : events) {
      if (e.time > t) break;
      n -= e.k - 1;
    }
    return n;
  }

  int final_n() const { return n_at(end_time); }
};

// Everything needed to simulate the block counting chain and assemble its
// speed-normalized martingale: per-b total rates, merge-size tables, Psi and
// Psi2 caches, and the speed function on [t0, t0 + horizon].
struct CoalescentModel {
  LambdaMeasure measure;
  int n0 = 2;
  double t0 = 0.0;
  double v0 = 2.0;
  double horizon = 1.0;
  SpeedFunction speed;
  std::vector<double> total_rate;           // index b
  std::vector<std::vector<double>> k_cdf;   // index b -> cdf over k = 2..b
  std::vector<double> psi_b;                // index b
  std::vector<double> psi2_b;               // index b

  static CoalescentModel build(const LambdaMeasure& measure, int n0, double t0, double v0,
                               double horizon) {
    if (n0 < 2) throw Error("CoalescentModel: n0 must be at least 2");
    if (!(horizon > 0.0)) throw Error("CoalescentModel: horizon must be positive");
    CoalescentModel model{measure, n0, t0, v0, horizon,
                          SpeedFunction(measure, t0, v0, t0 + horizon)};
    model.total_rate.assign(std::size_t(n0) + 1, 0.0);
    model.k_cdf.assign(std::size_t(n0) + 1, {});
    model.psi_b.assign(std::size_t(n0) + 1, 0.0);
    model.psi2_b.assign(std::size_t(n0) + 1, 0.0);
    for (int b = 2; b <= n0; ++b) {
      std::vector<double> weights;
      weights.reserve(std::size_t(b - 1));
      CompensatedSum total;
      for (int k = 2; k <= b; ++k) {
        const double wk = std::exp(log_choose(b, k)) * rate_lambda_bk(measure, b, k);
        weights.push_back(wk);
        total += wk;
      }
      model.total_rate[std::size_t(b)] = total.value();
      std::vector<double> cdf(weights.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i] / total.value();
        cdf[i] = acc;
      }
      model.k_cdf[std::size_t(b)] = std::move(cdf);
    }
    for (int b = 1; b <= n0; ++b) {
      model.psi_b[std::size_t(b)] = psi(measure, double(b));
      model.psi2_b[std::size_t(b)] = psi2(measure, b);
    }
    return model;
  }
};

// Embedded jump chain of the block counting process: exponential holding time
// at rate R(b), merge size k chosen proportionally to C(b,k) lambda_{b,k}.
inline CoalescentTrajectory simulate_block_counting(const CoalescentModel& model,
                                                    PhiloxStream& rng) {
  CoalescentTrajectory traj;
  traj.n0 = model.n0;
  traj.t0 = model.t0;
  traj.end_time = model.t0 + model.horizon;
  int n = model.n0;
  double t = model.t0;
  while (n >= 2) {
    const double rate = model.total_rate[std::size_t(n)];
    if (!(rate > 0.0)) break;
    t += rng.exponential(rate);
    if (t > traj.end_time) break;
    const std::size_t ki = rng.pick_from_cdf(model.k_cdf[std::size_t(n)]);
    const int k = int(ki) + 2;
    traj.events.push_back({t, k});
    n -= k - 1;
  }
  return traj;
}

// Convenience overload matching (measure, n0, horizon, seed).
inline CoalescentTrajectory simulate_block_counting(const LambdaMeasure& measure, int n0,
                                                    double horizon, std::uint64_t seed) {
  const double v0 = std::max(double(n0), 2.0);
  CoalescentModel model = CoalescentModel::build(measure, n0, 0.0, v0, horizon);
  PhiloxStream rng(seed, 0);
  return simulate_block_counting(model, rng);
}

// The martingale M built from a trajectory: jumps (k-1)/v_s at merge events,
// drift -int Psi(N_u)/v_u du between events, <M,M> = int Psi2(N_u)/v_u^2 du.
// Every jump is nonnegative by construction (k >= 2, v > 0).
inline MartingalePath coalescent_martingale(const CoalescentTrajectory& traj,
                                            const CoalescentModel& model) {
  MartingalePath mp;
  mp.horizon = traj.end_time;
  CompensatedSum m_acc, qv_acc, pqv_acc;
  double seg_start = traj.t0;
  int n = traj.n0;
  for (const CoalescentEvent& e : traj.events) {
    if (e.time < traj.t0) throw Error("coalescent_martingale: event before t0");
    const double drift = -model.psi_b[std::size_t(n)] * model.speed.int_inv_v(seg_start, e.time);
    const double pqv_inc =
        model.psi2_b[std::size_t(n)] * model.speed.int_inv_v2(seg_start, e.time);
    const double v_s = model.speed.v_at(e.time);
    const double jump = double(e.k - 1) / v_s;
    mp.times.push_back(e.time);
    mp.kinds.push_back(JumpKind::ac_event);
    mp.drift.push_back(drift);
    mp.dm.push_back(jump);
    m_acc += drift;
    m_acc += jump;
    qv_acc += jump * jump;
    pqv_acc += pqv_inc;
    mp.m.push_back(m_acc.value());
    mp.qv.push_back(qv_acc.value());
    mp.pqv.push_back(pqv_acc.value());
    seg_start = e.time;
    n -= e.k - 1;
  }
  const double tail_drift =
      -model.psi_b[std::size_t(n)] * model.speed.int_inv_v(seg_start, traj.end_time);
  const double tail_pqv =
      model.psi2_b[std::size_t(n)] * model.speed.int_inv_v2(seg_start, traj.end_time);
  mp.drift.push_back(tail_drift);
  m_acc += tail_drift;
  pqv_acc += tail_pqv;
  mp.m_final = m_acc.value();
  mp.qv_final = qv_acc.value();
  mp.pqv_final = pqv_acc.value();
  return mp;
}

// M, QV, PQV of a coalescent path at an arbitrary time in [t0, end].
inline double coalescent_m_at(const CoalescentTrajectory& traj, const CoalescentModel& model,
                              const MartingalePath& mp, double t) {
  auto it = std::upper_bound(mp.times.begin(), mp.times.end(), t);
  const std::size_t k = std::size_t(it - mp.times.begin());
  const double base = (k == 0) ? 0.0 : mp.m[k - 1];
  const double seg_start = (k == 0) ? traj.t0 : mp.times[k - 1];
  const int n = traj.n_at(seg_start);
  return base - model.psi_b[std::size_t(n)] * model.speed.int_inv_v(seg_start, t);
}

inline double coalescent_pqv_at(const CoalescentTrajectory& traj, const CoalescentModel& model,
                                const MartingalePath& mp, double t) {
  auto it = std::upper_bound(mp.times.begin(), mp.times.end(), t);
  const std::size_t k = std::size_t(it - mp.times.begin());
  const double base = (k == 0) ? 0.0 : mp.pqv[k - 1];
  const double seg_start = (k == 0) ? traj.t0 : mp.times[k - 1];
  const int n = traj.n_at(seg_start);
  return base + model.psi2_b[std::size_t(n)] * model.speed.int_inv_v2(seg_start, t);
}

}  // namespace pena
