#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pena/bounds.hpp"
#include "pena/coalescent.hpp"
#include "pena/errors.hpp"
#include "pena/expo.hpp"
#include "pena/ksum.hpp"
#include "pena/models.hpp"
#include "pena/pp_core.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

// Stopped tail events certified against the closed-form bounds.
//
// b1:            M_t >= x and QV_t <= v2 for some t in (0, horizon]
// b2 (vs_pqv):   M_t >= (alpha + beta QV_t) x and QV_t >= PQV_t + v2
// b2 (vs_level): M_t >= (alpha + beta QV_t) x and QV_t >= v2
struct TailEvent {
  enum class Kind { b1, b2 };
  enum class B2Constraint { vs_pqv, vs_level };

  Kind kind = Kind::b1;
  double x = 1.0;
  double v2 = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  B2Constraint constraint = B2Constraint::vs_pqv;

  static TailEvent b1(double x, double v2) { return {Kind::b1, x, v2, 0.0, 1.0, {}}; }
  static TailEvent b2(double x, double alpha, double beta, double v2,
                      B2Constraint constraint) {
    return {Kind::b2, x, v2, alpha, beta, constraint};
  }

  std::string describe() const {
    if (kind == Kind::b1)
      return "B1{x=" + std::to_string(x) + ", v2=" + std::to_string(v2) + "}";
    return std::string("B2{") + (constraint == B2Constraint::vs_pqv ? "vs_pqv" : "vs_level") +
           ", x=" + std::to_string(x) + ", alpha=" + std::to_string(alpha) +
           ", beta=" + std::to_string(beta) + ", v2=" + std::to_string(v2) + "}";
  }

  bool hit(double m, double qv, double pqv) const {
    if (kind == Kind::b1) return m >= x && qv <= v2;
    const bool level = (constraint == B2Constraint::vs_level) ? (qv >= v2) : (qv >= pqv + v2);
    return level && m >= (alpha + beta * qv) * x;
  }
};

struct NamedBound {
  std::string name;
  double value;
};

struct TailCheck {
  TailEvent event;
  std::vector<NamedBound> bounds;
};

struct MonteCarloReport {
  std::string event;
  std::uint64_t n_paths = 0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;  // 95% Wilson interval
  double ci_hi = 0.0;
  std::string bound_name;
  double bound_value = 1.0;
  double slack = 1.96;
  bool pass = false;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

struct WilsonInterval {
  double lo, hi;
};

inline WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 1.96) {
  if (n == 0) return {0.0, 1.0};
  const double nn = double(n);
  const double p = double(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct McOptions {
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 0;
  int workers = 0;       // 0 = hardware concurrency
  double slack = 1.96;   // verdict: p_hat - slack*SE <= bound
  std::size_t chunk_size = 2048;
  QuadratureOptions quad;
};

// Post-jump states of one simulated path; the exact entry points of the tail
// events for models whose drift between jumps is nonincreasing or zero.
struct JumpScan {
  std::vector<double> t, m, qv, pqv;
  double min_dm = 0.0;
  std::vector<double> probe_m;
  std::vector<double> probe_qv_minus_pqv;

  void clear() {
    t.clear();
    m.clear();
    qv.clear();
    pqv.clear();
    min_dm = 0.0;
    probe_m.clear();
    probe_qv_minus_pqv.clear();
  }
};

// Anything the Monte Carlo engine can drive: point-process models and the
// coalescent both reduce to jump scans.
class IJumpModel {
 public:
  virtual ~IJumpModel() = default;
  virtual void sample(std::uint64_t seed, std::uint64_t path_index,
                      std::span<const double> probe_times, JumpScan& out) const = 0;
  virtual DriftMonotone drift_monotone() const = 0;
  virtual double horizon() const = 0;
};

class PPJumpModel final : public IJumpModel {
 public:
  PPJumpModel(PPModel model, double horizon, BuildOptions build = {})
      : model_(std::move(model)), horizon_(horizon), build_(build) {}

  const PPModel& model() const { return model_; }

  void sample(std::uint64_t seed, std::uint64_t path_index, std::span<const double> probe_times,
              JumpScan& out) const override {
    PhiloxStream rng(seed, path_index);
    const MarkedPointPath path = sample_path(model_.spec, horizon_, rng);
    const MartingalePath mp = build_martingale(model_.weight, path, model_.spec, build_);
    out.clear();
    out.t = mp.times;
    out.m = mp.m;
    out.qv = mp.qv;
    out.pqv = mp.pqv;
    for (double dm : mp.dm) out.min_dm = std::min(out.min_dm, dm);
    for (double tp : probe_times) {
      out.probe_m.push_back(m_at(mp, model_.spec, model_.weight, tp, path, build_.quad));
      out.probe_qv_minus_pqv.push_back(
          quadratic_variation(mp, tp) -
          predictable_qv(mp, model_.spec, model_.weight, tp, path, build_.quad));
    }
  }

  DriftMonotone drift_monotone() const override { return model_.weight.drift_monotone; }
  double horizon() const override { return horizon_; }

 private:
  PPModel model_;
  double horizon_;
  BuildOptions build_;
};

class CoalescentJumpModel final : public IJumpModel {
 public:
  explicit CoalescentJumpModel(const CoalescentModel& model) : model_(&model) {}

  void sample(std::uint64_t seed, std::uint64_t path_index, std::span<const double> probe_times,
              JumpScan& out) const override {
    PhiloxStream rng(seed, path_index);
    const CoalescentTrajectory traj = simulate_block_counting(*model_, rng);
    const MartingalePath mp = coalescent_martingale(traj, *model_);
    out.clear();
    out.t = mp.times;
    out.m = mp.m;
    out.qv = mp.qv;
    out.pqv = mp.pqv;
    for (double dm : mp.dm) out.min_dm = std::min(out.min_dm, dm);
    for (double tp : probe_times) {
      out.probe_m.push_back(coalescent_m_at(traj, *model_, mp, tp));
      out.probe_qv_minus_pqv.push_back(quadratic_variation(mp, tp) -
                                       coalescent_pqv_at(traj, *model_, mp, tp));
    }
  }

  DriftMonotone drift_monotone() const override {
    return DriftMonotone::nonincreasing_between_jumps;
  }
  double horizon() const override { return model_->horizon; }

 private:
  const CoalescentModel* model_;
};

namespace mc_detail {

// Runs fn(path_index) over [0, n) on a fixed chunk grid. Chunk results are
// merged in index order afterwards, so totals do not depend on the number of
// workers or their scheduling.
template <class ChunkState, class PathFn, class MergeFn>
void run_chunked(std::uint64_t n, const McOptions& opts, PathFn&& per_path, MergeFn&& merge) {
  const std::uint64_t chunk = std::max<std::uint64_t>(1, opts.chunk_size);
  const std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  int workers = opts.workers > 0 ? opts.workers : int(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = int(std::min<std::uint64_t>(std::uint64_t(workers), std::max<std::uint64_t>(n_chunks, 1)));

  std::vector<ChunkState> states(n_chunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    JumpScan scan;
    while (true) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      const std::uint64_t lo = c * chunk;
      const std::uint64_t hi = std::min(n, lo + chunk);
      try {
        for (std::uint64_t i = lo; i < hi; ++i) per_path(i, scan, states[c]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_chunks);
        break;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  for (std::uint64_t c = 0; c < n_chunks; ++c) merge(states[c]);
}

}  // namespace mc_detail

// Estimates the probability of each tail event by scanning post-jump states,
// and certifies it against each supplied bound. First entry into the events
// happens at jump times for nonincreasing/constant drift, which is asserted.
inline std::vector<MonteCarloReport> estimate_tail(const IJumpModel& model,
                                                   std::span<const TailCheck> checks,
                                                   const McOptions& opts) {
  if (model.drift_monotone() != DriftMonotone::constant &&
      model.drift_monotone() != DriftMonotone::nonincreasing_between_jumps)
    throw Error("estimate_tail: crossing detection unsound for this model (drift may increase "
                "between jumps)");
  const auto start = std::chrono::steady_clock::now();

  struct ChunkState {
    std::vector<std::uint64_t> hits;
  };
  std::vector<std::uint64_t> hits(checks.size(), 0);
  mc_detail::run_chunked<ChunkState>(
      opts.n_paths, opts,
      [&](std::uint64_t i, JumpScan& scan, ChunkState& state) {
        if (state.hits.empty()) state.hits.assign(checks.size(), 0);
        model.sample(opts.seed, i, {}, scan);
        for (std::size_t e = 0; e < checks.size(); ++e) {
          const TailEvent& ev = checks[e].event;
          for (std::size_t k = 0; k < scan.t.size(); ++k) {
            if (ev.hit(scan.m[k], scan.qv[k], scan.pqv[k])) {
              ++state.hits[e];
              break;
            }
          }
        }
      },
      [&](const ChunkState& state) {
        for (std::size_t e = 0; e < state.hits.size(); ++e) hits[e] += state.hits[e];
      });

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
  std::vector<MonteCarloReport> reports;
  for (std::size_t e = 0; e < checks.size(); ++e) {
    const double p = double(hits[e]) / double(opts.n_paths);
    const double se = std::sqrt(p * (1.0 - p) / double(opts.n_paths));
    const auto ci = wilson_interval(hits[e], opts.n_paths);
    for (const NamedBound& bound : checks[e].bounds) {
      MonteCarloReport rep;
      rep.event = checks[e].event.describe();
      rep.n_paths = opts.n_paths;
      rep.hits = hits[e];
      rep.p_hat = p;
      rep.se = se;
      rep.ci_lo = ci.lo;
      rep.ci_hi = ci.hi;
      rep.bound_name = bound.name;
      rep.bound_value = bound.value;
      rep.slack = opts.slack;
      rep.pass = (p - opts.slack * se) <= bound.value;
      rep.seed = opts.seed;
      rep.wall_seconds = wall;
      reports.push_back(std::move(rep));
    }
  }
  return reports;
}

struct MeanReport {
  std::string quantity;
  std::uint64_t n_paths = 0;
  double mean = 0.0;
  double se = 0.0;
  double t_probe = 0.0;
  double lambda = 0.0;
  bool pass = false;
  bool heavy_tail_warning = false;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

namespace mc_detail {

struct MeanAccumulator {
  std::vector<double> values;

  MeanReport finish(const McOptions& opts) const {
    CompensatedSum sum;
    for (double v : values) sum += v;
    const double mean = sum.value() / double(values.size());
    CompensatedSum sq;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq.value() / double(values.size() - 1));
    MeanReport rep;
    rep.n_paths = values.size();
    rep.mean = mean;
    rep.se = sd / std::sqrt(double(values.size()));
    rep.seed = opts.seed;
    // Heavy-tail diagnostic: top 0.1% of samples carrying > 20% of the mass.
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t top = std::max<std::size_t>(1, sorted.size() / 1000);
    CompensatedSum top_sum;
    for (std::size_t i = sorted.size() - top; i < sorted.size(); ++i) top_sum += sorted[i];
    if (sum.value() > 0.0 && top_sum.value() > 0.2 * sum.value()) rep.heavy_tail_warning = true;
    return rep;
  }
};

template <class PathValue>
MeanReport sample_mean(std::uint64_t n, const McOptions& opts, PathValue&& value_of_path) {
  MeanAccumulator acc;
  acc.values.assign(n, 0.0);
  struct Empty {};
  run_chunked<Empty>(
      n, opts,
      [&](std::uint64_t i, JumpScan&, Empty&) { acc.values[i] = value_of_path(i); },
      [](const Empty&) {});
  return acc.finish(opts);
}

}  // namespace mc_detail

// Sample mean of U_t = exp(X_t - S(lambda)_t) at t_probe; the supermartingale
// test passes iff mean <= 1 + 3 SE. Checks the relevant hypothesis first:
// dM >= -1 for the poissonian family, S~ <= 0 (sampled) for the gaussian one.
inline MeanReport check_supermartingale(const PPModel& model, double lambda,
                                        const PenaltyFamily& family, double t_probe,
                                        const McOptions& opts,
                                        AtomSignConvention conv =
                                            AtomSignConvention::compensator_consistent) {
  const auto start = std::chrono::steady_clock::now();
  PPModel local = model;
  if (family.kind == PenaltyKind::poissonian) {
    // the dM >= -1 hypothesis; enforce the floor during construction
    if (!local.weight.jump_floor || *local.weight.jump_floor < -1.0)
      local.weight.jump_floor = -1.0;
  } else if (family.kind == PenaltyKind::gaussian) {
    const double grid_l[1] = {lambda};
    const double grid_t[1] = {t_probe};
    const auto sn = check_s_nonpositive(local.spec, local.weight, grid_l, grid_t, 64,
                                        opts.seed ^ 0x9E3779B97F4A7C15ull);
    if (!sn.pass)
      throw HypothesisError("s_nonpositive",
                            "S~(lambda)_t reached " + std::to_string(sn.max_value) +
                                " at lambda=" + std::to_string(sn.witness_lambda) +
                                ", t=" + std::to_string(sn.witness_t));
  }

  MeanReport rep;
  try {
    rep = mc_detail::sample_mean(opts.n_paths, opts, [&](std::uint64_t i) {
      PhiloxStream rng(opts.seed, i);
      const MarkedPointPath path = sample_path(local.spec, t_probe, rng);
      const MartingalePath mp = build_martingale(local.weight, path, local.spec, {opts.quad});
      const ExponentPath ep = exponent_compensator(local.spec, local.weight, mp, path, lambda,
                                                   family, conv, opts.quad);
      return std::exp(ep.x_final - ep.s_final);
    });
  } catch (const JumpFloorViolationError& e) {
    throw HypothesisError("jump_floor", e.what());
  }
  rep.quantity = "E[U]";
  rep.t_probe = t_probe;
  rep.lambda = lambda;
  rep.pass = rep.mean <= 1.0 + 3.0 * rep.se;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// Sample mean of R_t = exp(X_t)/E(S)_t at t_probe; the local-martingale test
// passes iff |mean - 1| <= 3 SE. This is the experiment that discriminates
// the two atom-term sign conventions on models with atoms of mass < 1.
inline MeanReport check_martingale_ratio(const PPModel& model, double lambda,
                                         const PenaltyFamily& family, double t_probe,
                                         const McOptions& opts,
                                         AtomSignConvention conv =
                                             AtomSignConvention::compensator_consistent) {
  const auto start = std::chrono::steady_clock::now();
  MeanReport rep = mc_detail::sample_mean(opts.n_paths, opts, [&](std::uint64_t i) {
    PhiloxStream rng(opts.seed, i);
    const MarkedPointPath path = sample_path(model.spec, t_probe, rng);
    const MartingalePath mp = build_martingale(model.weight, path, model.spec, {opts.quad});
    ExponentPath ep = exponent_compensator(model.spec, model.weight, mp, path, lambda, family,
                                           conv, opts.quad);
    doleans(ep);
    return std::exp(ep.x_final - ep.log_dd_final);
  });
  rep.quantity = "E[exp(X)/E(S)]";
  rep.t_probe = t_probe;
  rep.lambda = lambda;
  rep.pass = std::fabs(rep.mean - 1.0) <= 3.0 * rep.se;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct ProbeReport {
  double t = 0.0;
  double mean_m = 0.0;
  double se_m = 0.0;
  bool pass_m = false;
  double mean_qv_minus_pqv = 0.0;
  double se_qv_minus_pqv = 0.0;
  bool pass_qv = false;
};

// Martingale sanity: E[M_t] ~ 0 and E[QV_t - PQV_t] ~ 0 at each probe time,
// within 3 standard errors.
inline std::vector<ProbeReport> martingale_sanity(const IJumpModel& model,
                                                  std::span<const double> probe_times,
                                                  const McOptions& opts) {
  const std::size_t np = probe_times.size();
  std::vector<double> m_values(opts.n_paths * np);
  std::vector<double> d_values(opts.n_paths * np);
  struct Empty {};
  mc_detail::run_chunked<Empty>(
      opts.n_paths, opts,
      [&](std::uint64_t i, JumpScan& scan, Empty&) {
        model.sample(opts.seed, i, probe_times, scan);
        for (std::size_t p = 0; p < np; ++p) {
          m_values[i * np + p] = scan.probe_m[p];
          d_values[i * np + p] = scan.probe_qv_minus_pqv[p];
        }
      },
      [](const Empty&) {});

  std::vector<ProbeReport> reports;
  for (std::size_t p = 0; p < np; ++p) {
    CompensatedSum sm, sd2, sdm, sdd;
    for (std::uint64_t i = 0; i < opts.n_paths; ++i) {
      sm += m_values[i * np + p];
      sdm += d_values[i * np + p];
    }
    const double mean_m = sm.value() / double(opts.n_paths);
    const double mean_d = sdm.value() / double(opts.n_paths);
    for (std::uint64_t i = 0; i < opts.n_paths; ++i) {
      sd2 += (m_values[i * np + p] - mean_m) * (m_values[i * np + p] - mean_m);
      sdd += (d_values[i * np + p] - mean_d) * (d_values[i * np + p] - mean_d);
    }
    ProbeReport rep;
    rep.t = probe_times[p];
    rep.mean_m = mean_m;
    rep.se_m = std::sqrt(sd2.value() / double(opts.n_paths - 1) / double(opts.n_paths));
    rep.pass_m = std::fabs(mean_m) <= 3.0 * rep.se_m;
    rep.mean_qv_minus_pqv = mean_d;
    rep.se_qv_minus_pqv = std::sqrt(sdd.value() / double(opts.n_paths - 1) / double(opts.n_paths));
    rep.pass_qv = std::fabs(mean_d) <= 3.0 * rep.se_qv_minus_pqv;
    reports.push_back(rep);
  }
  return reports;
}

struct BoundTableRow {
  double x;
  double v2;
  double pena_poisson;
  double pena_gauss;
  double freedman;
};

// Wide juxtaposition of the closed-form bounds over a grid.
inline std::vector<BoundTableRow> compare_bounds(std::span<const double> xs,
                                                 std::span<const double> v2s, double c) {
  std::vector<BoundTableRow> rows;
  for (double x : xs)
    for (double v2 : v2s)
      rows.push_back({x, v2, pena_poisson_bound(x, v2), pena_gauss_bound(x, v2),
                      freedman_bound(x, v2, c)});
  return rows;
}

}  // namespace pena
