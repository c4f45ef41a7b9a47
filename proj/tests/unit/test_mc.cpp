#include <doctest.h>

#include <cmath>
#include <vector>

#include "pena/mc.hpp"
#include "pena/oracle.hpp"

using namespace pena;

namespace {

PPModel sure_atom_rademacher(int d) {
  std::vector<double> times, masses;
  std::vector<MarkLaw> laws;
  for (int i = 1; i <= d; ++i) {
    times.push_back(double(i));
    masses.push_back(1.0);
    laws.push_back(MarkLaw::rademacher());
  }
  return atom_grid_model(times, masses, laws);
}

}  // namespace

TEST_CASE("wilson interval sanity") {
  const auto ci = wilson_interval(50, 100);
  CHECK(ci.lo < 0.5);
  CHECK(ci.hi > 0.5);
  CHECK(ci.lo > 0.4);
  CHECK(ci.hi < 0.6);
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi < 0.05);
}

TEST_CASE("estimate_tail on the single sure-atom rademacher model") {
  const PPJumpModel model(sure_atom_rademacher(1), 1.0);
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 314;
  std::vector<TailCheck> checks = {
      {TailEvent::b1(1.0, 1.0), {{"pena_gauss", pena_gauss_bound(1.0, 1.0)}}},
      {TailEvent::b1(50.0, 1.0), {{"pena_gauss", pena_gauss_bound(50.0, 1.0)}}}};
  const auto reports = estimate_tail(model, checks, opts);
  REQUIRE(reports.size() == 2);
  // exact probability is 0.5
  CHECK(std::fabs(reports[0].p_hat - 0.5) < 3.0 * reports[0].se);
  CHECK(reports[0].pass);
  // unreachable level: zero hits, trivially certified
  CHECK(reports[1].hits == 0);
  CHECK(reports[1].pass);
}

TEST_CASE("estimate_tail rejects models with nondecreasing drift") {
  PPModel model = compound_poisson_model(1.0, MarkLaw::constant(1.0), true);
  model.weight.drift_monotone = DriftMonotone::nondecreasing_between_jumps;
  const PPJumpModel jump_model(model, 2.0);
  McOptions opts;
  opts.n_paths = 10;
  std::vector<TailCheck> checks = {{TailEvent::b1(1.0, 1.0), {{"pena_gauss", 0.6}}}};
  CHECK_THROWS_AS(estimate_tail(jump_model, checks, opts), Error);
}

TEST_CASE("estimates are identical across worker counts") {
  const PPJumpModel model(compound_poisson_model(1.0, MarkLaw::rademacher()), 5.0);
  std::vector<TailCheck> checks = {
      {TailEvent::b1(1.0, 2.0), {{"pena_poisson", pena_poisson_bound(1.0, 2.0)}}}};
  McOptions opts1;
  opts1.n_paths = 20000;
  opts1.seed = 2025;
  opts1.workers = 1;
  McOptions opts4 = opts1;
  opts4.workers = 4;
  opts4.chunk_size = 512;  // different scheduling layout entirely
  const auto r1 = estimate_tail(model, checks, opts1);
  const auto r4 = estimate_tail(model, checks, opts4);
  CHECK(r1[0].hits == r4[0].hits);
  CHECK(r1[0].p_hat == r4[0].p_hat);
}

TEST_CASE("p_hat is nondecreasing in the horizon for a fixed seed set") {
  const PPModel cp = compound_poisson_model(1.0, MarkLaw::rademacher());
  std::vector<TailCheck> checks = {{TailEvent::b1(2.0, 4.0), {{"b", 1.0}}}};
  McOptions opts;
  opts.n_paths = 5000;
  opts.seed = 99;
  double prev = -1.0;
  for (double horizon : {2.0, 5.0, 10.0}) {
    const PPJumpModel model(cp, horizon);
    const auto rep = estimate_tail(model, checks, opts);
    REQUIRE(rep[0].p_hat >= prev);
    prev = rep[0].p_hat;
  }
}

TEST_CASE("supermartingale check: lambda = 0 gives mean exactly 1") {
  const PPModel cp = compound_poisson_model(1.0, MarkLaw::rademacher());
  McOptions opts;
  opts.n_paths = 500;
  opts.seed = 4;
  const auto rep = check_supermartingale(cp, 0.0, PenaltyFamily::gaussian(), 1.0, opts);
  CHECK(rep.mean == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.pass);
}

TEST_CASE("supermartingale check passes on the reference models") {
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 1234;

  // gaussian family, rademacher marks
  const PPModel cp = compound_poisson_model(1.0, MarkLaw::rademacher());
  const auto g = check_supermartingale(cp, 0.5, PenaltyFamily::gaussian(), 1.0, opts);
  CHECK(g.pass);
  CHECK(g.mean <= 1.0 + 3.0 * g.se);

  // poissonian family, jumps bounded below by -1
  const PPModel tp = compound_poisson_model(1.0, MarkLaw::two_point(0.5, -1.0, 1.0));
  const auto p = check_supermartingale(tp, 0.5, PenaltyFamily::poissonian(), 1.0, opts);
  CHECK(p.pass);
}

TEST_CASE("supermartingale check raises HypothesisError when S~ can be positive") {
  const PPModel bad = compound_poisson_model(1.0, MarkLaw::two_point(1.0 / 3.0, -2.0, 1.0));
  McOptions opts;
  opts.n_paths = 1000;
  opts.seed = 5;
  CHECK_THROWS_AS(check_supermartingale(bad, 0.2, PenaltyFamily::gaussian(), 1.0, opts),
                  HypothesisError);
}

TEST_CASE("martingale ratio: lambda = 0 gives mean exactly 1") {
  const PPModel cp = compound_poisson_model(1.0, MarkLaw::rademacher());
  McOptions opts;
  opts.n_paths = 500;
  opts.seed = 6;
  const auto rep = check_martingale_ratio(cp, 0.0, PenaltyFamily::gaussian(), 1.0, opts);
  CHECK(rep.mean == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("martingale ratio passes for rademacher compound Poisson") {
  const PPModel cp = compound_poisson_model(1.0, MarkLaw::rademacher());
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 7;
  const auto rep = check_martingale_ratio(cp, 0.3, PenaltyFamily::gaussian(), 1.0, opts);
  CHECK(rep.pass);
  CHECK(std::fabs(rep.mean - 1.0) <= 3.0 * rep.se);
}

TEST_CASE("the atom-term sign discriminator: cc passes, paper-as-written fails") {
  std::vector<double> times = {1.0};
  std::vector<double> masses = {0.5};
  std::vector<MarkLaw> laws = {MarkLaw::constant(2.0)};
  const PPModel model = atom_grid_model(times, masses, laws);
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 8;

  const auto cc = check_martingale_ratio(model, 0.4, PenaltyFamily::gaussian(), 1.0, opts,
                                         AtomSignConvention::compensator_consistent);
  CHECK(cc.pass);

  const auto pw = check_martingale_ratio(model, 0.4, PenaltyFamily::gaussian(), 1.0, opts,
                                         AtomSignConvention::paper_as_written);
  CHECK_FALSE(pw.pass);
  CHECK(std::fabs(pw.mean - 1.0) > 5.0 * pw.se);
}

TEST_CASE("martingale sanity probes pass for an atom-grid model") {
  std::vector<double> times = {1.0, 2.0, 3.0};
  std::vector<double> masses = {1.0, 0.5, 0.8};
  std::vector<MarkLaw> laws = {MarkLaw::rademacher(), MarkLaw::constant(2.0),
                               MarkLaw::two_point(1.0 / 3.0, -2.0, 1.0)};
  const PPJumpModel model(atom_grid_model(times, masses, laws), 3.5);
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 9;
  const double probes[3] = {1.5, 2.5, 3.5};
  const auto reports = martingale_sanity(model, probes, opts);
  REQUIRE(reports.size() == 3);
  for (const auto& rep : reports) {
    CHECK(rep.pass_m);
    CHECK(rep.pass_qv);
  }
}

TEST_CASE("heavy-tail diagnostic fires when the top 0.1% dominates") {
  McOptions opts;
  opts.seed = 0;

  mc_detail::MeanAccumulator flat;
  flat.values.assign(10000, 1.0);
  CHECK_FALSE(flat.finish(opts).heavy_tail_warning);

  mc_detail::MeanAccumulator spiked;
  spiked.values.assign(10000, 1.0);
  for (int i = 0; i < 10; ++i) spiked.values[i] = 1.0e6;
  CHECK(spiked.finish(opts).heavy_tail_warning);
}

TEST_CASE("compare_bounds rows match the closed forms") {
  const double xs[2] = {1e-6, 1.0};
  const double v2s[1] = {1.0};
  const auto rows = compare_bounds(xs, v2s, 1.0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pena_poisson == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rows[0].pena_gauss == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rows[1].pena_poisson == doctest::Approx(0.7357588823428847).epsilon(1e-12));
  CHECK(rows[1].pena_gauss == doctest::Approx(0.6065306597126334).epsilon(1e-12));
  CHECK(rows[1].freedman == doctest::Approx(0.7788007830714049).epsilon(1e-12));
  // nonincreasing in x
  CHECK(rows[1].pena_poisson <= rows[0].pena_poisson);
}
