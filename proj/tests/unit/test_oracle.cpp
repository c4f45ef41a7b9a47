#include <doctest.h>

#include <cmath>
#include <vector>

#include "pena/mc.hpp"
#include "pena/oracle.hpp"

using namespace pena;

namespace {

DiscreteModel sure_atoms(int d) {
  DiscreteModel model;
  for (int i = 1; i <= d; ++i) model.atoms.push_back({double(i), 1.0, MarkLaw::rademacher()});
  return model;
}

DiscreteModel half_mass_constant() {
  DiscreteModel model;
  model.atoms.push_back({1.0, 0.5, MarkLaw::constant(2.0)});
  return model;
}

}  // namespace

TEST_CASE("enumerate: path counts, probabilities, terminal values") {
  // 1 sure atom: 2 paths of probability 1/2
  {
    std::vector<double> probs;
    enumerate(sure_atoms(1), [&](double p, const MarkedPointPath&, const MartingalePath& mp) {
      probs.push_back(p);
      REQUIRE(std::fabs(std::fabs(mp.m_final) - 1.0) < 1e-14);
    });
    REQUIRE(probs.size() == 2);
    CHECK(probs[0] == doctest::Approx(0.5));
    CHECK(probs[1] == doctest::Approx(0.5));
  }

  // 2 sure atoms: 4 paths with M in {-2, 0, 0, 2}
  {
    std::vector<double> finals;
    enumerate(sure_atoms(2), [&](double p, const MarkedPointPath&, const MartingalePath& mp) {
      CHECK(p == doctest::Approx(0.25));
      finals.push_back(mp.m_final);
    });
    std::sort(finals.begin(), finals.end());
    REQUIRE(finals.size() == 4);
    CHECK(finals[0] == doctest::Approx(-2.0));
    CHECK(finals[1] == doctest::Approx(0.0));
    CHECK(finals[2] == doctest::Approx(0.0));
    CHECK(finals[3] == doctest::Approx(2.0));
  }

  // mass 0.5, constant mark 2: branches dM = +1 (event) and -1 (silent)
  {
    std::vector<std::pair<double, double>> outcomes;  // (prob, dM)
    enumerate(half_mass_constant(),
              [&](double p, const MarkedPointPath&, const MartingalePath& mp) {
                REQUIRE(mp.n_jumps() == 1);
                outcomes.emplace_back(p, mp.dm[0]);
              });
    REQUIRE(outcomes.size() == 2);
    CHECK(outcomes[0].first == doctest::Approx(0.5));
    CHECK(outcomes[0].second == doctest::Approx(-1.0));
    CHECK(outcomes[1].first == doctest::Approx(0.5));
    CHECK(outcomes[1].second == doctest::Approx(1.0));
  }
}

TEST_CASE("enumerate rejects budgets and non-finite laws") {
  DiscreteModel big = sure_atoms(3);
  big.path_budget = 4;
  CHECK_THROWS_AS(enumerate(big, [](double, const MarkedPointPath&, const MartingalePath&) {}),
                  PathBudgetError);

  DiscreteModel continuous;
  continuous.atoms.push_back({1.0, 1.0, MarkLaw::uniform(0.0, 1.0)});
  CHECK_THROWS_AS(
      enumerate(continuous, [](double, const MarkedPointPath&, const MartingalePath&) {}),
      Error);
}

TEST_CASE("exact_tail worked examples with bound comparisons") {
  // single sure atom: P(M >= 1, QV <= 1) = 1/2 <= exp(-1/2)
  const double p1 = exact_tail(sure_atoms(1), TailEvent::b1(1.0, 1.0));
  CHECK(p1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p1 <= pena_gauss_bound(1.0, 1.0));

  // three sure atoms: only the +++ path reaches 3 with QV <= 3
  const double p3 = exact_tail(sure_atoms(3), TailEvent::b1(3.0, 3.0));
  CHECK(p3 == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(p3 <= pena_gauss_bound(3.0, 3.0));
  CHECK(p3 <= pena_poisson_bound(3.0, 3.0));

  // unattainable level
  CHECK(exact_tail(sure_atoms(2), TailEvent::b1(5.0, 10.0)) == 0.0);
}

TEST_CASE("exact_mean_ratio: lambda = 0 trivial, discriminator, and E[U] <= 1") {
  const PenaltyFamily gauss = PenaltyFamily::gaussian();
  const PenaltyFamily pois = PenaltyFamily::poissonian();

  const auto trivial = exact_mean_ratio(half_mass_constant(), 0.0, gauss,
                                        AtomSignConvention::compensator_consistent);
  CHECK(trivial.ratio_mean == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trivial.u_mean == doctest::Approx(1.0).epsilon(1e-14));

  // the discriminating example: mass 0.5, mark 2, lambda 0.4 gaussian
  const auto cc = exact_mean_ratio(half_mass_constant(), 0.4, gauss,
                                   AtomSignConvention::compensator_consistent);
  CHECK(std::fabs(cc.ratio_mean - 1.0) <= 1e-12);
  CHECK(cc.u_mean <= 1.0 + 1e-12);
  CHECK(std::fabs(cc.total_prob - 1.0) <= 1e-14);

  const auto pw = exact_mean_ratio(half_mass_constant(), 0.4, gauss,
                                   AtomSignConvention::paper_as_written);
  CHECK(std::fabs(pw.ratio_mean - 1.0) > 1e-3);

  // d = 2 sure atoms, poissonian lambda = 0.5
  const auto pois_d2 =
      exact_mean_ratio(sure_atoms(2), 0.5, pois, AtomSignConvention::compensator_consistent);
  CHECK(std::fabs(pois_d2.ratio_mean - 1.0) <= 1e-12);
  CHECK(pois_d2.u_mean <= 1.0 + 1e-12);
}

TEST_CASE("ratio mean stays 1 under cc even with masses < 1 and nonzero W_hat") {
  DiscreteModel model;
  model.atoms.push_back({0.5, 0.3, MarkLaw::two_point(0.25, -1.0, 2.0)});
  model.atoms.push_back({1.0, 0.8, MarkLaw::constant(1.5)});
  model.atoms.push_back({2.0, 1.0, MarkLaw::rademacher()});
  for (double lambda : {0.2, 0.4, 0.8}) {
    const auto g = exact_mean_ratio(model, lambda, PenaltyFamily::gaussian(),
                                    AtomSignConvention::compensator_consistent);
    REQUIRE(std::fabs(g.ratio_mean - 1.0) <= 1e-12);
    REQUIRE(g.u_mean <= 1.0 + 1e-12);
  }
  for (double lambda : {0.3, 0.6}) {
    const auto p = exact_mean_ratio(model, lambda, PenaltyFamily::poissonian(),
                                    AtomSignConvention::compensator_consistent);
    REQUIRE(std::fabs(p.ratio_mean - 1.0) <= 1e-12);
  }
}

TEST_CASE("custom penalties keep the ratio a martingale regardless of sign") {
  DiscreteModel model;
  model.atoms.push_back({0.5, 0.6, MarkLaw::two_point(0.25, -1.0, 2.0)});
  model.atoms.push_back({1.5, 1.0, MarkLaw::rademacher()});
  const PenaltyFamily pos = PenaltyFamily::custom([](double) { return 0.3; }, +1);
  const PenaltyFamily neg = PenaltyFamily::custom([](double) { return -0.2; }, -1);
  for (const auto* family : {&pos, &neg}) {
    const auto r = exact_mean_ratio(model, 0.5, *family,
                                    AtomSignConvention::compensator_consistent);
    REQUIRE(std::fabs(r.ratio_mean - 1.0) <= 1e-12);
  }
  // a mis-declared sign is caught at evaluation
  const PenaltyFamily lying = PenaltyFamily::custom([](double) { return -0.2; }, +1);
  CHECK_THROWS_AS(
      exact_mean_ratio(model, 0.5, lying, AtomSignConvention::compensator_consistent), Error);
}

TEST_CASE("monte carlo estimate converges to the exact tail") {
  const DiscreteModel model = half_mass_constant();
  const double exact = exact_tail(model, TailEvent::b1(1.0, 1.0));
  CHECK(exact == doctest::Approx(0.5).epsilon(1e-14));

  PPModel pp;
  pp.spec = model.spec();
  pp.weight = model.weight;
  const PPJumpModel jump_model(pp, model.horizon());
  McOptions opts;
  opts.n_paths = 20000;
  opts.seed = 606;
  std::vector<TailCheck> checks = {{TailEvent::b1(1.0, 1.0), {{"exact", exact}}}};
  const auto rep = estimate_tail(jump_model, checks, opts);
  CHECK(std::fabs(rep[0].p_hat - exact) <= 3.0 * rep[0].se);
}

TEST_CASE("exact tails never exceed the applicable bounds across a small suite") {
  const std::vector<DiscreteModel> suite = {sure_atoms(1), sure_atoms(2), sure_atoms(3),
                                            half_mass_constant()};
  const std::vector<std::pair<double, double>> grid = {{0.5, 0.5}, {1.0, 1.0}, {2.0, 2.0},
                                                       {1.0, 3.0}};
  for (const auto& model : suite) {
    for (const auto& [x, v2] : grid) {
      const double p = exact_tail(model, TailEvent::b1(x, v2));
      REQUIRE(p <= pena_poisson_bound(x, v2) + 1e-15);
      REQUIRE(p <= pena_gauss_bound(x, v2) + 1e-15);
    }
  }
}
