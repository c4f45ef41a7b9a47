#include <doctest.h>

#include <cmath>
#include <vector>

#include "pena/models.hpp"
#include "pena/pp_core.hpp"
#include "pena/stoch_int.hpp"

using namespace pena;

namespace {

CompensatorSpec atom_spec(double time, double mass, MarkLaw law) {
  CompensatorSpec spec;
  spec.drift_sign_hint = DriftSignHint::zero_drift;
  spec.atoms.push_back({time, mass, std::move(law)});
  return spec;
}

}  // namespace

TEST_CASE("hat_w: zero off atoms, symmetric laws cancel, direct integral otherwise") {
  const WeightSpec w = WeightSpec::identity();

  const CompensatorSpec sym = atom_spec(1.0, 1.0, MarkLaw::rademacher());
  CHECK(hat_w(sym, w, 0.5) == 0.0);
  CHECK(hat_w(sym, w, 1.0) == doctest::Approx(0.0));

  const CompensatorSpec half = atom_spec(1.0, 0.5, MarkLaw::constant(2.0));
  CHECK(hat_w(half, w, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("compound Poisson with unit marks: M_t = N_t - kappa t") {
  // marks identically 1 (nonzero mean, so the drift must be integrated)
  CompensatorSpec spec;
  spec.ac = AbsContSpec::homogeneous(1.0, MarkLaw::constant(1.0));
  const WeightSpec w = WeightSpec::identity();

  MarkedPointPath path;
  path.horizon = 2.0;
  path.events = {{0.5, 1.0}, {1.3, 1.0}};

  const MartingalePath mp = build_martingale(w, path, spec);
  CHECK(mp.m_final == doctest::Approx(0.0).epsilon(1e-10));  // 2 events - drift 2
  CHECK(mp.qv_final == doctest::Approx(2.0));
  CHECK(mp.pqv_final == doctest::Approx(2.0).epsilon(1e-10));  // kappa t E[x^2]
  CHECK(mp.m[0] == doctest::Approx(1.0 - 0.5).epsilon(1e-10));
}

TEST_CASE("sure atom with rademacher mark, +1 outcome") {
  const CompensatorSpec spec = atom_spec(1.0, 1.0, MarkLaw::rademacher());
  const WeightSpec w = WeightSpec::identity();
  MarkedPointPath path;
  path.horizon = 1.0;
  path.events = {{1.0, 1.0}};
  const MartingalePath mp = build_martingale(w, path, spec);
  REQUIRE(mp.n_jumps() == 1);
  CHECK(mp.dm[0] == doctest::Approx(1.0));   // W -. = 1 - 0
  CHECK(mp.qv[0] == doctest::Approx(1.0));
  CHECK(mp.pqv[0] == doctest::Approx(1.0));  // (1-a) term vanishes, E[(W-0)^2]=1
}

TEST_CASE("empty path with zero intensity gives the zero process") {
  CompensatorSpec spec;
  spec.drift_sign_hint = DriftSignHint::zero_drift;
  MarkedPointPath path;
  path.horizon = 3.0;
  const MartingalePath mp = build_martingale(WeightSpec::identity(), path, spec);
  CHECK(mp.n_jumps() == 0);
  CHECK(mp.m_final == 0.0);
  CHECK(mp.qv_final == 0.0);
  CHECK(mp.pqv_final == 0.0);
}

TEST_CASE("quadratic_variation right-continuous lookup") {
  MartingalePath mp;
  mp.horizon = 2.0;
  mp.times = {1.0, 1.5};
  mp.qv = {1.0, 2.0};
  CHECK(quadratic_variation(mp, 0.99) == 0.0);
  CHECK(quadratic_variation(mp, 1.0) == 1.0);
  CHECK(quadratic_variation(mp, 1.7) == 2.0);
}

TEST_CASE("predictable_qv closed forms") {
  // compound Poisson kappa=2, rademacher: <M,M>_t = 2 t
  const PPModel cp = compound_poisson_model(2.0, MarkLaw::rademacher());
  PhiloxStream rng(5, 0);
  const MarkedPointPath path = sample_path(cp.spec, 3.0, rng);
  const MartingalePath mp = build_martingale(cp.weight, path, cp.spec);
  CHECK(predictable_qv(mp, cp.spec, cp.weight, 3.0, path) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(mp.pqv_final == doctest::Approx(6.0).epsilon(1e-9));

  // single atom (mass 0.5, mark 2): 0.5*(2-1)^2 + 0.5*1^2 = 1
  const CompensatorSpec half = atom_spec(1.0, 0.5, MarkLaw::constant(2.0));
  MarkedPointPath no_event;
  no_event.horizon = 2.0;
  const MartingalePath mp2 = build_martingale(WeightSpec::identity(), no_event, half);
  REQUIRE(mp2.n_jumps() == 1);
  CHECK(mp2.pqv[0] == doctest::Approx(1.0));
  CHECK(mp2.dm[0] == doctest::Approx(-1.0));  // -W_hat on the silent branch

  // sure atom: only the centered-square term contributes
  const CompensatorSpec sure = atom_spec(1.0, 1.0, MarkLaw::constant(2.0));
  MarkedPointPath fired;
  fired.horizon = 2.0;
  fired.events = {{1.0, 2.0}};
  const MartingalePath mp3 = build_martingale(WeightSpec::identity(), fired, sure);
  CHECK(mp3.pqv[0] == doctest::Approx(0.0));  // W == W_hat: degenerate no-op jump
  CHECK(mp3.dm[0] == doctest::Approx(0.0));
}

TEST_CASE("telescoping identity holds on random mixed paths") {
  CompensatorSpec spec;
  spec.ac = AbsContSpec::homogeneous(1.0, MarkLaw::uniform(-1.0, 1.0));
  spec.atoms.push_back({0.7, 0.6, MarkLaw::constant(1.5)});
  spec.atoms.push_back({1.9, 1.0, MarkLaw::rademacher()});
  const WeightSpec w = WeightSpec::identity();
  for (int i = 0; i < 50; ++i) {
    PhiloxStream rng(321, std::uint64_t(i));
    const MarkedPointPath path = sample_path(spec, 3.0, rng);
    const MartingalePath mp = build_martingale(w, path, spec);
    double m = 0.0;
    for (std::size_t k = 0; k < mp.n_jumps(); ++k) {
      m += mp.drift[k] + mp.dm[k];
      REQUIRE(mp.m[k] == doctest::Approx(m).epsilon(1e-12));
      if (k > 0) {
        REQUIRE(mp.qv[k] >= mp.qv[k - 1]);
        REQUIRE(mp.pqv[k] >= mp.pqv[k - 1]);
      }
    }
    REQUIRE(mp.m_final == doctest::Approx(m + mp.drift[mp.n_jumps()]).epsilon(1e-12));
  }
}

TEST_CASE("jump floor guard names the offending time") {
  CompensatorSpec spec;
  spec.ac = AbsContSpec::homogeneous(1.0, MarkLaw::two_point(0.5, -2.0, 2.0));
  spec.drift_sign_hint = DriftSignHint::zero_drift;
  WeightSpec w = WeightSpec::identity();
  w.jump_floor = -1.0;
  bool threw = false;
  for (int i = 0; i < 100 && !threw; ++i) {
    PhiloxStream rng(17, std::uint64_t(i));
    const MarkedPointPath path = sample_path(spec, 5.0, rng);
    try {
      build_martingale(w, path, spec);
    } catch (const JumpFloorViolationError& e) {
      threw = true;
      CHECK(e.jump == doctest::Approx(-2.0));
      CHECK(e.time > 0.0);
    }
  }
  CHECK(threw);
}

TEST_CASE("m_at interpolates the drift between jumps") {
  CompensatorSpec spec;
  spec.ac = AbsContSpec::homogeneous(1.0, MarkLaw::constant(1.0));
  const WeightSpec w = WeightSpec::identity();
  MarkedPointPath path;
  path.horizon = 4.0;
  path.events = {{1.0, 1.0}};
  const MartingalePath mp = build_martingale(w, path, spec);
  // M at 0.5: no jumps yet, drift = -0.5
  CHECK(m_at(mp, spec, w, 0.5, path) == doctest::Approx(-0.5).epsilon(1e-10));
  // M at 2.0: jump +1 at t=1, drift -2
  CHECK(m_at(mp, spec, w, 2.0, path) == doctest::Approx(-1.0).epsilon(1e-10));
}
