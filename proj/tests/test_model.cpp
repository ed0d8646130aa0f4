#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "agf/model.hpp"
#include "agf/particles.hpp"

using namespace agf;
using std::numbers::pi;

namespace {

struct State {
  double r, b, gr, gb;
};

// feasible draws for the Figure-1-sized parameters
State random_feasible(Rng& rng, const ModelParams& p) {
  for (;;) {
    State s;
    s.r = rng.uniform(0.1, 1.6);
    s.b = rng.uniform(0.0, 1.2);
    s.gr = rng.uniform(-2.0, 2.0);
    s.gb = rng.uniform(-2.0, 2.0);
    if (p.eps1 * s.r + p.eps2 * s.b < 0.9 && p.eps1 * s.r + p.eps3 * s.b < 0.9) return s;
  }
}

double central_diff_dr(const EntropyPair& pair, double r, double b, const ModelParams& p) {
  const double d = 1e-5 * std::max(1.0, std::abs(r));
  return (entropy_density(pair, r + d, b, p) - entropy_density(pair, r - d, b, p)) / (2.0 * d);
}

double second_diff_dr(const EntropyPair& pair, double r, double b, const ModelParams& p) {
  const double d = 1e-4 * std::max(1.0, std::abs(r));
  return (entropy_density(pair, r + d, b, p) - 2.0 * entropy_density(pair, r, b, p) +
          entropy_density(pair, r - d, b, p)) /
         (d * d);
}

}  // namespace

TEST_CASE("derive_params matches the closed-form two-dimensional expressions") {
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);
  CHECK(p.eps1 == doctest::Approx(99.0 * pi * 1e-4).epsilon(1e-14));   // (N_r-1) pi d_r^2
  CHECK(p.eps2 == doctest::Approx(500.0 * pi * 0.0125 * 0.0125).epsilon(1e-14));
  CHECK(p.eps3 == p.eps2);  // d = 2
  CHECK(p.eps1 == doctest::Approx(0.031102).epsilon(1e-4));
  CHECK(p.eps2 == doctest::Approx(0.245437).epsilon(1e-4));
}

TEST_CASE("derive_params degenerate and invalid inputs") {
  const ModelParams p = derive_params(1, 0, 0.01, 0.015, 2);
  CHECK(p.eps1 == 0.0);
  CHECK(p.eps2 == 0.0);
  CHECK(p.eps3 == 0.0);
  CHECK_THROWS_AS(derive_params(100, 500, 0.01, 0.015, 4), std::invalid_argument);
  CHECK_THROWS_AS(derive_params(0, 500, 0.01, 0.015, 2), std::invalid_argument);
  CHECK_THROWS_AS(derive_params(10, 5, -0.01, 0.015, 2), std::invalid_argument);
}

TEST_CASE("eps3 = (d-1) eps2 in both dimensions") {
  CHECK(derive_params(50, 60, 0.01, 0.02, 2).eps3 ==
        doctest::Approx(derive_params(50, 60, 0.01, 0.02, 2).eps2).epsilon(1e-15));
  const ModelParams p3 = derive_params(50, 60, 0.01, 0.02, 3);
  CHECK(p3.eps3 == doctest::Approx(2.0 * p3.eps2).epsilon(1e-15));
  CHECK(params_from_eps(0.3, 0.2, 3).eps3 == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("volume fraction of the paper parameters is about one tenth") {
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);
  const double phi = volume_fraction(p, 1.0);
  CHECK(phi == doctest::Approx(0.0962).epsilon(1e-3));
  CHECK(phi > 0.09);
  CHECK(phi < 0.11);

  ModelParams none;
  none.n_red = 0;
  CHECK(volume_fraction(none, 1.0) == 0.0);

  const ModelParams unit = derive_params(1, 0, 1.0, 0.5, 2);
  CHECK(volume_fraction(unit, 1.0) == doctest::Approx(pi / 4.0).epsilon(1e-15));
}

TEST_CASE("entropy density hand values") {
  CHECK(entropy_density(EntropyPair::pair1(), 1.0, 0.0, params_from_eps(0, 0)) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  // r=1, b=1, eps1=0.2, eps3=0.1: -1 + 0.1 + 0.1
  CHECK(entropy_density(EntropyPair::pair1(), 1.0, 1.0, params_from_eps(0.2, 0.1)) ==
        doctest::Approx(-0.8).epsilon(1e-14));
  CHECK(entropy_density(EntropyPair::pair2(), 1.0, 0.0, params_from_eps(0, 0)) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(entropy_density(EntropyPair::pair1(), -0.5, 0.0, params_from_eps(0, 0)),
                  std::domain_error);
  CHECK_THROWS_AS(entropy_density(EntropyPair::pair2(), 3.0, 1.0, params_from_eps(0.4, 0.4)),
                  std::domain_error);
}

TEST_CASE("entropy variable hand values and finite-difference oracle") {
  CHECK(entropy_variable(EntropyPair::pair1(), 1.0, 0.0, params_from_eps(0, 0)) ==
        doctest::Approx(0.0).epsilon(1e-15));
  // r=2, b=0.5, eps1=0.1, eps3=0.2: log 2 + 0.2 + 0.1
  CHECK(entropy_variable(EntropyPair::pair1(), 2.0, 0.5, params_from_eps(0.1, 0.2)) ==
        doctest::Approx(std::log(2.0) + 0.3).epsilon(1e-14));

  const ModelParams p = params_from_eps(0.1, 0.1);
  const double fd = central_diff_dr(EntropyPair::pair2(), 0.5, 0.5, p);
  CHECK(entropy_variable(EntropyPair::pair2(), 0.5, 0.5, p) ==
        doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("entropy variable equals the density derivative at random feasible states") {
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);
  Rng rng(42);
  for (const EntropyPair pair :
       {EntropyPair::pair1(), EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0)}) {
    for (int k = 0; k < 100; ++k) {
      const State s = random_feasible(rng, p);
      const double u = entropy_variable(pair, s.r, s.b, p);
      const double fd = central_diff_dr(pair, s.r, s.b, p);
      CHECK(u == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("entropy density is strictly convex in r on its domain") {
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);
  Rng rng(7);
  for (const EntropyPair pair :
       {EntropyPair::pair1(), EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0)}) {
    for (int k = 0; k < 100; ++k) {
      const State s = random_feasible(rng, p);
      CHECK(second_diff_dr(pair, s.r, s.b, p) > 0.0);
    }
  }
}

TEST_CASE("mobility values and zeros") {
  const ModelParams p = params_from_eps(0.3, 0.2);
  for (const EntropyPair pair :
       {EntropyPair::pair1(), EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0)})
    CHECK(mobility(pair, 0.0, 0.7, p) == 0.0);
  CHECK(mobility(EntropyPair::pair1(), 1.0, 0.0, params_from_eps(0, 0)) == 1.0);
  // pair 2 mobility vanishes on the feasibility boundary eps1 r + eps2 b = 1
  const double r = (1.0 - 0.2 * 0.5) / 0.3;
  CHECK(mobility(EntropyPair::pair2(), r, 0.5, p) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("pair 3 requires the family constraint") {
  CHECK_THROWS_AS(EntropyPair::pair3(0.5, 0.5), std::invalid_argument);
  CHECK_NOTHROW(EntropyPair::pair3(1.0, 1.0));
  CHECK_NOTHROW(EntropyPair::pair3(0.5, 0.0));
}

TEST_CASE("higher-order flux special cases") {
  // f1 vanishes identically when eps2 = 0
  const ModelParams no_obstacles = params_from_eps(0.3, 0.0);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const State s = random_feasible(rng, no_obstacles);
    CHECK(higher_order_flux(EntropyPair::pair1(), s.r, s.gr, s.b, s.gb, no_obstacles) == 0.0);
  }
  // f2 vanishes identically when eps1 = 0 and d = 2 (eps2 = eps3)
  const ModelParams no_self = params_from_eps(0.0, 0.3);
  for (int k = 0; k < 20; ++k) {
    const State s = random_feasible(rng, no_self);
    CHECK(higher_order_flux(EntropyPair::pair2(), s.r, s.gr, s.b, s.gb, no_self) == 0.0);
  }
  // hand value: r=b=grad_r=1, grad_b=0, all eps 0.1 -> 0.01
  CHECK(higher_order_flux(EntropyPair::pair1(), 1.0, 1.0, 1.0, 0.0, params_from_eps(0.1, 0.1)) ==
        doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("agf flux reduces to pure diffusion and pure drift") {
  const ModelParams zero = params_from_eps(0, 0);
  CHECK(agf_flux(0.7, 1.3, 0.4, -2.0, zero) == doctest::Approx(1.3).epsilon(1e-15));
  const ModelParams p = params_from_eps(0.2, 0.1);
  CHECK(agf_flux(1.0, 0.0, 0.8, 1.0, p) == doctest::Approx(p.eps3).epsilon(1e-15));
}

TEST_CASE("pair 1 and pair 3 decompositions reproduce the flux exactly") {
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);
  Rng rng(11);
  for (const EntropyPair pair : {EntropyPair::pair1(), EntropyPair::pair3(0.5, 0.0),
                                 EntropyPair::pair3(0.75, 0.5)}) {
    for (int k = 0; k < 100; ++k) {
      const State s = random_feasible(rng, p);
      const double grad_u = entropy_variable_dr(pair, s.r, s.b, p) * s.gr +
                            entropy_variable_db(pair, s.r, s.b, p) * s.gb;
      const double lhs = mobility(pair, s.r, s.b, p) * grad_u +
                         higher_order_flux(pair, s.r, s.gr, s.b, s.gb, p);
      const double rhs = agf_flux(s.r, s.gr, s.b, s.gb, p);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("pair 2 decomposition defect scales like eps^3") {
  // fixed state, eps1 = eps2 = eps3 = eps
  const double r = 0.8, b = 0.9, gr = 0.7, gb = -0.6;
  std::vector<double> eps{0.1, 0.05, 0.025, 0.0125}, defect;
  for (double e : eps) {
    const ModelParams p = params_from_eps(e, e);
    const EntropyPair pair = EntropyPair::pair2();
    const double grad_u = entropy_variable_dr(pair, r, b, p) * gr +
                          entropy_variable_db(pair, r, b, p) * gb;
    const double lhs =
        mobility(pair, r, b, p) * grad_u + higher_order_flux(pair, r, gr, b, gb, p);
    defect.push_back(std::abs(lhs - agf_flux(r, gr, b, gb, p)));
  }
  // log-log slope across the sweep
  double slope_min = 1e9;
  for (std::size_t i = 1; i < eps.size(); ++i) {
    const double slope =
        std::log(defect[i - 1] / defect[i]) / std::log(eps[i - 1] / eps[i]);
    slope_min = std::min(slope_min, slope);
  }
  CHECK(slope_min >= 2.7);
}

TEST_CASE("asymptotic equilibrium") {
  const Grid1D grid(64);
  const ModelParams p = derive_params(100, 500, 0.01, 0.015, 2);

  const Field ones = Field::constant(grid, 1.0);
  CHECK(linf_distance(asymptotic_equilibrium(ones, p), ones) == 0.0);

  Field b = Field::sample(grid, [](double x) { return 0.3 * (4.0 * x * x + 3.0); });
  b.normalize();
  CHECK(linf_distance(asymptotic_equilibrium(b, params_from_eps(0.5, 0.0)), ones) == 0.0);

  // unit mass whenever mean(b) = 1
  const Field r1 = asymptotic_equilibrium(b, p);
  CHECK(r1.mass() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("feasible set membership") {
  const FeasibleSet set{params_from_eps(0.5, 0.25)};
  CHECK(set.contains(1.0, 1.0));        // 0.5 + 0.25 <= 1
  CHECK(!set.contains(-0.1, 0.0));
  CHECK(!set.contains(2.0, 1.0));
  const Grid1D grid(16);
  const Field b = Field::constant(grid, 1.0);
  CHECK(porosity_lower_bound(b, params_from_eps(0.5, 0.25)) == doctest::Approx(0.75));
}
