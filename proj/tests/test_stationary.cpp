#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "agf/stationary.hpp"

using namespace agf;
using std::numbers::pi;

namespace {

Field convex_b(const Grid1D& g) {
  Field b = Field::sample(g, [](double x) { return 0.3 * (4.0 * x * x + 3.0); });
  b.normalize();
  return b;
}

Field nonconvex_b(const Grid1D& g) {
  Field b = Field::sample(g, [](double x) {
    return 1.2 * (1.0 + 0.1 * std::sin(20.0 * x)) * (x * x + 0.75);
  });
  b.normalize();
  return b;
}

ModelParams paper_params() { return derive_params(100, 500, 0.01, 0.015, 2); }

}  // namespace

TEST_CASE("uniform porosity gives the uniform equilibrium for every pair") {
  const Grid1D g(128);
  const Field b = Field::constant(g, 1.0);
  const ModelParams p = paper_params();
  for (const EntropyPair pair :
       {EntropyPair::pair1(), EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0)}) {
    const EquilibriumResult eq = equilibrium_newton(pair, b, p);
    CHECK(linf_distance(eq.r_inf, Field::constant(g, 1.0)) < 1e-11);
    CHECK(eq.chi == doctest::Approx(entropy_variable(pair, 1.0, 1.0, p)).epsilon(1e-10));
    CHECK(std::abs(eq.r_inf.mass() - 1.0) < 1e-10);
    CHECK(eq.residual < 1e-10);
  }
}

TEST_CASE("pair-1 equilibrium with eps1 = 0 is the discrete Boltzmann density") {
  const Grid1D g(200);
  const Field b = convex_b(g);
  const ModelParams p = params_from_eps(0.0, 0.245);
  const EquilibriumResult eq = equilibrium_newton(EntropyPair::pair1(), b, p);
  Eigen::ArrayXd boltz = (-p.eps3 * b.v).exp();
  boltz /= boltz.sum() * g.h();
  CHECK((eq.r_inf.v - boltz).abs().maxCoeff() < 1e-8);
}

TEST_CASE("log-denominator equilibria have the closed form (1 - eps3 b)/(1 - eps3)") {
  // For every member of the alpha family the equilibrium profile solves
  // dr/db = -eps3 r / (1 - eps3 b), independent of alpha, so pair 2 and any
  // pair 3 share the same equilibrium.
  const Grid1D g(150);
  const Field b = convex_b(g);
  const ModelParams p = params_from_eps(0.25, 0.2);
  const Eigen::ArrayXd closed = (1.0 - p.eps3 * b.v) / (1.0 - p.eps3);
  for (const EntropyPair pair :
       {EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0), EntropyPair::pair3(0.75, 0.5)}) {
    const EquilibriumResult eq = equilibrium_newton(pair, b, p);
    CHECK((eq.r_inf.v - closed).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pair-1 equilibrium stays within 2 eps3^2 of the first-order expansion") {
  const Grid1D g(200);
  const Field b = convex_b(g);
  const ModelParams p = paper_params();
  const EquilibriumResult eq = equilibrium_newton(EntropyPair::pair1(), b, p);
  const Field first = asymptotic_equilibrium(b, p);
  CHECK(linf_distance(eq.r_inf, first) <= 2.0 * p.eps3 * p.eps3);
}

TEST_CASE("Newton converges quickly from the uniform start on both porosities") {
  const Grid1D g(200);
  for (const Field& b : {convex_b(g), nonconvex_b(g)}) {
    for (const EntropyPair pair :
         {EntropyPair::pair1(), EntropyPair::pair2(), EntropyPair::pair3(0.5, 0.0)}) {
      const EquilibriumResult eq = equilibrium_newton(pair, b, paper_params());
      CHECK(eq.newton_iters <= 15);
      CHECK(eq.residual < 1e-10);
      CHECK(std::abs(eq.r_inf.mass() - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("equilibria of the first two pairs agree to second order in eps") {
  const Grid1D g(100);
  const Field b = convex_b(g);
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025}, diff;
  for (double e : eps) {
    const ModelParams p = params_from_eps(e, e);
    const Field r1 = equilibrium_newton(EntropyPair::pair1(), b, p).r_inf;
    const Field r2 = equilibrium_newton(EntropyPair::pair2(), b, p).r_inf;
    diff.push_back(linf_distance(r1, r2));
  }
  CHECK(loglog_slope(eps, diff) >= 1.8);
}

TEST_CASE("long-time limit of pure diffusion is uniform") {
  const Grid1D g(100);
  const Field b = convex_b(g);
  const ModelParams zero = params_from_eps(0, 0);
  Field bump = Field::sample(g, [](double x) { return 1.0 + 0.3 * std::cos(pi * (x + 0.5)); });
  bump.normalize();
  const Field r_star = stationary_longtime(b, zero, 1e-8, 50.0, &bump);
  CHECK(linf_distance(r_star, Field::constant(g, 1.0)) < 1e-8);
}

TEST_CASE("the stationary solution does not depend on the initial condition") {
  const Grid1D g(100);
  const Field b = convex_b(g);
  const ModelParams p = paper_params();
  const Field a = stationary_longtime(b, p);
  Field bump = Field::sample(g, [](double x) { return 1.0 + 0.4 * std::cos(pi * (x + 0.5)); });
  bump.normalize();
  const Field c = stationary_longtime(b, p, 1e-8, 50.0, &bump);
  CHECK(l2_distance(a, c) < 1e-6);
}

TEST_CASE("the second entropy approximates the stationary state better at the paper parameters") {
  const Grid1D g(100);
  const Field b = convex_b(g);
  const ModelParams p = paper_params();
  const Field r_star = stationary_longtime(b, p);
  const Field r1 = equilibrium_newton(EntropyPair::pair1(), b, p).r_inf;
  const Field r2 = equilibrium_newton(EntropyPair::pair2(), b, p).r_inf;
  CHECK(l2_distance(r_star, r2) < l2_distance(r_star, r1));
}

TEST_CASE("scaling study: second-order gap and the expected orderings") {
  const Grid1D g(100);
  const Field b = convex_b(g);
  const std::vector<double> eps{0.2, 0.1, 0.05};
  for (RatioMode mode : {RatioMode::self_weak, RatioMode::balanced, RatioMode::self_strong}) {
    const ScalingStudy study = error_scaling_study(mode, eps, b, 2);
    for (int k = 0; k < 3; ++k) {
      CHECK(study.fitted_rows[k] == 3);
      CHECK(study.slopes[k] >= 1.7);
      CHECK(study.slopes[k] <= 2.3);
    }
    for (const auto& row : study.rows) {
      if (mode == RatioMode::self_weak) CHECK(row.err[1] < row.err[0]);
      if (mode == RatioMode::self_strong) CHECK(row.err[0] < row.err[1]);
    }
  }
}

TEST_CASE("scaling study keeps going when a row fails") {
  const Grid1D g(64);
  const Field b = convex_b(g);
  // eps2 = 1.2 puts eps2*b above 1: no feasible pair-2 equilibrium there
  const ScalingStudy study = error_scaling_study(RatioMode::self_weak, {1.2, 0.1, 0.05}, b, 1);
  CHECK((!study.rows[0].stationary_ok || !study.rows[0].ok[1]));
  CHECK(study.rows[1].ok[0]);
  CHECK(study.rows[2].ok[0]);
}

TEST_CASE("loglog_slope recovers an exact power law") {
  CHECK(loglog_slope({1.0, 0.5, 0.25}, {3.0, 0.75, 0.1875}) ==
        doctest::Approx(2.0).epsilon(1e-12));
}
