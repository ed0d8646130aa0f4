#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "agf/grid.hpp"

namespace agf {

// Macroscopic interaction strengths together with the microscopic quantities
// they derive from. eps3 = (dim-1)*eps2 always holds.
struct ModelParams {
  int n_red = 1;
  int n_blue = 0;
  double diam_red = 0.0;
  double diam_blue = 0.0;
  int dim = 2;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;

  double diam_red_blue() const { return 0.5 * (diam_red + diam_blue); }
};

// Volume of the d-ball with the given *diameter*.
inline double ball_volume(int dim, double diameter) {
  const double rad = 0.5 * diameter;
  if (dim == 2) return std::numbers::pi * rad * rad;
  if (dim == 3) return 4.0 / 3.0 * std::numbers::pi * rad * rad * rad;
  throw std::invalid_argument("ball_volume: dim must be 2 or 3");
}

// eps1 = 4(N_r-1)(d-1) v_d(diam_r), eps2 = 4 N_b v_d((diam_r+diam_b)/2), eps3 = (d-1) eps2.
inline ModelParams derive_params(int n_red, int n_blue, double diam_red, double diam_blue,
                                 int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("derive_params: dim must be 2 or 3");
  if (n_red < 1) throw std::invalid_argument("derive_params: n_red must be >= 1");
  if (n_blue < 0) throw std::invalid_argument("derive_params: n_blue must be >= 0");
  if (!(diam_red > 0.0) || !(diam_blue > 0.0))
    throw std::invalid_argument("derive_params: diameters must be positive");
  ModelParams p;
  p.n_red = n_red;
  p.n_blue = n_blue;
  p.diam_red = diam_red;
  p.diam_blue = diam_blue;
  p.dim = dim;
  p.eps1 = 4.0 * (n_red - 1) * (dim - 1) * ball_volume(dim, diam_red);
  p.eps2 = 4.0 * n_blue * ball_volume(dim, p.diam_red_blue());
  p.eps3 = (dim - 1) * p.eps2;
  return p;
}

// Direct construction from the macroscopic parameters (used by the scaling study).
inline ModelParams params_from_eps(double eps1, double eps2, int dim = 2) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("params_from_eps: dim must be 2 or 3");
  if (eps1 < 0 || eps2 < 0) throw std::invalid_argument("params_from_eps: eps must be >= 0");
  ModelParams p;
  p.dim = dim;
  p.eps1 = eps1;
  p.eps2 = eps2;
  p.eps3 = (dim - 1) * eps2;
  return p;
}

// Total volume fraction Phi = [N_b v_d(diam_b) + N_r v_d(diam_r)] / |Omega|.
inline double volume_fraction(const ModelParams& p, double domain_area) {
  if (!(domain_area > 0)) throw std::invalid_argument("volume_fraction: domain_area must be > 0");
  return (p.n_blue * ball_volume(p.dim, p.diam_blue) + p.n_red * ball_volume(p.dim, p.diam_red)) /
         domain_area;
}

// Feasible densities: r >= 0 and eps1*r + eps2*b <= 1.
struct FeasibleSet {
  ModelParams params;

  bool contains(double r, double b) const {
    return r >= 0.0 && params.eps1 * r + params.eps2 * b <= 1.0;
  }
  double slack(double r, double b) const { return 1.0 - params.eps1 * r - params.eps2 * b; }
  bool contains(const Field& r, const Field& b) const {
    require_same_grid(r, b);
    return r.v.minCoeff() >= 0.0 &&
           (1.0 - params.eps1 * r.v - params.eps2 * b.v).minCoeff() >= 0.0;
  }
  double interior_margin(const Field& r, const Field& b) const {
    require_same_grid(r, b);
    return (1.0 - params.eps1 * r.v - params.eps2 * b.v).minCoeff();
  }
};

// Lower bound c1 = min(1 - eps2 b) used in the convergence-rate estimate.
inline double porosity_lower_bound(const Field& b, const ModelParams& p) {
  return 1.0 - p.eps2 * b.v.maxCoeff();
}

// Tagged choice among the three entropy-mobility structures. The third one is
// the (alpha, beta) family with 2*alpha - beta = 1; pair 2 is its alpha=1 member
// but keeps its own tag since its higher-order flux is a truncated series.
class EntropyPair {
 public:
  enum class Kind { pair1, pair2, pair3 };

  static EntropyPair pair1() { return EntropyPair(Kind::pair1, 0.0, 0.0); }
  static EntropyPair pair2() { return EntropyPair(Kind::pair2, 1.0, 1.0); }
  static EntropyPair pair3(double alpha, double beta) {
    if (std::abs(2.0 * alpha - beta - 1.0) > 1e-12)
      throw std::invalid_argument("EntropyPair::pair3: requires 2*alpha - beta = 1");
    return EntropyPair(Kind::pair3, alpha, beta);
  }

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  int index() const { return kind_ == Kind::pair1 ? 1 : kind_ == Kind::pair2 ? 2 : 3; }
  std::string label() const { return "E" + std::to_string(index()); }

 private:
  EntropyPair(Kind k, double a, double b) : kind_(k), alpha_(a), beta_(b) {}
  Kind kind_;
  double alpha_;
  double beta_;
};

namespace detail {
[[noreturn]] inline void domain_violation(const char* what, double r, double b) {
  throw std::domain_error(std::string(what) + ": state (r=" + std::to_string(r) +
                          ", b=" + std::to_string(b) + ") outside entropy domain");
}
}  // namespace detail

// Entropy density h(r; b). Pair 1: r(log r - 1) + eps1 r^2/2 + eps3 r b.
// Pairs 2/3: r [log(r / (1 - a*eps1*r - eps3*b)) - 1] with a = alpha (1 for pair 2).
inline double entropy_density(const EntropyPair& pair, double r, double b,
                              const ModelParams& p) {
  if (!(r > 0.0)) detail::domain_violation("entropy_density", r, b);
  if (pair.kind() == EntropyPair::Kind::pair1)
    return r * (std::log(r) - 1.0) + 0.5 * p.eps1 * r * r + p.eps3 * r * b;
  const double a = pair.alpha() * p.eps1;
  const double den = 1.0 - a * r - p.eps3 * b;
  if (!(den > 0.0)) detail::domain_violation("entropy_density", r, b);
  return r * (std::log(r / den) - 1.0);
}

// Entropy variable u = dh/dr.
inline double entropy_variable(const EntropyPair& pair, double r, double b,
                               const ModelParams& p) {
  if (!(r > 0.0)) detail::domain_violation("entropy_variable", r, b);
  if (pair.kind() == EntropyPair::Kind::pair1) return std::log(r) + p.eps1 * r + p.eps3 * b;
  const double a = pair.alpha() * p.eps1;
  const double den = 1.0 - a * r - p.eps3 * b;
  if (!(den > 0.0)) detail::domain_violation("entropy_variable", r, b);
  return std::log(r) - std::log(den) + a * r / den;
}

// du/dr, needed by the equilibrium Newton solve.
inline double entropy_variable_dr(const EntropyPair& pair, double r, double b,
                                  const ModelParams& p) {
  if (!(r > 0.0)) detail::domain_violation("entropy_variable_dr", r, b);
  if (pair.kind() == EntropyPair::Kind::pair1) return 1.0 / r + p.eps1;
  const double a = pair.alpha() * p.eps1;
  const double den = 1.0 - a * r - p.eps3 * b;
  if (!(den > 0.0)) detail::domain_violation("entropy_variable_dr", r, b);
  return 1.0 / r + 2.0 * a / den + a * a * r / (den * den);
}

// du/db at fixed r.
inline double entropy_variable_db(const EntropyPair& pair, double r, double b,
                                  const ModelParams& p) {
  if (pair.kind() == EntropyPair::Kind::pair1) return p.eps3;
  const double a = pair.alpha() * p.eps1;
  const double den = 1.0 - a * r - p.eps3 * b;
  if (!(den > 0.0)) detail::domain_violation("entropy_variable_db", r, b);
  return p.eps3 * (1.0 - p.eps3 * b) / (den * den);
}

// Mobility m(r; b). May legitimately reach zero; no domain checks.
inline double mobility(const EntropyPair& pair, double r, double b, const ModelParams& p) {
  switch (pair.kind()) {
    case EntropyPair::Kind::pair1:
      return r * (1.0 - p.eps2 * b);
    case EntropyPair::Kind::pair2:
      return r * (1.0 - p.eps1 * r - p.eps2 * b);
    default:
      return r * (1.0 - pair.beta() * p.eps1 * r - p.eps2 * b);
  }
}

// Flux of the original equation: (1 + eps1 r - eps2 b) grad_r + eps3 r grad_b.
inline double agf_flux(double r, double grad_r, double b, double grad_b, const ModelParams& p) {
  return (1.0 + p.eps1 * r - p.eps2 * b) * grad_r + p.eps3 * r * grad_b;
}

// Higher-order correction flux f such that m grad(u) + f reproduces agf_flux:
// exactly for pairs 1 and 3, up to O(eps^3) for pair 2.
inline double higher_order_flux(const EntropyPair& pair, double r, double grad_r, double b,
                                double grad_b, const ModelParams& p) {
  switch (pair.kind()) {
    case EntropyPair::Kind::pair1:
      return r * b * (p.eps1 * p.eps2 * grad_r + p.eps2 * p.eps3 * grad_b);
    case EntropyPair::Kind::pair2:
      return -p.eps1 * r * r * (p.eps1 * grad_r + p.eps3 * grad_b) +
             (p.eps2 - p.eps3) * r * b * (2.0 * p.eps1 * grad_r + p.eps3 * grad_b);
    default: {
      // Defined so the decomposition is exact by construction.
      const double grad_u = entropy_variable_dr(pair, r, b, p) * grad_r +
                            entropy_variable_db(pair, r, b, p) * grad_b;
      return agf_flux(r, grad_r, b, grad_b, p) - mobility(pair, r, b, p) * grad_u;
    }
  }
}

// First-order equilibrium r = 1 + eps3 (1 - b); unit mass whenever mean(b) = 1.
inline Field asymptotic_equilibrium(const Field& b, const ModelParams& p) {
  return Field(b.grid, 1.0 + p.eps3 * (1.0 - b.v));
}

}  // namespace agf
