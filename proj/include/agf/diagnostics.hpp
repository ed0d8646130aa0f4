#pragma once

#include <vector>

#include "agf/grid.hpp"
#include "agf/model.hpp"

namespace agf {

// Midpoint-rule entropy of a field; floored cells are evaluated at the floor.
double entropy_of(const EntropyPair& pair, const Field& r, const Field& b, const ModelParams& p,
                  double floor = 1e-12);

struct RelativeEntropy {
  double value = 0.0;  // E(r) - E(r_star) - gamma
  double gamma = 0.0;  // integral of u(r_star) (r - r_star)
};

// Bregman distance of r to the stationary reference r_star.
RelativeEntropy relative_entropy(const EntropyPair& pair, const Field& r, const Field& r_star,
                                 const Field& b, const ModelParams& p, double floor = 1e-12);

// Quadrature of m(pair) |grad u|^2 with interface-centered gradients.
double dissipation(const EntropyPair& pair, const Field& r, const Field& b,
                   const ModelParams& p, double floor = 1e-12);

struct RateFit {
  double rate = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

// Least-squares slope of log E*(t) on the window E* in
// [1e-8 E*(0), 0.5 E*(0)]; an empty window is an error.
RateFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values);

struct EntropySeries {
  std::vector<double> times;
  std::vector<double> value;        // E(t)
  std::vector<double> relative;     // E*(t)
  std::vector<double> gamma;        // gamma(t)
  std::vector<double> dissipation;  // I(t)
};

// Series of E, E*, gamma, I along a sequence of states against a fixed
// stationary reference.
EntropySeries entropy_series(const EntropyPair& pair, const std::vector<double>& times,
                             const std::vector<Field>& states, const Field& r_star,
                             const Field& b, const ModelParams& p, double floor = 1e-12);

}  // namespace agf
