#pragma once

#include <array>
#include <string>
#include <vector>

#include "agf/fvm.hpp"
#include "agf/grid.hpp"
#include "agf/model.hpp"

namespace agf {

struct EquilibriumResult {
  Field r_inf;
  double chi = 0.0;  // Lagrange multiplier of the normalization constraint
  int newton_iters = 0;
  double residual = 0.0;
};

// Solves u(pair)(r_i, b_i) = chi for all cells together with sum(r_i) h = 1 by
// Newton with the analytic bordered Jacobian (diagonal u' block + mass row,
// eliminated in O(n)). Starts from the uniform state r = 1.
EquilibriumResult equilibrium_newton(const EntropyPair& pair, const Field& b,
                                     const ModelParams& p);

// Long-time limit of the original equation from uniform initial data,
// integrated until ||rhs||_inf < tol. t_budget exhaustion is an error.
Field stationary_longtime(const Field& b, const ModelParams& p, double tol = 1e-8,
                          double t_budget = 50.0, const Field* r0 = nullptr);

enum class RatioMode {
  self_weak,  // eps1/eps2 = 0.1, eps2 = eps
  balanced,   // eps1/eps2 = 1,   eps2 = eps
  self_strong  // eps1/eps2 = 10,  eps1 = eps
};

std::string ratio_mode_label(RatioMode mode);
ModelParams ratio_mode_params(RatioMode mode, double eps);

struct ScalingRow {
  double eps = 0.0;
  bool stationary_ok = false;
  std::string error;            // message when the stationary solve failed
  std::array<double, 3> err{};  // ||r_* - r_{i,inf}||_2, pairs 1..3
  std::array<bool, 3> ok{};
  std::array<std::string, 3> pair_error{};
};

struct ScalingStudy {
  RatioMode mode;
  std::vector<ScalingRow> rows;
  std::array<double, 3> slopes{};     // log-log fit over successful rows
  std::array<int, 3> fitted_rows{};
};

// Error between the stationary solution of the original equation and the three
// gradient-flow equilibria (pair 3 with alpha = 1/2, beta = 0) as eps varies.
// Failing rows are recorded and the remaining rows still run.
ScalingStudy error_scaling_study(RatioMode mode, const std::vector<double>& eps_values,
                                 const Field& b, int threads = 1);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace agf
