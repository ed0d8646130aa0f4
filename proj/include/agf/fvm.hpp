#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agf/grid.hpp"
#include "agf/model.hpp"

namespace agf {

// Dynamics selector: the original equation (AGF) or the gradient flow induced
// by one of the entropy-mobility pairs.
struct Mode {
  enum class Kind { agf, gf };
  Kind kind = Kind::agf;
  EntropyPair pair = EntropyPair::pair1();

  static Mode agf() { return Mode{Kind::agf, EntropyPair::pair1()}; }
  static Mode gf(EntropyPair p) { return Mode{Kind::gf, p}; }
  bool is_gf() const { return kind == Kind::gf; }
  std::string label() const {
    return kind == Kind::agf ? "agf" : "gf" + std::to_string(pair.index());
  }
};

struct FvmConfig {
  int n_cells = 1000;
  double dt = 1e-6;
  double t_end = 0.2;
  // Keep dt even when it exceeds the suggested stable step; otherwise the
  // effective step is min(dt, suggest_dt(state)).
  bool override_dt = false;
  double positivity_floor = 1e-12;
  std::vector<double> output_times;          // snapshot times; t_end appended if empty
  std::vector<EntropyPair> track_pairs;      // per-step entropy series
  std::vector<Field> gamma_refs;             // per-pair reference states for gamma
  int diag_stride = 1;                       // record diagnostics every k-th step
  // > 0: stop when ||rhs||_inf falls below (t_end then acts as a budget and
  // exhausting it is an error).
  double stationarity_tol = 0.0;
};

struct Trajectory {
  std::vector<double> times;   // snapshot times
  std::vector<Field> states;   // snapshots

  // Per-step diagnostics, sampled every diag_stride steps and at snapshots.
  std::vector<double> diag_times;
  std::vector<double> mass;
  std::vector<double> min_value;
  std::vector<EntropyPair> tracked;
  std::vector<std::vector<double>> entropy;  // [pair][sample]
  std::vector<std::vector<double>> gamma;    // [pair][sample]; empty without gamma_ref

  long floor_events = 0;
  double final_residual = 0.0;  // ||rhs||_inf at the last computed step
};

struct StepStats {
  int floored_cells = 0;
  double rhs_inf_norm = 0.0;  // of the first stage
};

// Divergence of the interface fluxes; no-flux boundaries.
Field rhs(const Field& r, const Field& b, const ModelParams& p, const Mode& mode);

// Stable explicit step for the diffusion-dominated dynamics:
// 0.9 * h^2 / (2 max(1 + eps1 r - eps2 b)).
double suggest_dt(const Field& r, const Field& b, const ModelParams& p);

// One SSP-RK2 step; result is floored at positivity_floor and renormalized to
// the input mass whenever the floor was hit.
Field step_rk(const Field& r, const Field& b, const ModelParams& p, const Mode& mode, double dt,
              double positivity_floor = 1e-12, StepStats* stats = nullptr);

Trajectory solve(const Field& r0, const Field& b, const ModelParams& p, const Mode& mode,
                 const FvmConfig& config);

// ---- Entropy-regularized implicit Euler step (validation tool) ----

struct ImplicitResult {
  Field r;
  int newton_iters = 0;
  double residual = 0.0;
};

// Solves (r - r_prev)/tau = div[ n(r) grad(u~) + g(r) ] + tau (Lap u~ - u~)
// with u~ = log r + eps1 r + eps2 b - tau eps1 log(1 - eps1 r - eps2 b),
// n(r) = r(1 - eps2 b) + eps1 eps2 r^2 b/(1 + eps1 r), g(r) = eps2^2 r b grad_b/(1 + eps1 r),
// by damped Newton on the cell-centered system to residual 1e-10.
ImplicitResult step_implicit_regularized(const Field& r_prev, const Field& b,
                                         const ModelParams& p, double tau);

// Regularized entropy sum(h~) h and its variable, exposed for the discrete
// entropy-inequality checks.
double implicit_entropy_total(const Field& r, const Field& b, const ModelParams& p, double tau);
Eigen::ArrayXd implicit_entropy_variable(const Field& r, const Field& b, const ModelParams& p,
                                         double tau);

// Both sides of the one-step discrete entropy inequality
//   H(r_next) + tau*Q + tau^2*R <= H(r_prev)
// plus the lower-bound dissipation D_lower appearing in its telescoped form.
struct ImplicitInequalityTerms {
  double entropy_prev = 0.0;
  double entropy_next = 0.0;
  double q_dissipation = 0.0;  // sum_f [n_f (Gu)^2 + g_f (Gu)] h
  double r_regularization = 0.0;
  double d_lower = 0.0;        // eps1/4 |Gr|^2 + tau^2/2 (...) |eps1 Gr + eps2 Gb|^2 quadrature
};
ImplicitInequalityTerms implicit_inequality_terms(const Field& r_prev, const Field& r_next,
                                                  const Field& b, const ModelParams& p,
                                                  double tau);

}  // namespace agf
