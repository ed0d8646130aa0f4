#include "agf/fvm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agf {

namespace {

inline double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

// Limited slopes with even reflection at the no-flux boundaries.
Eigen::ArrayXd limited_slopes(const Eigen::ArrayXd& r) {
  const int n = static_cast<int>(r.size());
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(n);
  for (int i = 1; i + 1 < n; ++i) s(i) = minmod(r(i) - r(i - 1), r(i + 1) - r(i));
  return s;  // boundary cells keep slope 0 (mirror ghost)
}

struct FluxWork {
  Eigen::ArrayXd flux;  // n+1 interface values, flux[0] = flux[n] = 0
};

// Interface fluxes of the gradient flow m(pair) grad(u): two-point entropy-variable
// gradient, transported density upwinded by the sign of the velocity -grad(u),
// reconstructed to second order with limited slopes.
void gf_fluxes(const Eigen::ArrayXd& r, const Eigen::ArrayXd& b, const ModelParams& p,
               const EntropyPair& pair, double h, Eigen::ArrayXd& flux) {
  const int n = static_cast<int>(r.size());
  Eigen::ArrayXd u(n);
  for (int i = 0; i < n; ++i) u(i) = entropy_variable(pair, r(i), b(i), p);
  const Eigen::ArrayXd s = limited_slopes(r);
  flux.setZero(n + 1);
  for (int f = 1; f < n; ++f) {
    const int i = f - 1;
    const double v = -(u(i + 1) - u(i)) / h;
    if (v == 0.0) continue;
    const double bf = 0.5 * (b(i) + b(i + 1));
    const double r_up = v > 0.0 ? r(i) + 0.5 * s(i) : r(i + 1) - 0.5 * s(i + 1);
    const double m = std::max(mobility(pair, r_up, bf, p), 0.0);
    flux(f) = -m * v;
  }
}

// Interface fluxes of the original equation: centered coefficient on the
// two-point density gradient plus the obstacle drift with upwinded density.
void agf_fluxes(const Eigen::ArrayXd& r, const Eigen::ArrayXd& b, const ModelParams& p, double h,
                Eigen::ArrayXd& flux) {
  const int n = static_cast<int>(r.size());
  const Eigen::ArrayXd s = limited_slopes(r);
  flux.setZero(n + 1);
  for (int f = 1; f < n; ++f) {
    const int i = f - 1;
    const double gr = (r(i + 1) - r(i)) / h;
    const double gb = (b(i + 1) - b(i)) / h;
    const double rf = 0.5 * (r(i) + r(i + 1));
    const double bf = 0.5 * (b(i) + b(i + 1));
    // drift velocity is -eps3 grad(b)
    const double r_up = gb < 0.0 ? r(i) + 0.5 * s(i) : r(i + 1) - 0.5 * s(i + 1);
    flux(f) = (1.0 + p.eps1 * rf - p.eps2 * bf) * gr + p.eps3 * r_up * gb;
  }
}

void mode_fluxes(const Field& r, const Field& b, const ModelParams& p, const Mode& mode,
                 Eigen::ArrayXd& flux) {
  require_same_grid(r, b);
  if (mode.is_gf())
    gf_fluxes(r.v, b.v, p, mode.pair, r.grid.h(), flux);
  else
    agf_fluxes(r.v, b.v, p, r.grid.h(), flux);
}

}  // namespace

Field rhs(const Field& r, const Field& b, const ModelParams& p, const Mode& mode) {
  Eigen::ArrayXd flux;
  mode_fluxes(r, b, p, mode, flux);
  const int n = r.size();
  const double h = r.grid.h();
  Eigen::ArrayXd out(n);
  for (int i = 0; i < n; ++i) out(i) = (flux(i + 1) - flux(i)) / h;
  return Field(r.grid, std::move(out));
}

double suggest_dt(const Field& r, const Field& b, const ModelParams& p) {
  require_same_grid(r, b);
  const double coef = (1.0 + p.eps1 * r.v - p.eps2 * b.v).maxCoeff();
  if (!(coef > 0.0))
    throw std::domain_error("suggest_dt: non-positive diffusion coefficient, no stable step");
  const double h = r.grid.h();
  return 0.9 * h * h / (2.0 * coef);
}

Field step_rk(const Field& r, const Field& b, const ModelParams& p, const Mode& mode, double dt,
              double positivity_floor, StepStats* stats) {
  const Field k1 = rhs(r, b, p, mode);
  if (stats) stats->rhs_inf_norm = k1.v.abs().maxCoeff();
  Field mid(r.grid, r.v + dt * k1.v);
  const Field k2 = rhs(mid, b, p, mode);
  Eigen::ArrayXd next = 0.5 * (r.v + mid.v + dt * k2.v);
  if (!next.allFinite())
    throw std::runtime_error("step_rk: non-finite state after step (instability)");

  int floored = 0;
  for (int i = 0; i < next.size(); ++i)
    if (next(i) < positivity_floor) {
      next(i) = positivity_floor;
      ++floored;
    }
  Field out(r.grid, std::move(next));
  if (floored > 0) {
    const double target = r.mass();
    out.v *= target / out.mass();
  }
  if (stats) stats->floored_cells = floored;
  return out;
}

Trajectory solve(const Field& r0, const Field& b, const ModelParams& p, const Mode& mode,
                 const FvmConfig& config) {
  require_same_grid(r0, b);
  if (!(config.dt > 0.0)) throw std::invalid_argument("solve: dt must be positive");

  std::vector<double> outputs = config.output_times;
  if (outputs.empty()) outputs.push_back(config.t_end);
  std::sort(outputs.begin(), outputs.end());
  for (double t : outputs)
    if (t < 0.0 || t > config.t_end + 1e-14)
      throw std::invalid_argument("solve: output time outside [0, t_end]");

  Trajectory traj;
  traj.tracked = config.track_pairs;
  traj.entropy.resize(traj.tracked.size());
  const bool with_gamma = !config.gamma_refs.empty();
  if (with_gamma && config.gamma_refs.size() != traj.tracked.size())
    throw std::invalid_argument("solve: gamma_refs must match track_pairs");
  if (with_gamma) traj.gamma.resize(traj.tracked.size());

  // gamma(t) = sum u_pair(ref) (r - ref) h; the entropy-variable weights of the
  // reference states are fixed for the whole run.
  std::vector<Eigen::ArrayXd> ref_weights;
  if (with_gamma) {
    for (std::size_t k = 0; k < traj.tracked.size(); ++k) {
      require_same_grid(config.gamma_refs[k], b);
      Eigen::ArrayXd w(b.size());
      for (int i = 0; i < b.size(); ++i)
        w(i) = entropy_variable(traj.tracked[k], config.gamma_refs[k].v(i), b.v(i), p);
      ref_weights.push_back(std::move(w));
    }
  }

  const double h = r0.grid.h();
  auto record_diag = [&](double t, const Field& r) {
    traj.diag_times.push_back(t);
    traj.mass.push_back(r.mass());
    traj.min_value.push_back(r.min());
    for (std::size_t k = 0; k < traj.tracked.size(); ++k) {
      double e = 0.0;
      for (int i = 0; i < r.size(); ++i)
        e += entropy_density(traj.tracked[k], std::max(r.v(i), config.positivity_floor), b.v(i), p);
      traj.entropy[k].push_back(e * h);
      if (with_gamma)
        traj.gamma[k].push_back(((r.v - config.gamma_refs[k].v) * ref_weights[k]).sum() * h);
    }
  };

  Field r = r0;
  double t = 0.0;
  std::size_t next_out = 0;
  long step_index = 0;
  record_diag(0.0, r);
  if (next_out < outputs.size() && outputs[next_out] <= 1e-14 * config.t_end) {
    traj.times.push_back(0.0);
    traj.states.push_back(r);
    ++next_out;
  }

  const double t_final = config.t_end;
  bool stationary_reached = config.stationarity_tol <= 0.0;
  while (t < t_final - 1e-14 * std::max(1.0, t_final)) {
    double dt = config.dt;
    if (!config.override_dt) dt = std::min(dt, suggest_dt(r, b, p));
    const double t_stop = next_out < outputs.size() ? outputs[next_out] : t_final;
    bool at_output = false;
    if (t + dt >= t_stop - 1e-14 * std::max(1.0, t_stop)) {
      dt = t_stop - t;
      at_output = true;
    }

    StepStats stats;
    try {
      r = step_rk(r, b, p, mode, dt, config.positivity_floor, &stats);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(e.what()) + " at t=" + std::to_string(t));
    }
    traj.floor_events += stats.floored_cells;
    traj.final_residual = stats.rhs_inf_norm;
    t = at_output ? t_stop : t + dt;
    ++step_index;

    if (step_index % config.diag_stride == 0 || at_output) record_diag(t, r);
    if (at_output && next_out < outputs.size() && t >= outputs[next_out] - 1e-14) {
      traj.times.push_back(t);
      traj.states.push_back(r);
      ++next_out;
    }
    if (config.stationarity_tol > 0.0 && stats.rhs_inf_norm < config.stationarity_tol) {
      stationary_reached = true;
      break;
    }
  }

  if (!stationary_reached)
    throw std::runtime_error("solve: stationarity budget exhausted, last ||rhs||_inf = " +
                             std::to_string(traj.final_residual));
  if (traj.states.empty()) {
    traj.times.push_back(t);
    traj.states.push_back(r);
  }
  return traj;
}

// ---- implicit entropy-regularized step ----

namespace {

inline double tilde_u(double r, double b, const ModelParams& p, double tau) {
  const double den = 1.0 - p.eps1 * r - p.eps2 * b;
  if (!(r > 0.0) || !(den > 0.0))
    throw std::domain_error("implicit step: state left the feasible set interior");
  return std::log(r) + p.eps1 * r + p.eps2 * b - tau * p.eps1 * std::log(den);
}

inline double tilde_u_dr(double r, double b, const ModelParams& p, double tau) {
  const double den = 1.0 - p.eps1 * r - p.eps2 * b;
  return 1.0 / r + p.eps1 + tau * p.eps1 * p.eps1 / den;
}

inline double mobility_n(double r, double b, const ModelParams& p) {
  return r * (1.0 - p.eps2 * b) + p.eps1 * p.eps2 * r * r * b / (1.0 + p.eps1 * r);
}

inline double mobility_n_dr(double r, double b, const ModelParams& p) {
  const double q = 1.0 + p.eps1 * r;
  return (1.0 - p.eps2 * b) + p.eps1 * p.eps2 * b * r * (2.0 + p.eps1 * r) / (q * q);
}

inline double drift_g(double r, double b, const ModelParams& p) {
  return p.eps2 * p.eps2 * r * b / (1.0 + p.eps1 * r);
}

inline double drift_g_dr(double r, double b, const ModelParams& p) {
  const double q = 1.0 + p.eps1 * r;
  return p.eps2 * p.eps2 * b / (q * q);
}

struct ImplicitOperator {
  const Eigen::ArrayXd& rp;
  const Eigen::ArrayXd& b;
  const ModelParams& p;
  double tau;
  double h;

  // residual F(r) = (r - rp)/tau - div[n Gu + g] - tau (Lap(u) - u)
  Eigen::ArrayXd residual(const Eigen::ArrayXd& r) const {
    const int n = static_cast<int>(r.size());
    Eigen::ArrayXd u(n), nm(n), gt(n);
    for (int i = 0; i < n; ++i) {
      u(i) = tilde_u(r(i), b(i), p, tau);
      nm(i) = mobility_n(r(i), b(i), p);
      gt(i) = drift_g(r(i), b(i), p);
    }
    Eigen::ArrayXd flux = Eigen::ArrayXd::Zero(n + 1);
    Eigen::ArrayXd gu = Eigen::ArrayXd::Zero(n + 1);
    for (int f = 1; f < n; ++f) {
      const int i = f - 1;
      gu(f) = (u(i + 1) - u(i)) / h;
      const double gb = (b(i + 1) - b(i)) / h;
      flux(f) = 0.5 * (nm(i) + nm(i + 1)) * gu(f) + 0.5 * (gt(i) + gt(i + 1)) * gb;
    }
    Eigen::ArrayXd out(n);
    for (int i = 0; i < n; ++i) {
      const double div_flux = (flux(i + 1) - flux(i)) / h;
      const double lap_u = (gu(i + 1) - gu(i)) / h;
      out(i) = (r(i) - rp(i)) / tau - div_flux - tau * (lap_u - u(i));
    }
    return out;
  }

  // Tridiagonal Jacobian bands (lower, diag, upper).
  void jacobian(const Eigen::ArrayXd& r, Eigen::ArrayXd& lo, Eigen::ArrayXd& di,
                Eigen::ArrayXd& up) const {
    const int n = static_cast<int>(r.size());
    Eigen::ArrayXd u(n), du(n), nm(n), dnm(n), dgt(n);
    for (int i = 0; i < n; ++i) {
      u(i) = tilde_u(r(i), b(i), p, tau);
      du(i) = tilde_u_dr(r(i), b(i), p, tau);
      nm(i) = mobility_n(r(i), b(i), p);
      dnm(i) = mobility_n_dr(r(i), b(i), p);
      dgt(i) = drift_g_dr(r(i), b(i), p);
    }
    lo.setZero(n);
    di.setZero(n);
    up.setZero(n);
    const double h2 = h * h;
    for (int i = 0; i < n; ++i) di(i) = 1.0 / tau + tau * du(i);
    // faces contribute to the divergence and the regularization Laplacian
    for (int f = 1; f < n; ++f) {
      const int i = f - 1;
      const double gu = (u(i + 1) - u(i)) / h;
      const double gb = (b(i + 1) - b(i)) / h;
      const double nf = 0.5 * (nm(i) + nm(i + 1));
      // dJ_f/dr_i and dJ_f/dr_{i+1}
      const double dj_l = 0.5 * dnm(i) * gu - nf * du(i) / h + 0.5 * dgt(i) * gb;
      const double dj_r = 0.5 * dnm(i + 1) * gu + nf * du(i + 1) / h + 0.5 * dgt(i + 1) * gb;
      // F_i carries -J_f as its right-face flux, F_{i+1} carries +J_f as its
      // left-face flux; the regularization Laplacian contributes through gu_f.
      di(i) += -dj_l / h + tau * du(i) / h2;
      up(i) += -dj_r / h - tau * du(i + 1) / h2;
      di(i + 1) += dj_r / h + tau * du(i + 1) / h2;
      lo(i + 1) += dj_l / h - tau * du(i) / h2;
    }
  }
};

void thomas_solve(Eigen::ArrayXd lo, Eigen::ArrayXd di, Eigen::ArrayXd up, Eigen::ArrayXd rhs,
                  Eigen::ArrayXd& x) {
  const int n = static_cast<int>(di.size());
  for (int i = 1; i < n; ++i) {
    const double w = lo(i) / di(i - 1);
    di(i) -= w * up(i - 1);
    rhs(i) -= w * rhs(i - 1);
  }
  x.resize(n);
  x(n - 1) = rhs(n - 1) / di(n - 1);
  for (int i = n - 2; i >= 0; --i) x(i) = (rhs(i) - up(i) * x(i + 1)) / di(i);
}

bool interior(const Eigen::ArrayXd& r, const Eigen::ArrayXd& b, const ModelParams& p) {
  return r.minCoeff() > 0.0 && (1.0 - p.eps1 * r - p.eps2 * b).minCoeff() > 0.0;
}

}  // namespace

ImplicitResult step_implicit_regularized(const Field& r_prev, const Field& b,
                                         const ModelParams& p, double tau) {
  require_same_grid(r_prev, b);
  if (!(tau > 0.0)) throw std::invalid_argument("step_implicit_regularized: tau must be > 0");
  if (!interior(r_prev.v, b.v, p))
    throw std::domain_error("step_implicit_regularized: initial state not in feasible interior");

  const ImplicitOperator op{r_prev.v, b.v, p, tau, r_prev.grid.h()};
  Eigen::ArrayXd r = r_prev.v;
  Eigen::ArrayXd f = op.residual(r);
  double res = f.abs().maxCoeff();
  constexpr double kTol = 1e-10;
  constexpr int kMaxIters = 50;
  constexpr int kMaxHalvings = 30;

  int iter = 0;
  for (; iter < kMaxIters && res > kTol; ++iter) {
    Eigen::ArrayXd lo, di, up, delta;
    op.jacobian(r, lo, di, up);
    thomas_solve(lo, di, up, -f, delta);

    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= kMaxHalvings; ++k, lambda *= 0.5) {
      Eigen::ArrayXd trial = r + lambda * delta;
      if (!interior(trial, b.v, p)) continue;
      Eigen::ArrayXd ft = op.residual(trial);
      const double rt = ft.abs().maxCoeff();
      if (rt < res) {
        r = std::move(trial);
        f = std::move(ft);
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw std::runtime_error(
          "step_implicit_regularized: Newton stalled, residual = " + std::to_string(res));
  }
  if (res > kTol)
    throw std::runtime_error("step_implicit_regularized: no convergence after " +
                             std::to_string(kMaxIters) +
                             " iterations, residual = " + std::to_string(res));
  ImplicitResult out;
  out.r = Field(r_prev.grid, std::move(r));
  out.newton_iters = iter;
  out.residual = res;
  return out;
}

double implicit_entropy_total(const Field& r, const Field& b, const ModelParams& p, double tau) {
  require_same_grid(r, b);
  double sum = 0.0;
  for (int i = 0; i < r.size(); ++i) {
    const double ri = r.v(i);
    const double bi = b.v(i);
    const double den = 1.0 - p.eps1 * ri - p.eps2 * bi;
    if (!(ri > 0.0) || !(den > 0.0))
      throw std::domain_error("implicit_entropy_total: state outside feasible interior");
    sum += ri * (std::log(ri) - 1.0) + 0.5 * p.eps1 * ri * ri + p.eps2 * ri * bi +
           tau * den * (std::log(den) - 1.0);
  }
  return sum * r.grid.h();
}

Eigen::ArrayXd implicit_entropy_variable(const Field& r, const Field& b, const ModelParams& p,
                                         double tau) {
  require_same_grid(r, b);
  Eigen::ArrayXd u(r.size());
  for (int i = 0; i < r.size(); ++i) u(i) = tilde_u(r.v(i), b.v(i), p, tau);
  return u;
}

ImplicitInequalityTerms implicit_inequality_terms(const Field& r_prev, const Field& r_next,
                                                  const Field& b, const ModelParams& p,
                                                  double tau) {
  require_same_grid(r_prev, b);
  require_same_grid(r_next, b);
  const int n = r_next.size();
  const double h = b.grid.h();
  ImplicitInequalityTerms out;
  out.entropy_prev = implicit_entropy_total(r_prev, b, p, tau);
  out.entropy_next = implicit_entropy_total(r_next, b, p, tau);

  const Eigen::ArrayXd u = implicit_entropy_variable(r_next, b, p, tau);
  Eigen::ArrayXd nm(n), gt(n);
  for (int i = 0; i < n; ++i) {
    nm(i) = mobility_n(r_next.v(i), b.v(i), p);
    gt(i) = drift_g(r_next.v(i), b.v(i), p);
  }
  double q = 0.0, reg = 0.0, dlow = 0.0;
  for (int f = 1; f < n; ++f) {
    const int i = f - 1;
    const double gu = (u(i + 1) - u(i)) / h;
    const double gr = (r_next.v(i + 1) - r_next.v(i)) / h;
    const double gb = (b.v(i + 1) - b.v(i)) / h;
    q += (0.5 * (nm(i) + nm(i + 1)) * gu + 0.5 * (gt(i) + gt(i + 1)) * gb) * gu * h;
    reg += gu * gu * h;
    const double rf = 0.5 * (r_next.v(i) + r_next.v(i + 1));
    const double bf = 0.5 * (b.v(i) + b.v(i + 1));
    const double den = 1.0 - p.eps1 * rf - p.eps2 * bf;
    const double mixed = p.eps1 * gr + p.eps2 * gb;
    dlow += (0.25 * p.eps1 * gr * gr +
             0.5 * tau * tau * std::pow(p.eps1, 3) * rf * rf / (den * den) * mixed * mixed) *
            h;
  }
  reg += u.square().sum() * h;
  out.q_dissipation = q;
  out.r_regularization = reg;
  out.d_lower = dlow;
  return out;
}

}  // namespace agf
