#include "agf/stationary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace agf {

namespace {

bool in_pair_domain(const EntropyPair& pair, const Eigen::ArrayXd& r, const Eigen::ArrayXd& b,
                    const ModelParams& p) {
  if (r.minCoeff() <= 0.0) return false;
  if (pair.kind() == EntropyPair::Kind::pair1) return true;
  const double a = pair.alpha() * p.eps1;
  return (1.0 - a * r - p.eps3 * b).minCoeff() > 0.0;
}

}  // namespace

EquilibriumResult equilibrium_newton(const EntropyPair& pair, const Field& b,
                                     const ModelParams& p) {
  const int n = b.size();
  const double h = b.grid.h();
  Eigen::ArrayXd r = Eigen::ArrayXd::Ones(n);
  if (!in_pair_domain(pair, r, b.v, p))
    throw std::domain_error("equilibrium_newton: uniform start not in the pair domain");
  double chi = entropy_variable(pair, 1.0, b.v.mean(), p);

  constexpr double kTol = 1e-12;
  constexpr int kMaxIters = 100;
  double res = 0.0;
  int iter = 0;
  for (; iter < kMaxIters; ++iter) {
    Eigen::ArrayXd f(n), ur(n);
    for (int i = 0; i < n; ++i) {
      f(i) = entropy_variable(pair, r(i), b.v(i), p) - chi;
      ur(i) = entropy_variable_dr(pair, r(i), b.v(i), p);
    }
    const double g = h * r.sum() - 1.0;
    res = std::max(f.abs().maxCoeff(), std::abs(g));
    if (res < kTol) break;

    // Block elimination: dr_i = (dchi - f_i)/u'_i, mass row fixes dchi.
    const Eigen::ArrayXd inv_ur = ur.inverse();
    const double dchi = (-g + h * (f * inv_ur).sum()) / (h * inv_ur.sum());
    const Eigen::ArrayXd dr = (dchi - f) * inv_ur;

    double lambda = 1.0;
    bool ok = false;
    for (int k = 0; k < 60; ++k, lambda *= 0.5) {
      Eigen::ArrayXd trial = r + lambda * dr;
      if (in_pair_domain(pair, trial, b.v, p)) {
        r = std::move(trial);
        chi += lambda * dchi;
        ok = true;
        break;
      }
    }
    if (!ok)
      throw std::runtime_error("equilibrium_newton: iterate cannot stay in the pair domain");
  }
  if (res >= 1e-10)
    throw std::runtime_error("equilibrium_newton: no convergence after " +
                             std::to_string(kMaxIters) + " iterations, residual " +
                             std::to_string(res));
  EquilibriumResult out;
  out.r_inf = Field(b.grid, std::move(r));
  out.chi = chi;
  out.newton_iters = iter;
  out.residual = res;
  return out;
}

Field stationary_longtime(const Field& b, const ModelParams& p, double tol, double t_budget,
                          const Field* r0) {
  FvmConfig cfg;
  cfg.n_cells = b.grid.n_cells;
  cfg.dt = 1.0;  // capped by the suggested stable step
  cfg.t_end = t_budget;
  cfg.stationarity_tol = tol;
  cfg.diag_stride = 1 << 20;
  const Field start = r0 ? *r0 : Field::constant(b.grid, 1.0);
  Trajectory traj = solve(start, b, p, Mode::agf(), cfg);
  return traj.states.back();
}

std::string ratio_mode_label(RatioMode mode) {
  switch (mode) {
    case RatioMode::self_weak:
      return "ratio0.1";
    case RatioMode::balanced:
      return "ratio1";
    default:
      return "ratio10";
  }
}

ModelParams ratio_mode_params(RatioMode mode, double eps) {
  switch (mode) {
    case RatioMode::self_weak:
      return params_from_eps(0.1 * eps, eps);
    case RatioMode::balanced:
      return params_from_eps(eps, eps);
    default:
      return params_from_eps(eps, 0.1 * eps);
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need at least two points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalingStudy error_scaling_study(RatioMode mode, const std::vector<double>& eps_values,
                                 const Field& b, int threads) {
  ScalingStudy study;
  study.mode = mode;
  study.rows.resize(eps_values.size());

  const std::array<EntropyPair, 3> pairs = {EntropyPair::pair1(), EntropyPair::pair2(),
                                            EntropyPair::pair3(0.5, 0.0)};

  auto run_row = [&](std::size_t idx) {
    ScalingRow& row = study.rows[idx];
    row.eps = eps_values[idx];
    const ModelParams p = ratio_mode_params(mode, row.eps);
    Field r_star;
    try {
      r_star = stationary_longtime(b, p);
      row.stationary_ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      return;
    }
    for (int k = 0; k < 3; ++k) {
      try {
        const EquilibriumResult eq = equilibrium_newton(pairs[k], b, p);
        row.err[k] = l2_distance(r_star, eq.r_inf);
        row.ok[k] = true;
      } catch (const std::exception& e) {
        row.pair_error[k] = e.what();
      }
    }
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < study.rows.size(); ++i) run_row(i);
  } else {
    // static round-robin partition keeps the result layout deterministic
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t]() {
        for (std::size_t i = t; i < study.rows.size(); i += threads) run_row(i);
      });
    for (auto& th : pool) th.join();
  }

  for (int k = 0; k < 3; ++k) {
    std::vector<double> xs, ys;
    for (const auto& row : study.rows)
      if (row.ok[k] && row.err[k] > 0.0) {
        xs.push_back(row.eps);
        ys.push_back(row.err[k]);
      }
    study.fitted_rows[k] = static_cast<int>(xs.size());
    study.slopes[k] = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
  }
  return study;
}

}  // namespace agf
