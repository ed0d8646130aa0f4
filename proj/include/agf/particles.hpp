#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "agf/grid.hpp"
#include "agf/model.hpp"

namespace agf {

// The stochastic layer lives on Omega = [-0.5, 0.5]^2.
inline constexpr double kBoxMin = -0.5;
inline constexpr double kBoxMax = 0.5;

using Vec2 = Eigen::Vector2d;

// mt19937_64 engine with hand-rolled uniform/normal draws so that streams are
// bit-identical across standard libraries. Per-realization streams derive from
// a master seed via splitmix64 of (master, index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng stream(std::uint64_t master, std::uint64_t index);

  std::uint64_t next_u64() { return eng_(); }
  double uniform();  // [0, 1)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal();   // standard normal, Box-Muller
  int uniform_int(int n);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct ParticleEnsemble {
  Eigen::Matrix2Xd red;        // mobile disk centers
  Eigen::Matrix2Xd obstacles;  // fixed disk centers
  double diam_red = 0.0;
  double diam_blue = 0.0;
  std::uint64_t seed = 0;

  double red_red_cutoff() const { return diam_red; }
  double red_blue_cutoff() const { return 0.5 * (diam_red + diam_blue); }
  bool invariants_ok() const;
};

// Uniform bucket grid over the box; cell size is at least the construction
// cutoff so a 3x3 neighborhood covers every query within that distance.
class CellList {
 public:
  explicit CellList(double cutoff);
  void rebuild(const Eigen::Matrix2Xd& pts);
  void add(const Vec2& p);
  void move(int idx, const Vec2& to);
  // any stored point other than `skip` strictly closer than dist to p?
  bool any_within(const Vec2& p, double dist, int skip = -1) const;
  int size() const { return static_cast<int>(pts_.size()); }
  const Vec2& point(int i) const { return pts_[i]; }

 private:
  int cell_index(const Vec2& p) const;
  int side_;
  double cell_;
  std::vector<Vec2> pts_;
  std::vector<std::vector<int>> buckets_;
};

// Inverse-CDF sampler for the x coordinate from a cell-averaged density.
class DensitySampler1D {
 public:
  explicit DensitySampler1D(const Field& density);
  double sample(Rng& rng) const;

 private:
  Grid1D grid_;
  std::vector<double> cdf_;
};

// I.i.d. draws of obstacle centers with x ~ b and y uniform; overlapping draws
// are resampled while the budget lasts.
Eigen::Matrix2Xd place_obstacles(const Field& b, int n_blue, double diam_blue, Rng& rng,
                                 bool blue_overlap_check = true, long budget = -1);

// Red initial positions from the first-order stationary density 1 + eps3(1-b),
// respecting hard-core constraints against obstacles and already placed reds.
Eigen::Matrix2Xd sample_initial_first_order(const Field& b, const ModelParams& p, int n_red,
                                            const Eigen::Matrix2Xd& obstacles, Rng& rng,
                                            double diam_red, double diam_blue,
                                            long budget = -1);

// Same with uniform x density.
Eigen::Matrix2Xd sample_initial_uniform(int n_red, const Eigen::Matrix2Xd& obstacles, Rng& rng,
                                        double diam_red, double diam_blue, long budget = -1);

// Keeps the ensemble and its neighbor structures consistent while moving reds.
class HardSphereSim {
 public:
  explicit HardSphereSim(ParticleEnsemble e);

  bool position_feasible(const Vec2& p, int moving_red) const;
  bool try_move(int red_index, const Vec2& to);  // accepts iff feasible
  // One Euler-Maruyama sweep: every red proposes sqrt(2 dt) * normal and an
  // infeasible proposal leaves the particle in place.
  int brownian_sweep(double dt, Rng& rng);  // returns accepted count
  int mh_move(double step_std, Rng& rng);   // single-particle move; 1 if accepted

  const ParticleEnsemble& ensemble() const { return ens_; }

 private:
  ParticleEnsemble ens_;
  CellList reds_;
  CellList obstacles_;
};

// One-shot convenience: rebuilds the neighbor lists per call, so use
// HardSphereSim directly in realization loops.
void brownian_step(ParticleEnsemble& e, double dt, Rng& rng);

struct Histogram {
  Eigen::ArrayXd centers;
  Eigen::ArrayXd mean;     // mean x-density across realizations
  Eigen::ArrayXd std_err;  // standard error of that mean
  long realizations = 0;
};

// L2 distance between a histogram and a PDE field averaged onto the bins.
double histogram_l2_distance(const Histogram& hist, const Field& reference);
// Standard error of that distance propagated from the per-bin errors.
double histogram_l2_distance_err(const Histogram& hist, const Field& reference);

struct HistogramSpec {
  int n_bins = 50;
  long realizations = 1000;
  std::vector<double> output_times = {0.2};
  double dt = 0.0;  // 0: (0.5 diam_red)^2 / 2
  bool redraw_obstacles = true;
  bool blue_overlap_check = true;
  std::uint64_t seed = 1;
  int threads = 1;
};

enum class InitialSampler { uniform, first_order };

// Independent realizations of the interacting Brownian system, histogrammed in
// x at the output times. Aggregation runs in realization-index order, so the
// result is independent of the thread count.
std::vector<Histogram> simulate_ensemble(const ModelParams& p, const Field& b,
                                         const HistogramSpec& spec,
                                         InitialSampler init = InitialSampler::uniform);

// Histogram of obstacle draws themselves (the sampled porosity).
Histogram obstacle_histogram(const Field& b, const ModelParams& p, int n_bins,
                             long realizations, std::uint64_t seed,
                             bool blue_overlap_check = true, int threads = 1);

struct MhSpec {
  int n_bins = 50;
  long realizations = 100;
  long moves = 100000;
  long burn_in = 20000;
  long tune_block = 500;
  double target_acceptance = 0.23;
  double initial_step = 0.05;  // proposal std before tuning
  long sample_stride = 100;
  bool blue_overlap_check = true;
  std::uint64_t seed = 2;
  int threads = 1;
};

struct MhResult {
  Histogram histogram;
  double acceptance = 0.0;  // post burn-in, averaged over realizations
  double step_std = 0.0;    // tuned proposal std, averaged over realizations
};

// Stationary distribution via single-particle Metropolis moves with a
// hard-core target: acceptance is the feasibility indicator; the proposal std
// is tuned toward the target acceptance during burn-in.
MhResult metropolis_stationary(const ModelParams& p, const Field& b, const MhSpec& spec);

}  // namespace agf
