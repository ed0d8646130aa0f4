#include "agf/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace agf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool inside_box(const Vec2& p) {
  return p.x() >= kBoxMin && p.x() <= kBoxMax && p.y() >= kBoxMin && p.y() <= kBoxMax;
}

long default_budget(long n, long per_item = 2000) { return n > 0 ? per_item * n : 1; }

}  // namespace

Rng::Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

Rng Rng::stream(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(master ^ splitmix64(index + 0x51ed2701ULL)));
}

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

bool ParticleEnsemble::invariants_ok() const {
  const double rr = red_red_cutoff();
  const double rb = red_blue_cutoff();
  for (int i = 0; i < red.cols(); ++i) {
    if (!inside_box(red.col(i))) return false;
    for (int j = i + 1; j < red.cols(); ++j)
      if ((red.col(i) - red.col(j)).squaredNorm() < rr * rr) return false;
    for (int j = 0; j < obstacles.cols(); ++j)
      if ((red.col(i) - obstacles.col(j)).squaredNorm() < rb * rb) return false;
  }
  for (int j = 0; j < obstacles.cols(); ++j)
    if (!inside_box(obstacles.col(j))) return false;
  return true;
}

CellList::CellList(double cutoff) {
  const double c = std::max(cutoff, (kBoxMax - kBoxMin) / 512.0);
  side_ = std::max(1, static_cast<int>(std::floor((kBoxMax - kBoxMin) / c)));
  cell_ = (kBoxMax - kBoxMin) / side_;
  buckets_.assign(static_cast<std::size_t>(side_) * side_, {});
}

int CellList::cell_index(const Vec2& p) const {
  auto clampi = [this](double x) {
    int i = static_cast<int>(std::floor((x - kBoxMin) / cell_));
    return std::clamp(i, 0, side_ - 1);
  };
  return clampi(p.y()) * side_ + clampi(p.x());
}

void CellList::rebuild(const Eigen::Matrix2Xd& pts) {
  for (auto& b : buckets_) b.clear();
  pts_.resize(pts.cols());
  for (int i = 0; i < pts.cols(); ++i) {
    pts_[i] = pts.col(i);
    buckets_[cell_index(pts_[i])].push_back(i);
  }
}

void CellList::add(const Vec2& p) {
  pts_.push_back(p);
  buckets_[cell_index(p)].push_back(static_cast<int>(pts_.size()) - 1);
}

void CellList::move(int idx, const Vec2& to) {
  const int from = cell_index(pts_[idx]);
  const int dest = cell_index(to);
  if (from != dest) {
    auto& b = buckets_[from];
    b.erase(std::find(b.begin(), b.end(), idx));
    buckets_[dest].push_back(idx);
  }
  pts_[idx] = to;
}

bool CellList::any_within(const Vec2& p, double dist, int skip) const {
  if (dist <= 0.0 || pts_.empty()) return false;
  if (dist > cell_ * (1.0 + 1e-12))
    throw std::logic_error("CellList::any_within: query distance exceeds cell size");
  const double d2 = dist * dist;
  const int cx = std::clamp(static_cast<int>(std::floor((p.x() - kBoxMin) / cell_)), 0, side_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((p.y() - kBoxMin) / cell_)), 0, side_ - 1);
  for (int dy = -1; dy <= 1; ++dy) {
    const int y = cy + dy;
    if (y < 0 || y >= side_) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = cx + dx;
      if (x < 0 || x >= side_) continue;
      for (int idx : buckets_[static_cast<std::size_t>(y) * side_ + x]) {
        if (idx == skip) continue;
        if ((pts_[idx] - p).squaredNorm() < d2) return true;
      }
    }
  }
  return false;
}

DensitySampler1D::DensitySampler1D(const Field& density) : grid_(density.grid) {
  if (density.v.minCoeff() < 0.0)
    throw std::domain_error("DensitySampler1D: density must be nonnegative");
  const double total = density.v.sum();
  if (!(total > 0.0)) throw std::domain_error("DensitySampler1D: density has no mass");
  cdf_.resize(density.size());
  double acc = 0.0;
  for (int i = 0; i < density.size(); ++i) {
    acc += density.v(i) / total;
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

double DensitySampler1D::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const int i = static_cast<int>(it - cdf_.begin());
  const double lo = i == 0 ? 0.0 : cdf_[i - 1];
  const double frac = (u - lo) / std::max(cdf_[i] - lo, 1e-300);
  return grid_.x_min + (i + frac) * grid_.h();
}

Eigen::Matrix2Xd place_obstacles(const Field& b, int n_blue, double diam_blue, Rng& rng,
                                 bool blue_overlap_check, long budget) {
  if (n_blue < 0) throw std::invalid_argument("place_obstacles: n_blue must be >= 0");
  Eigen::Matrix2Xd out(2, n_blue);
  if (n_blue == 0) return out;
  if (budget < 0) budget = default_budget(n_blue);
  const DensitySampler1D sampler(b);
  CellList placed(diam_blue);

  long tries = 0;
  while (placed.size() < n_blue) {
    if (++tries > budget)
      throw std::runtime_error("place_obstacles: rejection budget exceeded after " +
                               std::to_string(tries - 1) + " draws");
    const Vec2 cand(sampler.sample(rng), rng.uniform(kBoxMin, kBoxMax));
    if (blue_overlap_check && placed.any_within(cand, diam_blue)) continue;
    placed.add(cand);
  }
  for (int k = 0; k < n_blue; ++k) out.col(k) = placed.point(k);
  return out;
}

namespace {

Eigen::Matrix2Xd sample_reds(const DensitySampler1D* sampler, int n_red,
                             const Eigen::Matrix2Xd& obstacles, Rng& rng, double diam_red,
                             double diam_blue, long budget) {
  if (n_red < 0) throw std::invalid_argument("red sampler: n_red must be >= 0");
  if (budget < 0) budget = default_budget(n_red);
  const double rb = 0.5 * (diam_red + diam_blue);
  CellList obs(rb);
  obs.rebuild(obstacles);
  CellList reds(diam_red);

  long tries = 0;
  while (reds.size() < n_red) {
    if (++tries > budget)
      throw std::runtime_error("red sampler: rejection budget exceeded");
    const double x = sampler ? sampler->sample(rng) : rng.uniform(kBoxMin, kBoxMax);
    const Vec2 cand(x, rng.uniform(kBoxMin, kBoxMax));
    if (obs.any_within(cand, rb)) continue;
    if (reds.any_within(cand, diam_red)) continue;
    reds.add(cand);
  }
  Eigen::Matrix2Xd out(2, n_red);
  for (int k = 0; k < n_red; ++k) out.col(k) = reds.point(k);
  return out;
}

}  // namespace

Eigen::Matrix2Xd sample_initial_first_order(const Field& b, const ModelParams& p, int n_red,
                                            const Eigen::Matrix2Xd& obstacles, Rng& rng,
                                            double diam_red, double diam_blue, long budget) {
  Field density(b.grid, 1.0 + p.eps3 * (1.0 - b.v));
  if (density.v.minCoeff() < 0.0)
    throw std::domain_error("sample_initial_first_order: 1 + eps3(1-b) is negative somewhere");
  const DensitySampler1D sampler(density);
  return sample_reds(&sampler, n_red, obstacles, rng, diam_red, diam_blue, budget);
}

Eigen::Matrix2Xd sample_initial_uniform(int n_red, const Eigen::Matrix2Xd& obstacles, Rng& rng,
                                        double diam_red, double diam_blue, long budget) {
  return sample_reds(nullptr, n_red, obstacles, rng, diam_red, diam_blue, budget);
}

HardSphereSim::HardSphereSim(ParticleEnsemble e)
    : ens_(std::move(e)),
      reds_(ens_.red_red_cutoff()),
      obstacles_(ens_.red_blue_cutoff()) {
  reds_.rebuild(ens_.red);
  obstacles_.rebuild(ens_.obstacles);
}

bool HardSphereSim::position_feasible(const Vec2& p, int moving_red) const {
  if (!inside_box(p)) return false;
  if (obstacles_.any_within(p, ens_.red_blue_cutoff())) return false;
  if (reds_.any_within(p, ens_.red_red_cutoff(), moving_red)) return false;
  return true;
}

bool HardSphereSim::try_move(int red_index, const Vec2& to) {
  if (!position_feasible(to, red_index)) return false;
  reds_.move(red_index, to);
  ens_.red.col(red_index) = to;
  return true;
}

int HardSphereSim::brownian_sweep(double dt, Rng& rng) {
  const double sigma = std::sqrt(2.0 * dt);
  int accepted = 0;
  for (int i = 0; i < ens_.red.cols(); ++i) {
    const Vec2 prop = Vec2(ens_.red.col(i)) + sigma * Vec2(rng.normal(), rng.normal());
    if (try_move(i, prop)) ++accepted;
  }
  return accepted;
}

int HardSphereSim::mh_move(double step_std, Rng& rng) {
  const int i = rng.uniform_int(static_cast<int>(ens_.red.cols()));
  const Vec2 prop = Vec2(ens_.red.col(i)) + step_std * Vec2(rng.normal(), rng.normal());
  return try_move(i, prop) ? 1 : 0;
}

void brownian_step(ParticleEnsemble& e, double dt, Rng& rng) {
  HardSphereSim sim(e);
  sim.brownian_sweep(dt, rng);
  e.red = sim.ensemble().red;
}

namespace {

Eigen::ArrayXd bin_density(const Eigen::Matrix2Xd& pts, int n_bins) {
  Eigen::ArrayXd dens = Eigen::ArrayXd::Zero(n_bins);
  const double w = (kBoxMax - kBoxMin) / n_bins;
  for (int i = 0; i < pts.cols(); ++i) {
    int bin = static_cast<int>(std::floor((pts(0, i) - kBoxMin) / w));
    bin = std::clamp(bin, 0, n_bins - 1);
    dens(bin) += 1.0;
  }
  if (pts.cols() > 0) dens /= pts.cols() * w;
  return dens;
}

Eigen::ArrayXd bin_centers(int n_bins) {
  const double w = (kBoxMax - kBoxMin) / n_bins;
  Eigen::ArrayXd c(n_bins);
  for (int i = 0; i < n_bins; ++i) c(i) = kBoxMin + (i + 0.5) * w;
  return c;
}

Histogram reduce_histograms(const std::vector<Eigen::ArrayXd>& per_realization, int n_bins) {
  Histogram h;
  h.centers = bin_centers(n_bins);
  h.realizations = static_cast<long>(per_realization.size());
  Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(n_bins);
  for (const auto& d : per_realization) mean += d;
  mean /= std::max<long>(h.realizations, 1);
  Eigen::ArrayXd var = Eigen::ArrayXd::Zero(n_bins);
  for (const auto& d : per_realization) var += (d - mean).square();
  if (h.realizations > 1) var /= h.realizations - 1;
  h.mean = mean;
  h.std_err = (var / std::max<long>(h.realizations, 1)).sqrt();
  return h;
}

template <class Work>
void run_realizations(long realizations, int threads, Work&& work) {
  if (threads <= 1) {
    for (long k = 0; k < realizations; ++k) work(k);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t]() {
      for (long k = t; k < realizations; k += threads) work(k);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

namespace {

// Exact bin averages of a piecewise-constant field; works for any grid size.
Eigen::ArrayXd bin_average_field(const Field& f, int n_bins) {
  const double w = (kBoxMax - kBoxMin) / n_bins;
  const double h = f.grid.h();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n_bins);
  for (int i = 0; i < f.size(); ++i) {
    const double x0 = f.grid.x_min + i * h;
    const double x1 = x0 + h;
    int b0 = std::clamp(static_cast<int>(std::floor((x0 - kBoxMin) / w)), 0, n_bins - 1);
    int b1 = std::clamp(static_cast<int>(std::floor((x1 - kBoxMin) / w - 1e-12)), 0, n_bins - 1);
    for (int b = b0; b <= b1; ++b) {
      const double lo = std::max(x0, kBoxMin + b * w);
      const double hi = std::min(x1, kBoxMin + (b + 1) * w);
      if (hi > lo) out(b) += f.v(i) * (hi - lo);
    }
  }
  return out / w;
}

}  // namespace

double histogram_l2_distance(const Histogram& hist, const Field& reference) {
  const int n_bins = static_cast<int>(hist.mean.size());
  const Eigen::ArrayXd ref_binned = bin_average_field(reference, n_bins);
  const double w = (kBoxMax - kBoxMin) / n_bins;
  return std::sqrt(w * (hist.mean - ref_binned).square().sum());
}

double histogram_l2_distance_err(const Histogram& hist, const Field& reference) {
  const int n_bins = static_cast<int>(hist.mean.size());
  const Eigen::ArrayXd ref_binned = bin_average_field(reference, n_bins);
  const double w = (kBoxMax - kBoxMin) / n_bins;
  const double d = histogram_l2_distance(hist, reference);
  if (d <= 0.0) return hist.std_err.maxCoeff();
  const double s = ((hist.mean - ref_binned) * hist.std_err).square().sum();
  return w * std::sqrt(s) / d;
}

std::vector<Histogram> simulate_ensemble(const ModelParams& p, const Field& b,
                                         const HistogramSpec& spec, InitialSampler init) {
  if (spec.realizations < 1)
    throw std::invalid_argument("simulate_ensemble: need at least one realization");
  std::vector<double> times = spec.output_times;
  std::sort(times.begin(), times.end());
  // default step: (0.5 diam_red)^2 / 2, a mean diffusive hop of half a diameter
  const double dt =
      spec.dt > 0.0 ? spec.dt : (0.5 * p.diam_red) * (0.5 * p.diam_red) / 2.0;
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_ensemble: dt underdetermined");

  // one shared obstacle draw when redraws are disabled
  Eigen::Matrix2Xd shared_obstacles;
  if (!spec.redraw_obstacles) {
    Rng rng = Rng::stream(spec.seed, 0xb1ce);
    shared_obstacles =
        place_obstacles(b, p.n_blue, p.diam_blue, rng, spec.blue_overlap_check);
  }

  std::vector<std::vector<Eigen::ArrayXd>> per_time(times.size());
  for (auto& v : per_time) v.resize(spec.realizations);

  std::vector<std::string> failures(spec.realizations);
  run_realizations(spec.realizations, spec.threads, [&](long k) {
    try {
      Rng rng = Rng::stream(spec.seed, static_cast<std::uint64_t>(k));
      ParticleEnsemble ens;
      ens.diam_red = p.diam_red;
      ens.diam_blue = p.diam_blue;
      ens.seed = spec.seed;
      ens.obstacles = spec.redraw_obstacles
                          ? place_obstacles(b, p.n_blue, p.diam_blue, rng,
                                            spec.blue_overlap_check)
                          : shared_obstacles;
      ens.red = init == InitialSampler::first_order
                    ? sample_initial_first_order(b, p, p.n_red, ens.obstacles, rng, p.diam_red,
                                                 p.diam_blue)
                    : sample_initial_uniform(p.n_red, ens.obstacles, rng, p.diam_red,
                                             p.diam_blue);
      HardSphereSim sim(std::move(ens));
      double t = 0.0;
      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const long steps = std::lround((times[ti] - t) / dt);
        for (long s = 0; s < steps; ++s) sim.brownian_sweep(dt, rng);
        t += steps * dt;
        per_time[ti][k] = bin_density(sim.ensemble().red, spec.n_bins);
      }
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  });
  for (long k = 0; k < spec.realizations; ++k)
    if (!failures[k].empty())
      throw std::runtime_error("simulate_ensemble: realization " + std::to_string(k) +
                               " failed: " + failures[k]);

  std::vector<Histogram> out;
  out.reserve(times.size());
  for (auto& v : per_time) out.push_back(reduce_histograms(v, spec.n_bins));
  return out;
}

Histogram obstacle_histogram(const Field& b, const ModelParams& p, int n_bins,
                             long realizations, std::uint64_t seed, bool blue_overlap_check,
                             int threads) {
  std::vector<Eigen::ArrayXd> per(realizations);
  std::vector<std::string> failures(realizations);
  run_realizations(realizations, threads, [&](long k) {
    try {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
      const Eigen::Matrix2Xd obs =
          place_obstacles(b, p.n_blue, p.diam_blue, rng, blue_overlap_check);
      per[k] = bin_density(obs, n_bins);
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  });
  for (long k = 0; k < realizations; ++k)
    if (!failures[k].empty())
      throw std::runtime_error("obstacle_histogram: realization " + std::to_string(k) +
                               " failed: " + failures[k]);
  return reduce_histograms(per, n_bins);
}

MhResult metropolis_stationary(const ModelParams& p, const Field& b, const MhSpec& spec) {
  if (spec.realizations < 1)
    throw std::invalid_argument("metropolis_stationary: need at least one realization");
  if (spec.burn_in >= spec.moves)
    throw std::invalid_argument("metropolis_stationary: burn_in must be below moves");

  std::vector<Eigen::ArrayXd> per(spec.realizations);
  std::vector<double> acc(spec.realizations, 0.0), sig(spec.realizations, 0.0);
  std::vector<std::string> failures(spec.realizations);

  run_realizations(spec.realizations, spec.threads, [&](long k) {
    try {
      Rng rng = Rng::stream(spec.seed, static_cast<std::uint64_t>(k));
      ParticleEnsemble ens;
      ens.diam_red = p.diam_red;
      ens.diam_blue = p.diam_blue;
      ens.seed = spec.seed;
      ens.obstacles = place_obstacles(b, p.n_blue, p.diam_blue, rng, spec.blue_overlap_check);
      ens.red = sample_initial_first_order(b, p, p.n_red, ens.obstacles, rng, p.diam_red,
                                           p.diam_blue);
      HardSphereSim sim(std::move(ens));

      double sigma = spec.initial_step;
      long block_accepted = 0;
      long block_index = 0;
      long post_accepted = 0, post_total = 0;
      Eigen::ArrayXd accum = Eigen::ArrayXd::Zero(spec.n_bins);
      long samples = 0;

      for (long m = 1; m <= spec.moves; ++m) {
        const int a = sim.mh_move(sigma, rng);
        if (m <= spec.burn_in) {
          block_accepted += a;
          if (m % spec.tune_block == 0) {
            ++block_index;
            const double rate =
                static_cast<double>(block_accepted) / static_cast<double>(spec.tune_block);
            const double gain = 1.5 / std::pow(static_cast<double>(block_index), 0.6);
            sigma *= std::exp(gain * (rate - spec.target_acceptance));
            block_accepted = 0;
            if (sigma < 1e-7 || sigma > 4.0)
              throw std::runtime_error(
                  "metropolis_stationary: tuner diverged, last proposal std = " +
                  std::to_string(sigma));
          }
        } else {
          post_accepted += a;
          ++post_total;
          if (post_total % spec.sample_stride == 0) {
            accum += bin_density(sim.ensemble().red, spec.n_bins);
            ++samples;
          }
        }
      }
      if (samples == 0)
        throw std::runtime_error("metropolis_stationary: no samples collected");
      per[k] = accum / samples;
      acc[k] = static_cast<double>(post_accepted) / static_cast<double>(post_total);
      sig[k] = sigma;
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  });
  for (long k = 0; k < spec.realizations; ++k)
    if (!failures[k].empty())
      throw std::runtime_error("metropolis_stationary: realization " + std::to_string(k) +
                               " failed: " + failures[k]);

  MhResult out;
  out.histogram = reduce_histograms(per, spec.n_bins);
  for (long k = 0; k < spec.realizations; ++k) {
    out.acceptance += acc[k];
    out.step_std += sig[k];
  }
  out.acceptance /= spec.realizations;
  out.step_std /= spec.realizations;
  return out;
}

}  // namespace agf
