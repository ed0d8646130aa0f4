#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace agf {

// Uniform cell-centered mesh on [x_min, x_max].
struct Grid1D {
  int n_cells = 1000;
  double x_min = -0.5;
  double x_max = 0.5;

  Grid1D() = default;
  Grid1D(int n, double a = -0.5, double b = 0.5) : n_cells(n), x_min(a), x_max(b) {
    if (n_cells < 1 || !(x_max > x_min)) throw std::invalid_argument("Grid1D: bad extents");
  }

  double h() const { return (x_max - x_min) / n_cells; }
  double center(int i) const { return x_min + (i + 0.5) * h(); }
  Eigen::ArrayXd centers() const {
    const double dx = h();
    return Eigen::ArrayXd::LinSpaced(n_cells, x_min + 0.5 * dx, x_max - 0.5 * dx);
  }

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.n_cells == b.n_cells && a.x_min == b.x_min && a.x_max == b.x_max;
  }
};

// Cell-averaged scalar field on a Grid1D.
struct Field {
  Grid1D grid;
  Eigen::ArrayXd v;

  Field() = default;
  Field(Grid1D g, Eigen::ArrayXd values) : grid(g), v(std::move(values)) {
    if (v.size() != grid.n_cells) throw std::invalid_argument("Field: value count != n_cells");
  }

  static Field constant(const Grid1D& g, double value) {
    return Field(g, Eigen::ArrayXd::Constant(g.n_cells, value));
  }

  template <class F>
  static Field sample(const Grid1D& g, F&& f) {
    Eigen::ArrayXd vals(g.n_cells);
    for (int i = 0; i < g.n_cells; ++i) vals(i) = f(g.center(i));
    return Field(g, std::move(vals));
  }

  int size() const { return static_cast<int>(v.size()); }
  double mass() const { return grid.h() * v.sum(); }
  double min() const { return v.minCoeff(); }
  double max() const { return v.maxCoeff(); }
  bool finite() const { return v.allFinite(); }

  // Scales to unit mass; returns the factor that was applied.
  double normalize() {
    const double m = mass();
    if (!(m > 0) || !std::isfinite(m)) throw std::domain_error("Field::normalize: non-positive mass");
    v /= m;
    return 1.0 / m;
  }
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("fields live on different grids");
}

// Cell-width weighted L2 norm.
inline double l2_norm(const Field& f) { return std::sqrt(f.grid.h() * f.v.square().sum()); }

inline double l2_distance(const Field& a, const Field& b) {
  require_same_grid(a, b);
  return std::sqrt(a.grid.h() * (a.v - b.v).square().sum());
}

inline double linf_distance(const Field& a, const Field& b) {
  require_same_grid(a, b);
  return (a.v - b.v).abs().maxCoeff();
}

// Restriction by exact cell averaging; fine.n_cells must be a multiple of coarse.n_cells.
inline Field cell_average_to(const Field& fine, const Grid1D& coarse) {
  if (fine.grid.n_cells % coarse.n_cells != 0 || fine.grid.x_min != coarse.x_min ||
      fine.grid.x_max != coarse.x_max)
    throw std::invalid_argument("cell_average_to: grids not nested");
  const int ratio = fine.grid.n_cells / coarse.n_cells;
  Eigen::ArrayXd out(coarse.n_cells);
  for (int i = 0; i < coarse.n_cells; ++i) out(i) = fine.v.segment(i * ratio, ratio).mean();
  return Field(coarse, std::move(out));
}

}  // namespace agf
