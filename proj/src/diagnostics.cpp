#include "agf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agf {

double entropy_of(const EntropyPair& pair, const Field& r, const Field& b, const ModelParams& p,
                  double floor) {
  require_same_grid(r, b);
  double sum = 0.0;
  for (int i = 0; i < r.size(); ++i)
    sum += entropy_density(pair, std::max(r.v(i), floor), b.v(i), p);
  return sum * r.grid.h();
}

RelativeEntropy relative_entropy(const EntropyPair& pair, const Field& r, const Field& r_star,
                                 const Field& b, const ModelParams& p, double floor) {
  require_same_grid(r, r_star);
  require_same_grid(r, b);
  RelativeEntropy out;
  double gamma = 0.0;
  for (int i = 0; i < r.size(); ++i) {
    const double us = entropy_variable(pair, std::max(r_star.v(i), floor), b.v(i), p);
    gamma += us * (r.v(i) - r_star.v(i));
  }
  out.gamma = gamma * r.grid.h();
  out.value = entropy_of(pair, r, b, p, floor) - entropy_of(pair, r_star, b, p, floor) - out.gamma;
  return out;
}

double dissipation(const EntropyPair& pair, const Field& r, const Field& b, const ModelParams& p,
                   double floor) {
  require_same_grid(r, b);
  const int n = r.size();
  const double h = r.grid.h();
  Eigen::ArrayXd u(n);
  for (int i = 0; i < n; ++i) u(i) = entropy_variable(pair, std::max(r.v(i), floor), b.v(i), p);
  double sum = 0.0;
  for (int f = 1; f < n; ++f) {
    const int i = f - 1;
    const double gu = (u(i + 1) - u(i)) / h;
    const double rf = 0.5 * (std::max(r.v(i), floor) + std::max(r.v(i + 1), floor));
    const double bf = 0.5 * (b.v(i) + b.v(i + 1));
    sum += mobility(pair, rf, bf, p) * gu * gu;
  }
  return sum * h;
}

RateFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size() || times.empty())
    throw std::invalid_argument("fit_decay_rate: mismatched or empty series");
  const double e0 = values.front();
  if (!(e0 > 0.0)) throw std::domain_error("fit_decay_rate: series must start positive");
  const double lo = 1e-8 * e0;
  const double hi = 0.5 * e0;

  std::vector<double> t, y;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > lo && values[i] < hi) {
      t.push_back(times[i]);
      y.push_back(std::log(values[i]));
    }
  if (t.size() < 2) throw std::runtime_error("fit_decay_rate: empty fit window");

  const int n = static_cast<int>(t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += t[i];
    sy += y[i];
    sxx += t[i] * t[i];
    sxy += t[i] * y[i];
    syy += y[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double num = n * sxy - sx * sy;
  const double den = (n * sxx - sx * sx) * (n * syy - sy * sy);
  RateFit fit;
  fit.rate = -slope;
  fit.r_squared = den > 0.0 ? num * num / den : 1.0;
  fit.points = n;
  return fit;
}

EntropySeries entropy_series(const EntropyPair& pair, const std::vector<double>& times,
                             const std::vector<Field>& states, const Field& r_star,
                             const Field& b, const ModelParams& p, double floor) {
  if (times.size() != states.size())
    throw std::invalid_argument("entropy_series: times/states size mismatch");
  EntropySeries s;
  s.times = times;
  for (const Field& r : states) {
    const RelativeEntropy rel = relative_entropy(pair, r, r_star, b, p, floor);
    s.value.push_back(entropy_of(pair, r, b, p, floor));
    s.relative.push_back(rel.value);
    s.gamma.push_back(rel.gamma);
    s.dissipation.push_back(dissipation(pair, r, b, p, floor));
  }
  return s;
}

}  // namespace agf
