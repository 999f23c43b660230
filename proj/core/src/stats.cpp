#include "psephos/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace psephos::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty data");
  const std::size_t n = xs.size();
  auto mid = xs.begin() + n / 2;
  std::nth_element(xs.begin(), mid, xs.end());
  if (n % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(xs.begin(), mid);
  return 0.5 * (lo + hi);
}

double scaled_mad(const std::vector<double>& xs) {
  double med = median(xs);
  std::vector<double> dev(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = std::fabs(xs[i] - med);
  return 1.4826 * median(std::move(dev));
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("pearson_r needs two equal-length samples");
  double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double percentile_nearest_rank(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("percentile of empty data");
  if (p <= 0.0 || p > 100.0) throw std::invalid_argument("percentile p out of (0, 100]");
  const auto n = static_cast<double>(xs.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::max<std::size_t>(rank, 1);
  auto it = xs.begin() + (rank - 1);
  std::nth_element(xs.begin(), it, xs.end());
  return *it;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty data");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

double silverman_bandwidth(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double sd = sample_sd(xs);
  double iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(xs.size()), -0.2);
}

KdeMode kde_mode(const std::vector<double>& xs, int grid_points) {
  if (xs.empty()) throw std::invalid_argument("kde_mode of empty data");
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it, hi = *hi_it;
  KdeMode result;
  result.bandwidth = silverman_bandwidth(xs);
  if (lo == hi || result.bandwidth <= 0.0) {
    // Degenerate sample: the common value is the mode.
    result.mode = lo;
    result.density = 1.0;
    return result;
  }

  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  const double h = result.bandwidth;
  const double window = 8.0 * h;  // contributions beyond 8h are below 1e-13
  const double norm = 1.0 / (static_cast<double>(xs.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  double best = -1.0, best_x = lo;
  for (int g = 0; g < grid_points; ++g) {
    double x = lo + (hi - lo) * static_cast<double>(g) / (grid_points - 1);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - window);
    auto last = std::upper_bound(sorted.begin(), sorted.end(), x + window);
    double dens = 0.0;
    for (auto it = first; it != last; ++it) {
      double z = (x - *it) / h;
      dens += std::exp(-0.5 * z * z);
    }
    dens *= norm;
    if (dens > best) {  // strict: ties keep the smaller grid value
      best = dens;
      best_x = x;
    }
  }
  result.mode = best_x;
  result.density = best;
  return result;
}

double chi_square_critical(int dof, double alpha) {
  if (dof <= 0) throw std::invalid_argument("chi_square_critical dof must be positive");
  // Wilson-Hilferty cube approximation with inverse-normal via
  // Beasley-Springer-Moro on the upper tail.
  auto inv_normal = [](double p) {
    // Moro's approximation, |error| < 3e-9 over (1e-12, 1-1e-12).
    static const double a[4] = {2.50662823884, -18.61500062529, 41.39119773534,
                                -25.44106049637};
    static const double b[4] = {-8.47351093090, 23.08336743743, -21.06224101826,
                                3.13082909833};
    static const double c[9] = {0.3374754822726147, 0.9761690190917186,
                                0.1607979714918209, 0.0276438810333863,
                                0.0038405729373609, 0.0003951896511919,
                                0.0000321767881768, 0.0000002888167364,
                                0.0000003960315187};
    double y = p - 0.5;
    if (std::fabs(y) < 0.42) {
      double r = y * y;
      return y * (((a[3] * r + a[2]) * r + a[1]) * r + a[0]) /
             ((((b[3] * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
    }
    double r = p;
    if (y > 0) r = 1.0 - p;
    r = std::log(-std::log(r));
    double x = c[0];
    double rp = 1.0;
    for (int i = 1; i < 9; ++i) {
      rp *= r;
      x += c[i] * rp;
    }
    return y < 0 ? -x : x;
  };
  double z = inv_normal(1.0 - alpha);
  double d = static_cast<double>(dof);
  double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
  return d * t * t * t;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace psephos::stats
