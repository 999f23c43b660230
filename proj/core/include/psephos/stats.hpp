#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psephos::stats {

double mean(std::span<const double> xs);
double sample_sd(std::span<const double> xs);  // n-1 denominator; 0 for n < 2
double median(std::vector<double> xs);         // by value: reorders internally

// Median absolute deviation scaled by 1.4826 (consistent for the normal).
double scaled_mad(const std::vector<double>& xs);

double pearson_r(std::span<const double> xs, std::span<const double> ys);

// Nearest-rank percentile: value at rank ceil(p/100 * n) of the sorted data.
// p in (0, 100]; data need not be sorted.
double percentile_nearest_rank(std::vector<double> xs, double p);

// Linear-interpolated quantile (type 7), q in [0, 1].
double quantile(std::vector<double> xs, double q);

// Rule-of-thumb kernel bandwidth: 0.9 * min(sd, iqr/1.34) * n^(-1/5).
double silverman_bandwidth(const std::vector<double>& xs);

struct KdeMode {
  double mode = 0.0;
  double bandwidth = 0.0;
  double density = 0.0;
};

// Gaussian-kernel density estimate on a uniform grid over [min, max];
// returns the argmax, ties broken toward the smaller value.
KdeMode kde_mode(const std::vector<double>& xs, int grid_points = 512);

// Upper critical value of the chi-square distribution (Wilson-Hilferty).
double chi_square_critical(int dof, double alpha);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace psephos::stats
