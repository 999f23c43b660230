#include <doctest.h>

#include <cmath>

#include "psephos/rng.hpp"
#include "psephos/stats.hpp"

using namespace psephos;

TEST_SUITE("stats") {

TEST_CASE("median and scaled MAD") {
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  // MAD of {1..7} around median 4 is 2, scaled by 1.4826.
  CHECK(stats::scaled_mad({1, 2, 3, 4, 5, 6, 7}) == doctest::Approx(2 * 1.4826));
}

TEST_CASE("nearest-rank percentile") {
  std::vector<double> xs{10, 20, 30, 40, 50};
  CHECK(stats::percentile_nearest_rank(xs, 10) == 10);   // rank ceil(0.5) = 1
  CHECK(stats::percentile_nearest_rank(xs, 20) == 10);   // rank 1
  CHECK(stats::percentile_nearest_rank(xs, 50) == 30);   // rank 3
  CHECK(stats::percentile_nearest_rank(xs, 100) == 50);  // rank 5
}

TEST_CASE("sample sd and pearson") {
  std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(stats::sample_sd(xs) == doctest::Approx(2.138089935).epsilon(1e-9));
  std::vector<double> ys{1, 2, 3, 4};
  std::vector<double> zs{2, 4, 6, 8};
  CHECK(stats::pearson_r(ys, zs) == doctest::Approx(1.0));
  std::vector<double> ws{4, 3, 2, 1};
  CHECK(stats::pearson_r(ys, ws) == doctest::Approx(-1.0));
}

TEST_CASE("kde mode: identical values return that value") {
  std::vector<double> xs(200, 0.03);
  CHECK(stats::kde_mode(xs).mode == 0.03);
}

TEST_CASE("kde mode: symmetric gaussian lands near its center") {
  // Oracle: the generating mean (0.05); the sample mean gives a cross-check.
  Rng rng(99);
  std::vector<double> xs(10000);
  double sum = 0;
  for (auto& x : xs) {
    x = 0.05 + 0.02 * rng.next_gaussian();
    sum += x;
  }
  double sample_mean = sum / xs.size();
  double mode = stats::kde_mode(xs).mode;
  CHECK(std::fabs(mode - 0.05) < 0.005);
  CHECK(std::fabs(mode - sample_mean) < 0.005);
}

TEST_CASE("kde mode: bimodal sample picks the dominant component") {
  Rng rng(7);
  std::vector<double> xs;
  xs.reserve(10000);
  for (int i = 0; i < 9000; ++i) xs.push_back(0.0 + 0.01 * rng.next_gaussian());
  for (int i = 0; i < 1000; ++i) xs.push_back(0.5 + 0.01 * rng.next_gaussian());

  // Oracle: a direct histogram of the sample must peak near 0 as well.
  int bins = 100;
  std::vector<int> hist(bins, 0);
  double lo = -0.1, hi = 0.6;
  for (double x : xs) {
    int b = std::clamp(static_cast<int>((x - lo) / (hi - lo) * bins), 0, bins - 1);
    ++hist[b];
  }
  int argmax = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  double hist_peak = lo + (hi - lo) * (argmax + 0.5) / bins;
  CHECK(std::fabs(hist_peak) < 0.05);

  double mode = stats::kde_mode(xs).mode;
  CHECK(std::fabs(mode) < 0.05);
}

TEST_CASE("silverman bandwidth positive and shrinking in n") {
  Rng rng(3);
  std::vector<double> small(100), large(10000);
  for (auto& x : small) x = rng.next_gaussian();
  for (auto& x : large) x = rng.next_gaussian();
  double h_small = stats::silverman_bandwidth(small);
  double h_large = stats::silverman_bandwidth(large);
  CHECK(h_small > 0);
  CHECK(h_large > 0);
  CHECK(h_large < h_small);
}

TEST_CASE("chi-square critical value approximation") {
  // Reference values: chi2inv(0.99, 10) = 23.209, chi2inv(0.99, 60) = 88.379.
  CHECK(stats::chi_square_critical(10, 0.01) == doctest::Approx(23.209).epsilon(0.01));
  CHECK(stats::chi_square_critical(60, 0.01) == doctest::Approx(88.379).epsilon(0.01));
}

TEST_CASE("rng determinism and ranges") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    double u = c.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  double t = c.next_trunc_gaussian(0.5, 10.0, 0.0, 1.0);
  CHECK(t >= 0.0);
  CHECK(t <= 1.0);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

}  // TEST_SUITE
