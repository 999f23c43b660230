#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "psephos/fingerprint.hpp"
#include "psephos/ingest.hpp"
#include "psephos/stats.hpp"
#include "psephos/synth.hpp"
#include "test_util.hpp"

using namespace psephos;
using testutil::make_box;
using testutil::make_round;

TEST_SUITE("fingerprint") {

TEST_CASE("single box lands in the expected bin") {
  // turnout 0.5, share 0.5, 100 bins -> bin (50, 50), 0-indexed
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 50, {25})});
  auto fp = raw_fingerprint(round, "E", 100);
  CHECK(fp.at(50, 50) == 1);
  CHECK(fp.n_boxes == 1);
  std::int64_t total = std::accumulate(fp.grid.begin(), fp.grid.end(), std::int64_t{0});
  CHECK(total == 1);
}

TEST_CASE("identical boxes pile into one bin; exact 1.0 uses the last bin") {
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 50, {25}),
                                  make_box("b2", "p", "d", "c", 100, 50, {25}),
                                  make_box("b3", "p", "d", "c", 80, 80, {80})});
  auto fp = raw_fingerprint(round, "E", 100);
  CHECK(fp.at(50, 50) == 2);
  CHECK(fp.at(99, 99) == 1);  // turnout 1.0, share 1.0
}

TEST_CASE("unknown candidate is an error") {
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 50, {25})});
  CHECK_THROWS_AS(raw_fingerprint(round, "Z", 100), std::out_of_range);
  CHECK_THROWS_AS(raw_fingerprint(round, "E", 1), std::invalid_argument);
}

TEST_CASE("synthetic fair sample: grid matches brute-force rebinning exactly "
          "and marginals pass a chi-square test against the generator") {
  SynthSpec spec;
  spec.n_boxes = 10000;
  spec.seed = 2024;
  spec.county_sd = 0.0;  // flat fair model so the marginal law is known
  spec.electorate_log_mean = std::log(800.0);
  spec.electorate_log_sd = 0.25;
  spec.electorate_min = 50;
  auto round = generate(spec);
  const int bins = 100;
  auto fp = raw_fingerprint(round, "E", bins);
  CHECK(fp.n_boxes == spec.n_boxes);

  // Oracle 1: brute-force binning of the same sample.
  std::vector<std::int64_t> brute(static_cast<std::size_t>(bins) * bins, 0);
  for (const auto& box : round.boxes) {
    double t = double(box.valid_votes) / double(box.electorate);
    double v = double(box.votes[0]) / double(box.valid_votes);
    int col = std::min(int(t * bins), bins - 1);
    int row = std::min(int(v * bins), bins - 1);
    ++brute[std::size_t(row) * bins + col];
  }
  CHECK(brute == fp.grid);

  // Oracle 2: chi-square of each marginal against the truncated Gaussian the
  // generator draws from, alpha = 0.01, low-expectation bins merged.
  auto chi_square_ok = [&](bool turnout_axis, double mu, double sigma) {
    std::vector<std::int64_t> marginal(bins, 0);
    for (int row = 0; row < bins; ++row)
      for (int col = 0; col < bins; ++col)
        marginal[turnout_axis ? col : row] += fp.at(row, col);

    auto z = [&](double x) { return (x - mu) / sigma; };
    double mass = stats::normal_cdf(z(1.0)) - stats::normal_cdf(z(0.0));
    double stat = 0.0;
    int cells = 0;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (int b = 0; b < bins; ++b) {
      double lo = double(b) / bins, hi = double(b + 1) / bins;
      double expect =
          spec.n_boxes * (stats::normal_cdf(z(hi)) - stats::normal_cdf(z(lo))) / mass;
      obs_acc += double(marginal[b]);
      exp_acc += expect;
      if (exp_acc < 5.0) continue;  // merge sparse bins
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
      obs_acc = exp_acc = 0.0;
    }
    if (exp_acc > 0) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++cells;
    }
    double critical = stats::chi_square_critical(cells - 1, 0.01);
    INFO("chi2 stat ", stat, " critical ", critical, " cells ", cells);
    return stat < critical;
  };
  CHECK(chi_square_ok(true, spec.turnout_mean, spec.turnout_sd));
  CHECK(chi_square_ok(false, spec.candidates[0].share_mean, spec.candidates[0].share_sd));
}

TEST_CASE("permutation invariance of fingerprints and curves") {
  SynthSpec spec;
  spec.n_boxes = 2000;
  spec.seed = 5;
  auto round = generate(spec);
  auto shuffled = round;
  std::mt19937 gen(99);
  std::shuffle(shuffled.boxes.begin(), shuffled.boxes.end(), gen);

  CHECK(raw_fingerprint(round, "E", 50).grid == raw_fingerprint(shuffled, "E", 50).grid);
  CHECK(standardized_fingerprint(round, "E", 40).grid ==
        standardized_fingerprint(shuffled, "E", 40).grid);
  CHECK(cumulative_turnout_curve(round, "E").points ==
        cumulative_turnout_curve(shuffled, "E").points);
  CHECK(rank_cumulative_curve(round, "E").points ==
        rank_cumulative_curve(shuffled, "E").points);
}

TEST_CASE("standardized: identical boxes in a county map to (1,1)") {
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 80, {40}),
                                  make_box("b2", "p", "d", "c", 100, 80, {40}),
                                  make_box("b3", "p", "d", "c", 100, 80, {40})});
  auto points = standardize(round, "E");
  for (std::size_t i = 0; i < points.turnout_ratio.size(); ++i) {
    CHECK(points.turnout_ratio[i] == doctest::Approx(1.0));
    CHECK(points.share_ratio[i] == doctest::Approx(1.0));
  }
  // all three boxes land together at the ratio-1 boundary; each axis may
  // round one ulp below it
  auto fp = standardized_fingerprint(round, "E", 80);
  CHECK(fp.at(40, 40) + fp.at(39, 39) + fp.at(40, 39) + fp.at(39, 40) == 3);
  CHECK(fp.standardized);
}

TEST_CASE("standardized: a box at twice the county mean maps to (2,2) in the last bin") {
  // County means: turnout 0.3, share 0.25; the hot box sits at (0.6, 0.5).
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 60, {30}),
                                  make_box("b2", "p", "d", "c", 100, 20, {2}),
                                  make_box("b3", "p", "d", "c", 100, 10, {1})});
  // means: t = (0.6+0.2+0.1)/3 = 0.3, v = (0.5+0.1+0.1)/3 = 0.2333...
  auto points = standardize(round, "E");
  CHECK(points.turnout_ratio[0] == doctest::Approx(2.0));
  CHECK(points.share_ratio[0] == doctest::Approx(0.5 / (0.7 / 3)));
  auto fp = standardized_fingerprint(round, "E", 80);
  std::int64_t total = std::accumulate(fp.grid.begin(), fp.grid.end(), std::int64_t{0});
  CHECK(total == 3);
  CHECK(fp.at(79, 79) >= 1);  // the (>=2,>=2) box clamps into the last bin
}

TEST_CASE("standardized: all-singleton grouping self-normalizes to exactly (1,1)") {
  // Every box is alone at every level, so even with parent fallback the
  // group mean is the box itself.
  auto round = make_round({"E"}, {make_box("b1", "p1", "d1", "c1", 100, 80, {40}),
                                  make_box("b2", "p2", "d2", "c2", 200, 100, {10}),
                                  make_box("b3", "p3", "d3", "c3", 300, 150, {90})});
  auto points = standardize(round, "E");
  REQUIRE(points.turnout_ratio.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(points.turnout_ratio[i] == 1.0);
    CHECK(points.share_ratio[i] == 1.0);
  }
}

TEST_CASE("standardized: singleton county falls back to the district mean") {
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c1", 100, 80, {40}),
                                  make_box("b2", "p", "d", "c2", 100, 40, {20}),
                                  make_box("b3", "p", "d", "c2", 100, 40, {20})});
  StandardizeOptions fallback_on;
  auto points = standardize(round, "E", fallback_on);
  // b1 is alone in c1; with fallback its reference is the district mean
  // turnout (0.8+0.4+0.4)/3, not itself.
  CHECK(points.turnout_ratio[0] == doctest::Approx(0.8 / (1.6 / 3)));

  StandardizeOptions fallback_off;
  fallback_off.fallback_parent = false;
  auto self_points = standardize(round, "E", fallback_off);
  CHECK(self_points.turnout_ratio[0] == 1.0);
}

TEST_CASE("standardized: zero-mean groups are skipped and counted") {
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 80, {0}),
                                  make_box("b2", "p", "d", "c", 100, 80, {0}),
                                  make_box("b3", "p", "d", "c2", 100, 80, {40}),
                                  make_box("b4", "p", "d", "c2", 100, 80, {40})});
  StandardizeOptions options;
  options.fallback_parent = false;  // keep the zero-share county isolated
  auto points = standardize(round, "E", options);
  CHECK(points.skipped == 2);
  CHECK(points.turnout_ratio.size() == 2);
  auto fp = standardized_fingerprint(round, "E", 80, options);
  CHECK(fp.skipped_boxes == 2);
  CHECK(fp.n_boxes == 2);
}

TEST_CASE("standardized fair election with county heterogeneity: centroid near (1,1)") {
  SynthSpec spec;
  spec.n_boxes = 20000;
  spec.seed = 31;
  spec.county_sd = 0.05;
  auto round = generate(spec);
  auto points = standardize(round, "E");
  REQUIRE(points.skipped == 0);

  // Oracle: recompute county means directly on the sample.
  std::map<std::string, std::array<double, 3>> sums;  // t, v, count
  std::vector<double> ts(round.boxes.size()), vs(round.boxes.size());
  for (std::size_t i = 0; i < round.boxes.size(); ++i) {
    const auto& box = round.boxes[i];
    ts[i] = double(box.valid_votes) / double(box.electorate);
    vs[i] = double(box.votes[0]) / double(box.valid_votes);
    auto& s = sums[box.county_id];
    s[0] += ts[i];
    s[1] += vs[i];
    s[2] += 1;
  }
  double ct = 0, cv = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < round.boxes.size(); ++i) {
    const auto& s = sums[round.boxes[i].county_id];
    if (s[2] < 2) continue;  // singleton counties use the fallback path
    ct += ts[i] / (s[0] / s[2]);
    cv += vs[i] / (s[1] / s[2]);
    ++n;
  }
  ct /= double(n);
  cv /= double(n);
  CHECK(std::fabs(ct - 1.0) < 0.02);
  CHECK(std::fabs(cv - 1.0) < 0.02);

  // Library centroid agrees with the oracle's tolerance.
  double lt = 0, lv = 0;
  for (std::size_t i = 0; i < points.turnout_ratio.size(); ++i) {
    lt += points.turnout_ratio[i];
    lv += points.share_ratio[i];
  }
  lt /= double(points.turnout_ratio.size());
  lv /= double(points.share_ratio.size());
  CHECK(std::fabs(lt - 1.0) < 0.02);
  CHECK(std::fabs(lv - 1.0) < 0.02);
}

TEST_CASE("cumulative turnout curve: single box and national-share terminal value") {
  auto one = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 80, {48})});
  auto curve = cumulative_turnout_curve(one, "E");
  REQUIRE(curve.points.size() == 1);
  CHECK(curve.points[0].first == doctest::Approx(0.8));
  CHECK(curve.points[0].second == doctest::Approx(0.6));

  SynthSpec spec;
  spec.n_boxes = 5000;
  spec.seed = 8;
  auto round = generate(spec);
  auto big = cumulative_turnout_curve(round, "E");
  double national = double(round.total_votes(0)) / double(round.total_valid_votes());
  CHECK(big.points.back().second == doctest::Approx(national).epsilon(1e-12));
  for (std::size_t i = 1; i < big.points.size(); ++i)
    CHECK(big.points[i].first > big.points[i - 1].first);
}

TEST_CASE("rank cumulative curve: constant shares, exact two-box arithmetic, "
          "national terminal value") {
  auto flat = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 50, {20}),
                                 make_box("b2", "p", "d", "c", 200, 100, {40}),
                                 make_box("b3", "p", "d", "c", 300, 200, {80})});
  auto curve = rank_cumulative_curve(flat, "E");
  for (const auto& [rank, share] : curve.points) CHECK(share == doctest::Approx(0.4));

  auto two = make_round({"E"}, {make_box("big", "p", "d", "c", 200, 100, {50}),
                                make_box("small", "p", "d", "c", 100, 50, {50})});
  auto c2 = rank_cumulative_curve(two, "E");
  REQUIRE(c2.points.size() == 2);
  CHECK(c2.points[0].first == 1.0);
  CHECK(c2.points[0].second == doctest::Approx(0.5));
  CHECK(c2.points[1].second == doctest::Approx(100.0 / 150.0));

  SynthSpec spec;
  spec.n_boxes = 3000;
  spec.seed = 12;
  auto round = generate(spec);
  auto rc = rank_cumulative_curve(round, "E");
  double national = double(round.total_votes(0)) / double(round.total_valid_votes());
  CHECK(rc.points.back().second == doctest::Approx(national).epsilon(1e-12));
}

TEST_CASE("hockey stick: small boxes with inflated shares bend the tail upward") {
  std::vector<BallotBox> boxes;
  for (int i = 0; i < 900; ++i)
    boxes.push_back(make_box("big" + std::to_string(i), "p", "d", "c", 1000, 500, {200}));
  for (int i = 0; i < 100; ++i)
    boxes.push_back(make_box("sml" + std::to_string(i), "p", "d", "c", 100, 50, {45}));
  auto round = make_round({"E"}, boxes);
  auto curve = rank_cumulative_curve(round, "E");

  // Oracle: brute-force cumulative sums on the same ordering.
  std::vector<std::pair<std::int64_t, std::pair<std::int64_t, std::int64_t>>> order;
  for (const auto& box : round.boxes)
    order.push_back({-box.electorate, {box.votes[0], box.valid_votes}});
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::int64_t votes = 0, valid = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    votes += order[i].second.first;
    valid += order[i].second.second;
    CHECK(curve.points[i].second ==
          doctest::Approx(double(votes) / double(valid)).epsilon(1e-12));
  }

  CHECK(curve.points[899].second == doctest::Approx(0.4));
  CHECK(curve.points.back().second > curve.points[899].second);
}

TEST_CASE("heatmap emission: conservation, empty grid, exact round-trip") {
  testutil::TempDir tmp;
  auto round = make_round({"E"}, {make_box("b1", "p", "d", "c", 100, 50, {25}),
                                  make_box("b2", "p", "d", "c", 100, 80, {70}),
                                  make_box("b3", "p", "d", "c", 100, 99, {99})});
  auto fp = raw_fingerprint(round, "E", 20);
  emit_heatmap(fp, tmp.file("fp"));
  auto reparsed = parse_grid_csv(tmp.file("fp") + ".csv");
  CHECK(reparsed.grid == fp.grid);
  CHECK(reparsed.n_boxes == 3);

  Fingerprint empty;
  empty.bins = 10;
  empty.grid.assign(100, 0);
  empty.x_edges.resize(11);
  empty.y_edges.resize(11);
  for (int i = 0; i <= 10; ++i) empty.x_edges[i] = empty.y_edges[i] = i / 10.0;
  emit_heatmap(empty, tmp.file("empty"));
  auto zero = parse_grid_csv(tmp.file("empty") + ".csv");
  CHECK(zero.n_boxes == 0);
  CHECK(std::all_of(zero.grid.begin(), zero.grid.end(),
                    [](std::int64_t c) { return c == 0; }));

  // the SVG exists and is self-contained
  auto svg = testutil::read_file(tmp.file("fp") + ".svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

}  // TEST_SUITE
