#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "psephos/ingest.hpp"
#include "psephos/rigging.hpp"
#include "psephos/stats.hpp"
#include "psephos/synth.hpp"
#include "test_util.hpp"

using namespace psephos;
using testutil::make_box;
using testutil::make_round;

namespace {

SynthSpec fair_spec(std::uint64_t seed, std::int64_t n = 20000) {
  SynthSpec spec;
  spec.n_boxes = n;
  spec.seed = seed;
  // Keep essentially every box above the electorate-100 analysis filter so
  // percentile sets match between the generator and the filtered test round.
  spec.electorate_log_mean = std::log(400.0);
  spec.electorate_log_sd = 0.4;
  spec.electorate_min = 110;
  spec.turnout_mean = 0.6;
  spec.turnout_sd = 0.08;
  spec.candidates = {{"E", 0.45, 0.1}, {"K", 0.55, 0.1}};
  return spec;
}

double profile_delta(const RiggingProfile& profile, int p) {
  REQUIRE(profile.delta[p - 1].has_value());
  return *profile.delta[p - 1];
}

}  // namespace

TEST_SUITE("rigging") {

TEST_CASE("identical boxes everywhere: delta is zero at every threshold") {
  std::vector<BallotBox> boxes;
  for (int i = 0; i < 400; ++i)
    boxes.push_back(make_box("b" + std::to_string(i), "p", "d", "c" + std::to_string(i / 5),
                             200, 120, {60}));
  auto round = make_round({"E"}, boxes);
  auto profile = displacement_profile(round, "E");
  for (int p = 1; p <= kMaxThreshold; ++p) {
    CHECK(profile.n_small[p - 1] + profile.n_large[p - 1] == 400);
    if (profile.delta[p - 1]) CHECK(*profile.delta[p - 1] == doctest::Approx(0.0));
  }
  // every box has the same electorate, so every p puts all boxes in the
  // small set and the large set is empty: delta undefined
  CHECK_FALSE(profile.delta[9].has_value());
}

TEST_CASE("fair election: small and large units agree within 0.02 at p = 10") {
  auto round = filter_min_electorate(generate(fair_spec(61, 50000)), 100);
  auto profile = displacement_profile(round, "E");
  double d10 = profile_delta(profile, 10);

  // Oracle: direct centroid computation on the standardized sample.
  auto points = standardize(round, "E");
  std::vector<double> sizes;
  for (auto idx : points.box_index) sizes.push_back(double(round.boxes[idx].electorate));
  double cutoff = stats::percentile_nearest_rank(sizes, 10.0);
  double st = 0, sv = 0, lt = 0, lv = 0;
  std::int64_t ns = 0, nl = 0;
  for (std::size_t i = 0; i < points.box_index.size(); ++i) {
    if (sizes[i] <= cutoff) {
      st += points.turnout_ratio[i];
      sv += points.share_ratio[i];
      ++ns;
    } else {
      lt += points.turnout_ratio[i];
      lv += points.share_ratio[i];
      ++nl;
    }
  }
  double dt = st / ns - lt / nl, dv = sv / ns - lv / nl;
  double oracle = std::sqrt(dt * dt + dv * dv) * ((dt + dv) >= 0 ? 1.0 : -1.0);
  CHECK(d10 == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(std::fabs(d10) < 0.02);
}

TEST_CASE("coercion boosts displace small units; raw displacement matches the "
          "analytic value") {
  auto spec = fair_spec(62, 30000);
  auto fair_round = filter_min_electorate(generate(spec), 100);

  auto coerced_spec = spec;
  coerced_spec.coercion = CoercionSpec{10.0, 0.1, 0.1};
  auto coerced_round = filter_min_electorate(generate(coerced_spec), 100);

  // Oracle: raw (unstandardized) centroid displacement of small vs large
  // units should be close to sqrt(0.1^2 + 0.1^2) = 0.1414.
  auto raw_displacement = [](const ElectionRound& round) {
    std::vector<double> sizes;
    for (const auto& box : round.boxes) sizes.push_back(double(box.electorate));
    double cutoff = stats::percentile_nearest_rank(sizes, 10.0);
    double st = 0, sv = 0, lt = 0, lv = 0;
    std::int64_t ns = 0, nl = 0;
    for (const auto& box : round.boxes) {
      double t = double(box.valid_votes) / double(box.electorate);
      double v = double(box.votes[0]) / double(box.valid_votes);
      if (double(box.electorate) <= cutoff) {
        st += t;
        sv += v;
        ++ns;
      } else {
        lt += t;
        lv += v;
        ++nl;
      }
    }
    double dt = st / ns - lt / nl, dv = sv / ns - lv / nl;
    return std::sqrt(dt * dt + dv * dv);
  };
  CHECK(raw_displacement(coerced_round) == doctest::Approx(0.1414).epsilon(0.15));

  auto fair_profile = displacement_profile(fair_round, "E");
  auto coerced_profile = displacement_profile(coerced_round, "E");
  CHECK(profile_delta(coerced_profile, 10) > profile_delta(fair_profile, 10));
  CHECK(profile_delta(coerced_profile, 10) > 0.0);
}

TEST_CASE("sign convention: boosting the small set increases delta at small p") {
  auto spec = fair_spec(63, 20000);
  auto plain = filter_min_electorate(generate(spec), 100);
  auto boosted_spec = spec;
  boosted_spec.coercion = CoercionSpec{10.0, 0.02, 0.02};
  auto boosted = filter_min_electorate(generate(boosted_spec), 100);
  auto p_plain = displacement_profile(plain, "E");
  auto p_boost = displacement_profile(boosted, "E");
  for (int p : {5, 10})
    CHECK(profile_delta(p_boost, p) > profile_delta(p_plain, p));
}

TEST_CASE("delta invariant under id relabeling and global electorate scaling") {
  auto round = filter_min_electorate(generate(fair_spec(64, 8000)), 100);
  auto profile = displacement_profile(round, "E");

  auto relabeled = round;
  for (auto& box : relabeled.boxes) box.box_id = "zz_" + box.box_id;
  auto relabeled_profile = displacement_profile(relabeled, "E");

  auto scaled = round;
  for (auto& box : scaled.boxes) box.electorate *= 3;
  auto scaled_profile = displacement_profile(scaled, "E");

  for (int p = 1; p <= kMaxThreshold; ++p) {
    if (!profile.delta[p - 1]) continue;
    CHECK(profile_delta(relabeled_profile, p) == profile_delta(profile, p));
    CHECK(profile_delta(scaled_profile, p) ==
          doctest::Approx(profile_delta(profile, p)).epsilon(1e-9));
  }
}

TEST_CASE("fair displacement shrinks with sample size (consistency)") {
  double mean_small = 0, mean_large = 0;
  for (std::uint64_t seed : {71, 72, 73, 74, 75}) {
    auto small_round = filter_min_electorate(generate(fair_spec(seed, 5000)), 100);
    auto large_round = filter_min_electorate(generate(fair_spec(seed + 100, 50000)), 100);
    mean_small += std::fabs(profile_delta(displacement_profile(small_round, "E"), 10));
    mean_large += std::fabs(profile_delta(displacement_profile(large_round, "E"), 10));
  }
  INFO("mean |delta(10)| at 5k: ", mean_small / 5, ", at 50k: ", mean_large / 5);
  CHECK(mean_large < mean_small);
}

TEST_CASE("degenerate grouping without fallback is an error") {
  std::vector<BallotBox> boxes;
  for (int i = 0; i < 200; ++i)
    boxes.push_back(make_box("b" + std::to_string(i), "p" + std::to_string(i),
                             "d" + std::to_string(i), "c" + std::to_string(i), 100 + i, 80,
                             {40}));
  auto round = make_round({"E"}, boxes);
  StandardizeOptions options;
  options.fallback_parent = false;
  CHECK_THROWS_AS(displacement_profile(round, "E", options), ValidationError);
}

TEST_CASE("envelope from two copies of one round has zero width; boundary "
          "values are not flagged") {
  auto round = filter_min_electorate(generate(fair_spec(65, 10000)), 100);
  auto profile = displacement_profile(round, "E");
  Envelope envelope = build_envelope({{&round, "E"}, {&round, "E"}});
  for (int p = 1; p <= kMaxThreshold; ++p) {
    if (!envelope.bounds[p - 1]) continue;
    CHECK(envelope.bounds[p - 1]->lower == envelope.bounds[p - 1]->upper);
    CHECK(envelope.bounds[p - 1]->upper == doctest::Approx(profile_delta(profile, p)));
  }
  apply_envelope(profile, envelope);
  // delta == upper everywhere, strict comparison keeps everything unflagged
  CHECK(profile.outside_envelope.empty());
  auto v = verdict(profile);
  CHECK(v.flagged_thresholds.empty());

  CHECK_THROWS_AS(build_envelope({{&round, "E"}}), std::invalid_argument);
  RiggingProfile no_envelope = displacement_profile(round, "E");
  CHECK_THROWS_AS(verdict(no_envelope), std::invalid_argument);
}

TEST_CASE("leave-one-out: a fair election stays inside a 10-reference envelope") {
  // References come from the diverse family (varied regimes and size
  // gradients), as clone references would give a degenerate envelope.
  std::vector<ElectionRound> refs;
  for (std::uint64_t seed = 81; seed < 91; ++seed)
    refs.push_back(filter_min_electorate(generate(make_reference_spec(seed, 20000)), 100));
  std::vector<std::pair<const ElectionRound*, std::string>> ref_pairs;
  for (const auto& ref : refs) ref_pairs.emplace_back(&ref, "E");
  auto envelope = build_envelope(ref_pairs);

  auto holdout = filter_min_electorate(generate(make_reference_spec(95, 20000)), 100);
  auto profile = displacement_profile(holdout, "E");
  apply_envelope(profile, envelope);

  int defined = 0, inside = 0;
  for (int p = 1; p <= kMaxThreshold; ++p) {
    const auto& bound = profile.envelope->bounds[p - 1];
    const auto& delta = profile.delta[p - 1];
    if (!bound || !delta) continue;
    ++defined;
    if (*delta >= bound->lower && *delta <= bound->upper) ++inside;
  }
  REQUIRE(defined >= 40);
  INFO("inside ", inside, " of ", defined);
  CHECK(double(inside) / double(defined) >= 0.95);
}

TEST_CASE("coerced election is flagged at small thresholds against a fair envelope") {
  std::vector<ElectionRound> refs;
  for (std::uint64_t seed = 81; seed < 91; ++seed)
    refs.push_back(filter_min_electorate(generate(make_reference_spec(seed, 20000)), 100));
  std::vector<std::pair<const ElectionRound*, std::string>> ref_pairs;
  for (const auto& ref : refs) ref_pairs.emplace_back(&ref, "E");
  auto envelope = build_envelope(ref_pairs);

  auto coerced_spec = fair_spec(501);
  coerced_spec.coercion = CoercionSpec{10.0, 0.1, 0.1};
  auto coerced = filter_min_electorate(generate(coerced_spec), 100);
  auto profile = displacement_profile(coerced, "E");
  apply_envelope(profile, envelope);
  auto v = verdict(profile);

  REQUIRE_FALSE(v.flagged_thresholds.empty());
  // flags concentrate at small p: the boost hits only the lowest decile, so
  // the signal dilutes as 1/p while the reference spread does not
  int small_flags = 0, large_flags = 0;
  for (int p : v.flagged_thresholds) (p <= 20 ? small_flags : large_flags)++;
  INFO(v.summary);
  CHECK(small_flags > large_flags);
  CHECK(*std::min_element(v.flagged_thresholds.begin(), v.flagged_thresholds.end()) <= 10);

  // the same election without coercion raises no flags
  auto fair = filter_min_electorate(generate(fair_spec(501)), 100);
  auto fair_profile = displacement_profile(fair, "E");
  apply_envelope(fair_profile, envelope);
  CHECK(fair_profile.outside_envelope.empty());
}

TEST_CASE("profile CSV has the documented shape") {
  testutil::TempDir tmp;
  auto round = filter_min_electorate(generate(fair_spec(66, 5000)), 100);
  auto profile = displacement_profile(round, "E");
  apply_envelope(profile, build_envelope({{&round, "E"}, {&round, "E"}}));
  write_profile_csv(profile, tmp.file("p.csv"));
  auto text = testutil::read_file(tmp.file("p.csv"));
  CHECK(text.rfind("p,delta,lower,upper,flagged\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == kMaxThreshold + 1);
}

}  // TEST_SUITE
