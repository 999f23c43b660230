#include "psephos/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "psephos/ingest.hpp"
#include "psephos/stats.hpp"

namespace psephos {

namespace {

// Stream tags for derived seeds.
constexpr std::uint64_t kStreamElectorate = 0xE1;
constexpr std::uint64_t kStreamCounty = 0xC0;
constexpr std::uint64_t kStreamBox = 0xB0;
constexpr std::uint64_t kStreamShift = 0x52;

std::string padded_id(char prefix, std::int64_t value, int width) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%0*lld", prefix, width,
                static_cast<long long>(value));
  return buf;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void SynthSpec::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("synth spec: ") + msg);
  };
  need(n_boxes >= 1, "n_boxes must be positive");
  need(electorate_log_sd > 0, "electorate_log_sd must be positive");
  need(electorate_min >= 1, "electorate_min must be at least 1");
  need(turnout_sd > 0, "turnout_sd must be positive");
  need(!candidates.empty(), "at least one candidate required");
  for (const auto& c : candidates) {
    need(!c.id.empty(), "candidate id must be non-empty");
    need(c.share_sd > 0, "candidate share_sd must be positive");
    need(c.share_mean >= 0 && c.share_mean <= 1, "candidate share_mean in [0,1]");
  }
  need(county_sd >= 0, "county_sd must be non-negative");
  need(groups.counties_per_province >= 1, "counties_per_province must be positive");
  need(groups.boxes_per_county >= 1, "boxes_per_county must be positive");
  need(groups.counties_per_district >= 1, "counties_per_district must be positive");
  need(groups.small_county_fraction >= 0 && groups.small_county_fraction <= 1,
       "small_county_fraction in [0,1]");
  need(stuffing_fraction >= 0 && stuffing_fraction <= 1, "stuffing fraction in [0,1]");
  need(extreme_fraction >= 0 && extreme_fraction <= 1, "extreme fraction in [0,1]");
  need(stuffing_fraction + extreme_fraction <= 1, "f + f_e must not exceed 1");
  need(stuffing_alpha >= 0, "alpha must be non-negative");
  if (coercion) {
    need(coercion->affected_percentile > 0 && coercion->affected_percentile <= 100,
         "coercion percentile in (0,100]");
    need(coercion->turnout_boost >= 0 && coercion->share_boost >= 0,
         "coercion boosts must be non-negative");
  }
}

BoxDraw realize_box(double turnout, double share, double stuff_u, double x_inc,
                    double x_ext, std::int64_t electorate) {
  BoxDraw draw;
  draw.stuff_u = stuff_u;
  std::int64_t valid = std::clamp<std::int64_t>(
      std::llround(turnout * static_cast<double>(electorate)), 1, electorate);
  std::int64_t incumbent = std::clamp<std::int64_t>(
      std::llround(share * static_cast<double>(valid)), 0, valid);
  draw.valid_fair = valid;
  draw.incumbent_fair = incumbent;
  draw.turnout_fair = static_cast<double>(valid) / static_cast<double>(electorate);
  draw.share_fair = static_cast<double>(incumbent) / static_cast<double>(valid);

  const auto non_voters = static_cast<double>(electorate - valid);
  draw.moved_inc = std::clamp<std::int64_t>(std::llround(x_inc * non_voters), 0,
                                            electorate - valid);
  draw.moved_ext = std::clamp<std::int64_t>(std::llround(x_ext * non_voters), 0,
                                            electorate - valid);
  const auto e = static_cast<double>(electorate);
  draw.turnout_inc = static_cast<double>(valid + draw.moved_inc) / e;
  draw.share_inc = static_cast<double>(incumbent + draw.moved_inc) /
                   static_cast<double>(valid + draw.moved_inc);
  draw.turnout_ext = static_cast<double>(valid + draw.moved_ext) / e;
  draw.share_ext = static_cast<double>(incumbent + draw.moved_ext) /
                   static_cast<double>(valid + draw.moved_ext);
  return draw;
}

BoxDraw sample_box_draw(Rng& rng, const FairParams& fair, double alpha,
                        std::int64_t electorate) {
  // Fixed draw order, so fair coordinates are independent of f.
  double t = rng.next_trunc_gaussian(fair.turnout_mean, fair.turnout_sd, 0.0, 1.0);
  double v = rng.next_trunc_gaussian(fair.share_mean, fair.share_sd, 0.0, 1.0);
  double u = rng.next_double();
  double x_inc = std::pow(rng.next_double(), alpha);
  double x_ext = rng.next_uniform(0.9, 1.0);
  return realize_box(t, v, u, x_inc, x_ext, electorate);
}

ElectionRound generate(const SynthSpec& spec, GenerateStats* stats) {
  spec.validate();
  GenerateStats local_stats;

  // County layout: every M-th county is "small" (1 or 2 boxes, alternating).
  const std::int64_t small_every =
      spec.groups.small_county_fraction > 0
          ? std::max<std::int64_t>(1, std::llround(1.0 / spec.groups.small_county_fraction))
          : 0;
  std::vector<std::int64_t> county_of_box(spec.n_boxes);
  std::vector<std::int64_t> county_sizes;
  {
    std::int64_t assigned = 0, county = 0, small_ordinal = 0;
    while (assigned < spec.n_boxes) {
      std::int64_t size = spec.groups.boxes_per_county;
      if (small_every > 0 && county % small_every == 0) {
        size = 1 + (small_ordinal % 2);
        ++small_ordinal;
      }
      size = std::min(size, spec.n_boxes - assigned);
      for (std::int64_t b = 0; b < size; ++b) county_of_box[assigned + b] = county;
      county_sizes.push_back(size);
      assigned += size;
      ++county;
    }
  }

  // Electorates first: the coercion cutoff is a percentile over all boxes.
  std::vector<std::int64_t> electorates(spec.n_boxes);
  for (std::int64_t i = 0; i < spec.n_boxes; ++i) {
    Rng rng(derive_seed(spec.seed, kStreamElectorate, static_cast<std::uint64_t>(i)));
    double e = std::exp(spec.electorate_log_mean + spec.electorate_log_sd * rng.next_gaussian());
    electorates[i] = std::max<std::int64_t>(spec.electorate_min, std::llround(e));
  }

  double coercion_cutoff = 0.0;
  if (spec.coercion) {
    std::vector<double> sizes(electorates.begin(), electorates.end());
    coercion_cutoff =
        stats::percentile_nearest_rank(std::move(sizes), spec.coercion->affected_percentile);
  }

  const auto n_counties = static_cast<std::int64_t>(county_sizes.size());
  std::vector<double> county_dt(n_counties), county_dv(n_counties);
  for (std::int64_t k = 0; k < n_counties; ++k) {
    Rng rng(derive_seed(spec.seed, kStreamCounty, static_cast<std::uint64_t>(k)));
    county_dt[k] = spec.county_sd * rng.next_gaussian();
    county_dv[k] = spec.county_sd * rng.next_gaussian();
  }

  // Standardized log-electorate per box, for the size gradients.
  std::vector<double> box_z(spec.n_boxes, 0.0);
  if (spec.turnout_size_slope != 0.0 || spec.share_size_slope != 0.0) {
    double mean = 0.0;
    std::vector<double> logs(spec.n_boxes);
    for (std::int64_t i = 0; i < spec.n_boxes; ++i) {
      logs[i] = std::log(static_cast<double>(electorates[i]));
      mean += logs[i];
    }
    mean /= static_cast<double>(spec.n_boxes);
    double var = 0.0;
    for (double l : logs) var += (l - mean) * (l - mean);
    double sd = spec.n_boxes > 1 ? std::sqrt(var / static_cast<double>(spec.n_boxes - 1)) : 0.0;
    if (sd > 0)
      for (std::int64_t i = 0; i < spec.n_boxes; ++i) box_z[i] = (logs[i] - mean) / sd;
  }

  ElectionRound round;
  round.round_label = "synth-" + std::to_string(spec.seed);
  for (const auto& c : spec.candidates) round.candidates.push_back(c.id);
  const std::size_t n_cand = spec.candidates.size();
  round.boxes.resize(spec.n_boxes);

  for (std::int64_t i = 0; i < spec.n_boxes; ++i) {
    Rng rng(derive_seed(spec.seed, kStreamBox, static_cast<std::uint64_t>(i)));
    const std::int64_t county = county_of_box[i];
    const std::int64_t electorate = electorates[i];

    double t = rng.next_trunc_gaussian(
        spec.turnout_mean + county_dt[county] + spec.turnout_size_slope * box_z[i],
        spec.turnout_sd, 0.0, 1.0);
    double v = rng.next_trunc_gaussian(
        spec.candidates[0].share_mean + county_dv[county] + spec.share_size_slope * box_z[i],
        spec.candidates[0].share_sd, 0.0, 1.0);

    bool coerced = spec.coercion &&
                   static_cast<double>(electorate) <= coercion_cutoff;
    if (coerced) {
      ++local_stats.coerced_boxes;
      if (t + spec.coercion->turnout_boost > 1.0) ++local_stats.clamped_draws;
      if (v + spec.coercion->share_boost > 1.0) ++local_stats.clamped_draws;
      t = clamp01(t + spec.coercion->turnout_boost);
      v = clamp01(v + spec.coercion->share_boost);
    }

    double u = rng.next_double();
    double x_inc = std::pow(rng.next_double(), spec.stuffing_alpha);
    double x_ext = rng.next_uniform(0.9, 1.0);
    BoxDraw draw = realize_box(t, v, u, x_inc, x_ext, electorate);

    std::int64_t moved = 0;
    if (u < spec.stuffing_fraction) {
      moved = draw.moved_inc;
      ++local_stats.stuffed_boxes;
    } else if (u < spec.stuffing_fraction + spec.extreme_fraction) {
      moved = draw.moved_ext;
      ++local_stats.extreme_boxes;
    }
    const std::int64_t valid = draw.valid_fair + moved;
    const std::int64_t incumbent = draw.incumbent_fair + moved;

    BallotBox& box = round.boxes[i];
    box.box_id = padded_id('b', i, 7);
    box.county_id = padded_id('c', county, 6);
    box.district_id = padded_id('d', county / spec.groups.counties_per_district, 5);
    box.province_id = padded_id('p', county / spec.groups.counties_per_province, 3);
    box.electorate = electorate;
    box.valid_votes = valid;
    box.votes.assign(n_cand, 0);
    box.votes[0] = incumbent;

    // Remaining candidates split the rest by noisy target weights, largest
    // remainder kept exact so votes always sum to valid.
    const std::int64_t rest = valid - incumbent;
    if (n_cand == 2) {
      box.votes[1] = rest;
    } else if (n_cand > 2) {
      std::vector<double> weights(n_cand - 1);
      double total_weight = 0.0;
      for (std::size_t c = 1; c < n_cand; ++c) {
        weights[c - 1] = rng.next_trunc_gaussian(spec.candidates[c].share_mean,
                                                 spec.candidates[c].share_sd, 0.0, 1.0);
        total_weight += weights[c - 1];
      }
      std::int64_t allocated = 0;
      double cum = 0.0;
      for (std::size_t c = 1; c < n_cand; ++c) {
        cum += total_weight > 0 ? weights[c - 1] / total_weight
                                : 1.0 / static_cast<double>(n_cand - 1);
        std::int64_t target = std::llround(cum * static_cast<double>(rest));
        box.votes[c] = target - allocated;
        allocated = target;
      }
    }
  }

  round.hierarchy_counts = compute_hierarchy_counts(round);
  if (spec.coercion && local_stats.clamped_draws > local_stats.coerced_boxes) {
    std::cerr << "psephos: warning: coercion boosts clamped for more than half of the "
                 "affected draws; spec may be infeasible\n";
  }
  if (stats) *stats = local_stats;
  return round;
}

InjectResult inject_round2(const ElectionRound& round1, const ShiftSpec& spec) {
  if (round1.candidates.size() < 2)
    throw std::invalid_argument("inject_round2 needs at least two round-1 candidates");

  const std::size_t n_cand = round1.candidates.size();
  auto county_counts = boxes_per_district(round1, Level::county);

  InjectResult result;
  ElectionRound& r2 = result.round2;
  r2.round_label = round1.round_label + "-r2";
  r2.candidates = {round1.candidates.front(), round1.candidates.back()};
  r2.boxes.resize(round1.boxes.size());

  for (std::size_t i = 0; i < round1.boxes.size(); ++i) {
    const BallotBox& b1 = round1.boxes[i];
    Rng rng(derive_seed(spec.seed, kStreamShift, i));

    // Pro-incumbent coalition: every round-1 candidate except the runoff
    // opponent (the last roster entry).
    double pro_share = 0.0;
    for (std::size_t c = 0; c + 1 < n_cand; ++c)
      pro_share += static_cast<double>(b1.votes[c]) / static_cast<double>(b1.valid_votes);

    double gauss = rng.next_gaussian();
    double u_tail = rng.next_double();
    double sd = u_tail < spec.tail_fraction ? spec.tail_noise_sd : spec.noise_sd;
    double drifted = pro_share + spec.base_shift + sd * gauss;
    double u = rng.next_double();
    bool eligible =
        !spec.small_area_only || county_counts.at(group_key(b1, Level::county)) <= 2;
    bool skewed = eligible && u < spec.skew_fraction;

    double unskewed = clamp01(drifted);
    double share2 = skewed ? clamp01(drifted + spec.skew_magnitude) : unskewed;
    if (skewed) {
      result.injected_excess_votes +=
          (share2 - unskewed) * static_cast<double>(b1.valid_votes);
      result.skewed_boxes.push_back(i);
    }

    BallotBox& b2 = r2.boxes[i];
    b2.box_id = b1.box_id;
    b2.province_id = b1.province_id;
    b2.district_id = b1.district_id;
    b2.county_id = b1.county_id;
    b2.electorate = b1.electorate;
    b2.valid_votes = b1.valid_votes;
    b2.votes.resize(2);
    b2.votes[0] = std::clamp<std::int64_t>(
        std::llround(share2 * static_cast<double>(b1.valid_votes)), 0, b1.valid_votes);
    b2.votes[1] = b1.valid_votes - b2.votes[0];
  }

  r2.hierarchy_counts = compute_hierarchy_counts(r2);
  return result;
}

SynthSpec make_reference_spec(std::uint64_t seed, std::int64_t n_boxes) {
  Rng rng(derive_seed(seed, 0xD1FE, 0));
  SynthSpec spec;
  spec.n_boxes = n_boxes;
  spec.seed = derive_seed(seed, 0xD1FE, 1);
  spec.turnout_mean = rng.next_uniform(0.55, 0.8);
  spec.turnout_sd = rng.next_uniform(0.06, 0.1);
  double incumbent_mean = rng.next_uniform(0.35, 0.6);
  spec.candidates = {{"E", incumbent_mean, rng.next_uniform(0.08, 0.14)},
                     {"K", 1.0 - incumbent_mean, 0.1}};
  spec.county_sd = rng.next_uniform(0.03, 0.07);
  spec.turnout_size_slope = 0.02 * rng.next_gaussian();
  spec.share_size_slope = 0.02 * rng.next_gaussian();
  spec.electorate_log_mean = rng.next_uniform(std::log(250.0), std::log(700.0));
  spec.electorate_log_sd = rng.next_uniform(0.35, 0.55);
  spec.electorate_min = 110;
  spec.groups.boxes_per_county = 3 + static_cast<std::int64_t>(rng.next_below(6));
  spec.groups.small_county_fraction = rng.next_uniform(0.05, 0.2);
  return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;

  SynthSpec spec;
  spec.n_boxes = j.value("n_boxes", spec.n_boxes);
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("electorate")) {
    const auto& e = j.at("electorate");
    spec.electorate_log_mean = e.value("log_mean", spec.electorate_log_mean);
    spec.electorate_log_sd = e.value("log_sd", spec.electorate_log_sd);
    spec.electorate_min = e.value("min", spec.electorate_min);
  }
  if (j.contains("turnout")) {
    const auto& t = j.at("turnout");
    spec.turnout_mean = t.value("mean", spec.turnout_mean);
    spec.turnout_sd = t.value("sd", spec.turnout_sd);
  }
  if (j.contains("candidates")) {
    spec.candidates.clear();
    for (const auto& c : j.at("candidates")) {
      CandidateSpec cs;
      cs.id = c.at("id").get<std::string>();
      cs.share_mean = c.value("mean", cs.share_mean);
      cs.share_sd = c.value("sd", cs.share_sd);
      spec.candidates.push_back(std::move(cs));
    }
  }
  spec.county_sd = j.value("county_sd", spec.county_sd);
  if (j.contains("size_gradient")) {
    const auto& g = j.at("size_gradient");
    spec.turnout_size_slope = g.value("turnout_slope", spec.turnout_size_slope);
    spec.share_size_slope = g.value("share_slope", spec.share_size_slope);
  }
  if (j.contains("groups")) {
    const auto& g = j.at("groups");
    spec.groups.counties_per_province =
        g.value("counties_per_province", spec.groups.counties_per_province);
    spec.groups.boxes_per_county = g.value("boxes_per_county", spec.groups.boxes_per_county);
    spec.groups.counties_per_district =
        g.value("counties_per_district", spec.groups.counties_per_district);
    spec.groups.small_county_fraction =
        g.value("small_county_fraction", spec.groups.small_county_fraction);
  }
  if (j.contains("stuffing")) {
    const auto& s = j.at("stuffing");
    spec.stuffing_fraction = s.value("f", spec.stuffing_fraction);
    spec.stuffing_alpha = s.value("alpha", spec.stuffing_alpha);
    spec.extreme_fraction = s.value("extreme_f", spec.extreme_fraction);
  }
  if (j.contains("coercion") && !j.at("coercion").is_null()) {
    const auto& c = j.at("coercion");
    CoercionSpec cs;
    cs.affected_percentile = c.value("percentile", cs.affected_percentile);
    cs.turnout_boost = c.value("turnout_boost", cs.turnout_boost);
    cs.share_boost = c.value("share_boost", cs.share_boost);
    spec.coercion = cs;
  }
  spec.validate();
  return spec;
}

}  // namespace psephos
