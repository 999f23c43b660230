#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psephos/rng.hpp"
#include "psephos/types.hpp"

namespace psephos {

// Generative election model: a fair baseline (truncated-Gaussian turnout and
// incumbent share, log-normal electorates, county-level mean offsets) plus
// injectable ballot stuffing and small-unit coercion.

struct CandidateSpec {
  std::string id;
  double share_mean = 0.5;
  double share_sd = 0.12;
};

struct GroupStructure {
  std::int64_t counties_per_province = 50;
  std::int64_t boxes_per_county = 6;
  std::int64_t counties_per_district = 10;
  // Fraction of counties holding only one or two boxes (alternating), for
  // small-area scenarios.
  double small_county_fraction = 0.0;
};

struct CoercionSpec {
  double affected_percentile = 10.0;  // lowest p of electorate sizes
  double turnout_boost = 0.1;
  double share_boost = 0.1;
};

struct SynthSpec {
  std::int64_t n_boxes = 10000;
  std::uint64_t seed = 42;

  double electorate_log_mean = 5.8;  // ~330 voters median
  double electorate_log_sd = 0.55;
  std::int64_t electorate_min = 20;

  double turnout_mean = 0.85;
  double turnout_sd = 0.08;
  std::vector<CandidateSpec> candidates{{"E", 0.5, 0.12}, {"K", 0.5, 0.12}};

  double county_sd = 0.05;  // sd of per-county mean offsets (turnout & share)
  // Size-correlated heterogeneity: each box's fair means gain slope * z,
  // where z is the box's standardized log-electorate. Box-level on purpose:
  // county-level gradients would cancel out of ratio-standardized
  // coordinates entirely.
  double turnout_size_slope = 0.0;
  double share_size_slope = 0.0;
  GroupStructure groups;

  double stuffing_fraction = 0.0;   // f
  double stuffing_alpha = 2.0;      // incremental intensity x^alpha
  double extreme_fraction = 0.0;    // f_e, intensity uniform on [0.9, 1]

  std::optional<CoercionSpec> coercion;

  void validate() const;  // throws std::invalid_argument
};

SynthSpec load_synth_spec(const std::string& path);

// Fair-election spec with per-seed regime diversity (turnout and share
// levels, county heterogeneity, size gradients, group layout). Used to build
// reference envelopes for the displacement test: a family of clones would
// give an unrealistically tight acceptable region.
SynthSpec make_reference_spec(std::uint64_t seed, std::int64_t n_boxes = 50000);

struct GenerateStats {
  std::int64_t stuffed_boxes = 0;
  std::int64_t extreme_boxes = 0;
  std::int64_t coerced_boxes = 0;
  std::int64_t clamped_draws = 0;  // boost or rejection clamps
};

// Deterministic in spec.seed; per-box and per-county streams are derived
// independently so evaluation order never matters.
ElectionRound generate(const SynthSpec& spec, GenerateStats* stats = nullptr);

// Core per-box sampler shared with the stuffing fit. Draw order is fixed
// (turnout, share, stuffing uniform, incremental intensity, extreme
// intensity), so fair coordinates do not depend on f.
struct FairParams {
  double turnout_mean = 0.85;
  double turnout_sd = 0.08;
  double share_mean = 0.5;
  double share_sd = 0.12;
};

struct BoxDraw {
  double turnout_fair = 0.0;
  double share_fair = 0.0;   // incumbent share
  double turnout_inc = 0.0;  // after incremental stuffing
  double share_inc = 0.0;
  double turnout_ext = 0.0;  // after extreme stuffing
  double share_ext = 0.0;
  double stuff_u = 0.0;      // box is stuffed iff u < f (extreme: u in [f, f+f_e))
  std::int64_t valid_fair = 0;
  std::int64_t incumbent_fair = 0;
  std::int64_t moved_inc = 0;  // non-voters converted under incremental stuffing
  std::int64_t moved_ext = 0;
};

// Count-space realization: valid votes and incumbent votes are rounded to
// integers, stuffing converts round(x * non_voters) of the non-voters into
// incumbent ballots. x_inc is the already-exponentiated incremental
// intensity, x_ext the extreme one.
BoxDraw realize_box(double turnout, double share, double stuff_u, double x_inc,
                    double x_ext, std::int64_t electorate);

BoxDraw sample_box_draw(Rng& rng, const FairParams& fair, double alpha,
                        std::int64_t electorate);

struct ShiftSpec {
  double base_shift = 0.0;       // population-level share drift round 1 -> 2
  // Two-component shift noise: most boxes move tightly with the national
  // trend, a tail_fraction wanders further (vote-shift distributions are
  // sharply peaked with heavy tails).
  double noise_sd = 0.01;
  double tail_noise_sd = 0.06;
  double tail_fraction = 0.15;
  double skew_fraction = 0.0;    // boxes receiving an extra +skew_magnitude
  double skew_magnitude = 0.0;
  bool small_area_only = false;  // restrict skew to counties with <= 2 boxes
  std::uint64_t seed = 42;
};

struct InjectResult {
  ElectionRound round2;
  double injected_excess_votes = 0.0;  // realized (post-clamp) skew, in votes
  std::vector<std::size_t> skewed_boxes;  // indices into round1.boxes
};

// Paired runoff round: the incumbent's pro-coalition share (all round-1
// candidates except the last, which becomes the runoff opponent) moves by
// base_shift plus noise; a skew_fraction of (optionally small-area) boxes
// gets an extra +skew_magnitude. Round 2 keeps each box's electorate and
// valid votes and carries candidates {incumbent, opponent}.
InjectResult inject_round2(const ElectionRound& round1, const ShiftSpec& spec);

}  // namespace psephos
