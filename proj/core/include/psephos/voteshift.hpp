#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psephos/types.hpp"

namespace psephos {

// Two-round vote-shift test: per-box share shift, KDE mode, and excess votes
// under a symmetrized shift distribution.

struct BoxPair {
  std::string box_id;
  std::vector<double> shares_r1;  // aligned with round-1 roster
  std::vector<double> shares_r2;  // aligned with round-2 roster
  double turnout_r1 = 0.0;
  double turnout_r2 = 0.0;
  std::int64_t electorate_r1 = 0;
  std::int64_t valid_r2 = 0;
  std::vector<std::int64_t> votes_r2;  // aligned with round-2 roster
  bool small_area = false;             // round-1 county holds <= 2 boxes
};

struct PairDiagnostics {
  std::int64_t matched = 0;
  std::int64_t unmatched_r1 = 0;
  std::int64_t unmatched_r2 = 0;
};

struct PairedRounds {
  std::vector<std::string> candidates_r1;
  std::vector<std::string> candidates_r2;
  std::vector<BoxPair> pairs;
  PairDiagnostics diagnostics;
};

// Inner join on box_id (round-1 order). Throws ValidationError when fewer
// than half of the smaller round matches.
PairedRounds pair_rounds(const ElectionRound& r1, const ElectionRound& r2,
                         Level small_area_level = Level::county);

struct DeltaConfig {
  std::vector<std::string> pro_candidates_r1;  // e.g. {"E", "O"}
  std::string candidate_r2;                    // e.g. "E"
  // Default shift uses vote shares: dv = v2 - sum(v1_pro). The literal
  // variant divides raw counts by turnout instead: dv = V2/t2 - sum(V1)/t1
  // (equals share x electorate).
  bool literal_formula = false;
};

std::vector<double> compute_deltas(const PairedRounds& paired, const DeltaConfig& config);

// KDE mode of the shift distribution (Gaussian kernel, rule-of-thumb
// bandwidth, 512-point grid). Requires at least one delta; identical values
// return that value.
double estimate_mode(const std::vector<double>& deltas);

struct VoteShiftReport {
  double mode_hat = 0.0;
  std::int64_t n_pairs = 0;
  std::int64_t n_plus = 0;        // deltas above the mode
  std::int64_t n_minus = 0;
  std::int64_t n_at_mode = 0;
  bool heavy_side_positive = true;
  bool one_side_empty = false;
  double actual_votes = 0.0;      // beneficiary round-2 total
  double excess_votes = 0.0;      // actual - mean(replicate totals)
  double excess_sd = 0.0;         // sample SD over replicate totals
  double excess_pct = 0.0;        // excess / total round-2 valid votes
  int n_replicates = 0;
};

// Replaces heavy-side deviations from the mode with negated resampled
// light-side deviations, recomputes the beneficiary's round-2 total per
// replicate (real-valued votes), and reports the excess of the actual total
// over the symmetrized model.
VoteShiftReport symmetrize_and_excess(const std::vector<double>& deltas,
                                      const PairedRounds& paired, const DeltaConfig& config,
                                      double mode_hat, int replicates, std::uint64_t seed);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t count = 0;
  std::int64_t small_area_count = 0;
  std::optional<double> small_area_fraction;  // absent for empty bins
};

// Histogram of deltas with the tails below the 1st / above the 99th
// percentile merged into single bins; each bin carries the fraction of its
// boxes lying in small areas.
std::vector<HistogramBin> shift_histogram(const std::vector<double>& deltas,
                                          const PairedRounds& paired, int n_bins = 40);

void write_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path);

}  // namespace psephos
