#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psephos/types.hpp"

namespace psephos {

// 2D vote-share x turnout histogram. Row index = vote-share bin (ascending),
// column index = turnout bin.
struct Fingerprint {
  std::vector<std::int64_t> grid;    // row-major, bins x bins
  std::vector<double> x_edges;       // turnout bin edges, size bins+1
  std::vector<double> y_edges;       // vote-share bin edges
  std::string candidate;
  bool standardized = false;
  int bins = 0;
  std::int64_t n_boxes = 0;          // boxes binned (equals grid sum)
  std::int64_t skipped_boxes = 0;    // standardized mode: zero-mean groups

  std::int64_t& at(int share_bin, int turnout_bin) {
    return grid[static_cast<std::size_t>(share_bin) * bins + turnout_bin];
  }
  std::int64_t at(int share_bin, int turnout_bin) const {
    return grid[static_cast<std::size_t>(share_bin) * bins + turnout_bin];
  }
};

struct CumulativeCurve {
  enum class Mode { by_turnout, by_rank };
  Mode mode = Mode::by_turnout;
  // by_turnout: (distinct turnout level, share of votes from boxes at or
  // below it). by_rank: (rank by descending electorate, aggregate share of
  // ranks 1..i).
  std::vector<std::pair<double, double>> points;
};

struct StandardizeOptions {
  Level level = Level::county;
  // Groups with fewer than two boxes fall back to the parent level; a
  // singleton at the top level self-normalizes to (1,1).
  bool fallback_parent = true;
};

// Per-box (turnout, share) divided by the group means at the chosen level.
struct StandardizedPoints {
  std::vector<double> turnout_ratio;
  std::vector<double> share_ratio;
  std::vector<std::size_t> box_index;  // into round.boxes, parallel arrays
  std::int64_t skipped = 0;            // boxes in groups with a zero mean
};

StandardizedPoints standardize(const ElectionRound& round, const std::string& candidate,
                               const StandardizeOptions& options = {});

// Raw fingerprint over [0,1]^2; values exactly 1.0 land in the last bin.
Fingerprint raw_fingerprint(const ElectionRound& round, const std::string& candidate,
                            int bins = 100);

// Standardized fingerprint over [0, range_max]^2 (ratios to group means);
// out-of-range ratios clamp into the edge bins.
Fingerprint standardized_fingerprint(const ElectionRound& round, const std::string& candidate,
                                     int bins = 80, const StandardizeOptions& options = {},
                                     double range_max = 2.0);

// Share of the candidate's national vote contributed by boxes with turnout
// at or below each distinct turnout level.
CumulativeCurve cumulative_turnout_curve(const ElectionRound& round,
                                         const std::string& candidate);

// Boxes ranked by electorate descending; point i is the aggregate share over
// ranks 1..i. Rises at the tail ("hockey stick") when small units favor the
// candidate.
CumulativeCurve rank_cumulative_curve(const ElectionRound& round,
                                      const std::string& candidate);

// First turnout level at which the curve reaches `threshold`, if any.
std::pair<bool, double> first_crossing(const CumulativeCurve& curve, double threshold);

// Writes <base_path>.csv (bins lines of bins comma-separated counts, row =
// vote-share bin ascending) and <base_path>.svg (heatmap with per-row
// turnout quartile overlays).
void emit_heatmap(const Fingerprint& fp, const std::string& base_path);

void write_curve_csv(const CumulativeCurve& curve, const std::string& path);

// Re-reads a grid CSV written by emit_heatmap (axes and metadata are not
// stored in the CSV and stay default).
Fingerprint parse_grid_csv(const std::string& path);

}  // namespace psephos
