#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "psephos/types.hpp"

namespace psephos {

// File layout: one header row, six fixed columns
//   province_id,district_id,county_id,box_id,electorate,valid_votes
// followed by one column per candidate, in file order.
struct IngestConfig {
  std::string round_label;
  bool lenient = false;  // drop invalid rows with a warning instead of throwing
  Level small_area_level = Level::county;
};

// Parses and validates a results file. Boxes with zero valid votes are
// dropped and counted in dropped_zero_valid; row order is otherwise
// preserved. Strict mode throws ParseError / ValidationError; lenient mode
// logs to stderr and counts drops in dropped_invalid.
ElectionRound parse_round(const std::string& path, const IngestConfig& config = {});

// Writes a round back to the same file format.
void write_round(const ElectionRound& round, const std::string& path);

// Copy containing only boxes with electorate >= threshold; hierarchy counts
// recomputed, drop provenance carried over.
ElectionRound filter_min_electorate(const ElectionRound& round, std::int64_t threshold);

// Number of retained boxes per administrative group at `level`. Keys are the
// id path joined with '/', e.g. "p01/d003/c0042" at county level.
std::map<std::string, std::int64_t> boxes_per_district(const ElectionRound& round,
                                                       Level level = Level::county);

// Group key of one box at a level (same encoding as boxes_per_district).
std::string group_key(const BallotBox& box, Level level);

// Boxes lying in groups with at most max_boxes members.
std::int64_t small_area_box_count(const ElectionRound& round, Level level,
                                  std::int64_t max_boxes = 2);

HierarchyCounts compute_hierarchy_counts(const ElectionRound& round);

}  // namespace psephos
