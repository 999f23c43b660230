#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace psephos {

// Administrative hierarchy, coarsest to finest.
enum class Level { province, district, county };

const char* level_name(Level level);
Level level_from_name(const std::string& name);

struct HierarchyCounts {
  std::int64_t provinces = 0;
  std::int64_t districts = 0;
  std::int64_t counties = 0;

  bool operator==(const HierarchyCounts&) const = default;
};

// One electoral unit (one row of a results file). Vote counts are stored
// aligned with the owning round's candidate roster.
struct BallotBox {
  std::string box_id;
  std::string province_id;
  std::string district_id;
  std::string county_id;
  std::int64_t electorate = 0;
  std::int64_t valid_votes = 0;
  std::vector<std::int64_t> votes;

  bool operator==(const BallotBox&) const = default;
};

// A validated collection of ballot boxes. Immutable after construction by
// convention; all analyses take it by const reference.
struct ElectionRound {
  std::string round_label;
  std::vector<std::string> candidates;
  std::vector<BallotBox> boxes;
  std::int64_t dropped_zero_valid = 0;
  std::int64_t dropped_invalid = 0;  // lenient-mode drops
  HierarchyCounts hierarchy_counts;

  // Index of a candidate in the roster; throws std::out_of_range if absent.
  std::size_t candidate_index(const std::string& candidate_id) const;
  bool has_candidate(const std::string& candidate_id) const;

  std::int64_t total_valid_votes() const;
  std::int64_t total_votes(std::size_t candidate) const;

  // Content equality: roster and boxes. Labels and drop provenance are
  // metadata of a particular parse and are not compared.
  bool same_content(const ElectionRound& other) const {
    return candidates == other.candidates && boxes == other.boxes;
  }
};

struct DerivedShares {
  double turnout = 0.0;                 // valid_votes / electorate
  std::vector<double> vote_share;       // votes[c] / valid_votes, roster order
};

// turnout and per-candidate vote shares of one box.
// Requires electorate >= valid_votes >= 1; throws std::domain_error on
// electorate == 0.
DerivedShares derive_shares(const BallotBox& box);

struct ParseError : std::runtime_error {
  ParseError(std::size_t line_arg, const std::string& what_arg)
      : std::runtime_error("line " + std::to_string(line_arg) + ": " + what_arg),
        line(line_arg) {}
  std::size_t line;
};

struct ValidationError : std::runtime_error {
  ValidationError(std::string box_arg, const std::string& what_arg)
      : std::runtime_error("box '" + box_arg + "': " + what_arg),
        box_id(std::move(box_arg)) {}
  std::string box_id;
};

}  // namespace psephos
