#include "psephos/ingest.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_set>

#include "psephos/csv.hpp"

namespace psephos {

namespace {

constexpr std::size_t kFixedColumns = 6;
const char* const kFixedHeader[kFixedColumns] = {"province_id", "district_id", "county_id",
                                                 "box_id",      "electorate",  "valid_votes"};

bool parse_count(const std::string& field, std::int64_t& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

// Validates one parsed row into a box; returns an error message or empty.
std::string validate_box(const BallotBox& box) {
  if (box.valid_votes > box.electorate) return "valid_votes exceeds electorate";
  std::int64_t vote_sum = 0;
  for (std::int64_t v : box.votes) vote_sum += v;
  if (vote_sum > box.valid_votes) return "candidate votes exceed valid_votes";
  return {};
}

}  // namespace

ElectionRound parse_round(const std::string& path, const IngestConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  ElectionRound round;
  round.round_label = config.round_label.empty() ? path : config.round_label;

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> fields;
  if (!csv::split_line(line, fields)) throw ParseError(1, "unbalanced quotes in header");
  if (fields.size() < kFixedColumns + 1)
    throw ParseError(1, "header needs the six fixed columns plus at least one candidate");
  for (std::size_t i = 0; i < kFixedColumns; ++i) {
    if (fields[i] != kFixedHeader[i])
      throw ParseError(1, "expected column '" + std::string(kFixedHeader[i]) + "', got '" +
                              fields[i] + "'");
  }
  round.candidates.assign(fields.begin() + kFixedColumns, fields.end());
  const std::size_t n_candidates = round.candidates.size();

  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    auto fail = [&](const std::string& msg) -> bool {
      if (config.lenient) {
        std::cerr << "psephos: warning: " << path << ":" << line_no << ": " << msg
                  << " (row dropped)\n";
        ++round.dropped_invalid;
        return true;
      }
      throw ParseError(line_no, msg);
    };

    if (!csv::split_line(line, fields)) {
      if (fail("unbalanced quotes")) continue;
    }
    if (fields.size() != kFixedColumns + n_candidates) {
      if (fail("expected " + std::to_string(kFixedColumns + n_candidates) + " fields, got " +
               std::to_string(fields.size())))
        continue;
    }

    BallotBox box;
    box.province_id = fields[0];
    box.district_id = fields[1];
    box.county_id = fields[2];
    box.box_id = fields[3];
    bool counts_ok = parse_count(fields[4], box.electorate) &&
                     parse_count(fields[5], box.valid_votes);
    box.votes.resize(n_candidates);
    for (std::size_t c = 0; c < n_candidates && counts_ok; ++c)
      counts_ok = parse_count(fields[kFixedColumns + c], box.votes[c]);
    if (!counts_ok) {
      if (fail("non-negative integer count expected")) continue;
    }

    if (std::string msg = validate_box(box); !msg.empty()) {
      if (config.lenient) {
        std::cerr << "psephos: warning: " << path << ":" << line_no << ": box '" << box.box_id
                  << "': " << msg << " (row dropped)\n";
        ++round.dropped_invalid;
        continue;
      }
      throw ValidationError(box.box_id, msg);
    }
    if (!seen_ids.insert(box.box_id).second) {
      if (config.lenient) {
        std::cerr << "psephos: warning: " << path << ":" << line_no << ": duplicate box '"
                  << box.box_id << "' (row dropped)\n";
        ++round.dropped_invalid;
        continue;
      }
      throw ValidationError(box.box_id, "duplicate box_id");
    }

    if (box.valid_votes == 0) {
      ++round.dropped_zero_valid;
      continue;
    }
    round.boxes.push_back(std::move(box));
  }

  round.hierarchy_counts = compute_hierarchy_counts(round);
  return round;
}

void write_round(const ElectionRound& round, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);

  std::vector<std::string> fields(kFixedColumns + round.candidates.size());
  for (std::size_t i = 0; i < kFixedColumns; ++i) fields[i] = kFixedHeader[i];
  for (std::size_t c = 0; c < round.candidates.size(); ++c)
    fields[kFixedColumns + c] = round.candidates[c];
  out << csv::join(fields) << '\n';

  for (const auto& box : round.boxes) {
    fields[0] = box.province_id;
    fields[1] = box.district_id;
    fields[2] = box.county_id;
    fields[3] = box.box_id;
    fields[4] = std::to_string(box.electorate);
    fields[5] = std::to_string(box.valid_votes);
    for (std::size_t c = 0; c < box.votes.size(); ++c)
      fields[kFixedColumns + c] = std::to_string(box.votes[c]);
    out << csv::join(fields) << '\n';
  }
  if (!out.good()) throw std::runtime_error("error writing " + path);
}

ElectionRound filter_min_electorate(const ElectionRound& round, std::int64_t threshold) {
  if (threshold < 0) throw std::invalid_argument("threshold must be non-negative");
  ElectionRound filtered;
  filtered.round_label = round.round_label;
  filtered.candidates = round.candidates;
  filtered.dropped_zero_valid = round.dropped_zero_valid;
  filtered.dropped_invalid = round.dropped_invalid;
  filtered.boxes.reserve(round.boxes.size());
  for (const auto& box : round.boxes)
    if (box.electorate >= threshold) filtered.boxes.push_back(box);
  filtered.hierarchy_counts = compute_hierarchy_counts(filtered);
  return filtered;
}

std::string group_key(const BallotBox& box, Level level) {
  std::string key = box.province_id;
  if (level == Level::province) return key;
  key += '/';
  key += box.district_id;
  if (level == Level::district) return key;
  key += '/';
  key += box.county_id;
  return key;
}

std::map<std::string, std::int64_t> boxes_per_district(const ElectionRound& round, Level level) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& box : round.boxes) ++counts[group_key(box, level)];
  return counts;
}

std::int64_t small_area_box_count(const ElectionRound& round, Level level,
                                  std::int64_t max_boxes) {
  auto counts = boxes_per_district(round, level);
  std::int64_t total = 0;
  for (const auto& [key, n] : counts)
    if (n <= max_boxes) total += n;
  return total;
}

HierarchyCounts compute_hierarchy_counts(const ElectionRound& round) {
  std::set<std::string> provinces, districts, counties;
  for (const auto& box : round.boxes) {
    provinces.insert(group_key(box, Level::province));
    districts.insert(group_key(box, Level::district));
    counties.insert(group_key(box, Level::county));
  }
  return {static_cast<std::int64_t>(provinces.size()),
          static_cast<std::int64_t>(districts.size()),
          static_cast<std::int64_t>(counties.size())};
}

}  // namespace psephos
