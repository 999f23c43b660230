#include "psephos/types.hpp"

#include <algorithm>

namespace psephos {

const char* level_name(Level level) {
  switch (level) {
    case Level::province: return "province";
    case Level::district: return "district";
    case Level::county: return "county";
  }
  return "?";
}

Level level_from_name(const std::string& name) {
  if (name == "province") return Level::province;
  if (name == "district") return Level::district;
  if (name == "county") return Level::county;
  throw std::invalid_argument("unknown hierarchy level '" + name + "'");
}

std::size_t ElectionRound::candidate_index(const std::string& candidate_id) const {
  auto it = std::find(candidates.begin(), candidates.end(), candidate_id);
  if (it == candidates.end())
    throw std::out_of_range("unknown candidate '" + candidate_id + "'");
  return static_cast<std::size_t>(it - candidates.begin());
}

bool ElectionRound::has_candidate(const std::string& candidate_id) const {
  return std::find(candidates.begin(), candidates.end(), candidate_id) != candidates.end();
}

std::int64_t ElectionRound::total_valid_votes() const {
  std::int64_t total = 0;
  for (const auto& box : boxes) total += box.valid_votes;
  return total;
}

std::int64_t ElectionRound::total_votes(std::size_t candidate) const {
  std::int64_t total = 0;
  for (const auto& box : boxes) total += box.votes[candidate];
  return total;
}

DerivedShares derive_shares(const BallotBox& box) {
  if (box.electorate == 0) throw std::domain_error("box '" + box.box_id + "': electorate is zero");
  DerivedShares shares;
  shares.turnout = static_cast<double>(box.valid_votes) / static_cast<double>(box.electorate);
  shares.vote_share.resize(box.votes.size());
  for (std::size_t c = 0; c < box.votes.size(); ++c)
    shares.vote_share[c] =
        static_cast<double>(box.votes[c]) / static_cast<double>(box.valid_votes);
  return shares;
}

}  // namespace psephos
