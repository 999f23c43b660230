#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psephos/fingerprint.hpp"
#include "psephos/types.hpp"

namespace psephos {

// Voter-rigging displacement test: distance between the standardized
// (turnout, share) centroids of small and large units across size
// thresholds, compared against an envelope from reference elections.

struct EnvelopeBound {
  double lower = 0.0;
  double upper = 0.0;
};

struct Envelope {
  // bounds[p-1] corresponds to threshold percentile p; absent where fewer
  // than two references define a displacement.
  std::vector<std::optional<EnvelopeBound>> bounds;
  std::vector<std::string> source_labels;
};

struct RiggingProfile {
  std::vector<int> thresholds;                     // percentiles 1..50
  std::vector<std::optional<double>> delta;        // signed displacement
  std::vector<std::int64_t> n_small;
  std::vector<std::int64_t> n_large;
  std::optional<Envelope> envelope;
  std::vector<int> outside_envelope;               // p with delta > upper
};

struct RiggingVerdict {
  std::vector<int> flagged_thresholds;
  std::string summary;
};

inline constexpr int kMaxThreshold = 50;
inline constexpr std::int64_t kMinSmallBoxes = 10;

// Signed centroid displacement per size percentile p = 1..50. Small set =
// boxes with electorate <= nearest-rank p-th percentile; sign is positive
// when small units sit toward higher vote and turnout. The round should be
// pre-filtered to electorate >= 100. Throws ValidationError when the
// grouping is degenerate (all groups singletons with fallback disabled).
RiggingProfile displacement_profile(const ElectionRound& round, const std::string& candidate,
                                    const StandardizeOptions& options = {});

// Per-p min/max displacement across references, widened by one reference-set
// sample SD. Requires at least two references.
Envelope build_envelope(const std::vector<std::pair<const ElectionRound*, std::string>>& references,
                        const StandardizeOptions& options = {});

// Attaches the envelope and records thresholds with delta strictly above the
// upper bound.
void apply_envelope(RiggingProfile& profile, Envelope envelope);

// Requires profile.envelope; summarizes whether flags are confined to small p.
RiggingVerdict verdict(const RiggingProfile& profile);

void write_profile_csv(const RiggingProfile& profile, const std::string& path);

}  // namespace psephos
