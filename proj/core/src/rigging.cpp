#include "psephos/rigging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "psephos/ingest.hpp"
#include "psephos/stats.hpp"

namespace psephos {

RiggingProfile displacement_profile(const ElectionRound& round, const std::string& candidate,
                                    const StandardizeOptions& options) {
  if (round.boxes.empty()) throw std::invalid_argument("displacement of empty round");

  if (!options.fallback_parent) {
    auto counts = boxes_per_district(round, options.level);
    bool all_singletons = true;
    for (const auto& [key, n] : counts)
      if (n > 1) {
        all_singletons = false;
        break;
      }
    if (all_singletons)
      throw ValidationError("", "every group at level '" +
                                    std::string(level_name(options.level)) +
                                    "' is a singleton and parent fallback is disabled");
  }

  auto points = standardize(round, candidate, options);
  const std::size_t n = points.box_index.size();

  // Electorates of the standardized boxes, sorted for nearest-rank cutoffs.
  std::vector<double> sizes(n);
  for (std::size_t i = 0; i < n; ++i)
    sizes[i] = static_cast<double>(round.boxes[points.box_index[i]].electorate);
  std::vector<double> sorted_sizes(sizes);
  std::sort(sorted_sizes.begin(), sorted_sizes.end());

  RiggingProfile profile;
  for (int p = 1; p <= kMaxThreshold; ++p) {
    profile.thresholds.push_back(p);
    if (n == 0) {
      profile.delta.emplace_back();
      profile.n_small.push_back(0);
      profile.n_large.push_back(0);
      continue;
    }
    auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(p) / 100.0 * static_cast<double>(n)));
    rank = std::max<std::size_t>(rank, 1);
    const double cutoff = sorted_sizes[rank - 1];

    // Ties at the cutoff stay in the small set.
    double small_t = 0, small_v = 0, large_t = 0, large_v = 0;
    std::int64_t n_small = 0, n_large = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (sizes[i] <= cutoff) {
        small_t += points.turnout_ratio[i];
        small_v += points.share_ratio[i];
        ++n_small;
      } else {
        large_t += points.turnout_ratio[i];
        large_v += points.share_ratio[i];
        ++n_large;
      }
    }
    profile.n_small.push_back(n_small);
    profile.n_large.push_back(n_large);
    if (n_small < kMinSmallBoxes || n_large == 0) {
      profile.delta.emplace_back();
      continue;
    }
    double dt = small_t / static_cast<double>(n_small) - large_t / static_cast<double>(n_large);
    double dv = small_v / static_cast<double>(n_small) - large_v / static_cast<double>(n_large);
    double dist = std::sqrt(dt * dt + dv * dv);
    // Positive when the small-unit centroid sits toward higher vote & turnout.
    double sign = (dt + dv) >= 0.0 ? 1.0 : -1.0;
    profile.delta.emplace_back(sign * dist);
  }
  return profile;
}

Envelope build_envelope(
    const std::vector<std::pair<const ElectionRound*, std::string>>& references,
    const StandardizeOptions& options) {
  if (references.size() < 2)
    throw std::invalid_argument("envelope needs at least two reference elections");

  std::vector<RiggingProfile> profiles;
  profiles.reserve(references.size());
  Envelope envelope;
  for (const auto& [round, candidate] : references) {
    profiles.push_back(displacement_profile(*round, candidate, options));
    envelope.source_labels.push_back(round->round_label);
  }

  envelope.bounds.resize(kMaxThreshold);
  for (int p = 1; p <= kMaxThreshold; ++p) {
    std::vector<double> deltas;
    for (const auto& profile : profiles)
      if (profile.delta[p - 1]) deltas.push_back(*profile.delta[p - 1]);
    if (deltas.size() < 2) continue;
    auto [lo_it, hi_it] = std::minmax_element(deltas.begin(), deltas.end());
    double sd = stats::sample_sd(deltas);
    envelope.bounds[p - 1] = EnvelopeBound{*lo_it - sd, *hi_it + sd};
  }
  return envelope;
}

void apply_envelope(RiggingProfile& profile, Envelope envelope) {
  profile.outside_envelope.clear();
  for (int p = 1; p <= kMaxThreshold; ++p) {
    const auto& bound = envelope.bounds[p - 1];
    const auto& delta = profile.delta[p - 1];
    if (bound && delta && *delta > bound->upper)  // strict: the boundary is inside
      profile.outside_envelope.push_back(p);
  }
  profile.envelope = std::move(envelope);
}

RiggingVerdict verdict(const RiggingProfile& profile) {
  if (!profile.envelope)
    throw std::invalid_argument("verdict requires a profile with an envelope");

  RiggingVerdict result;
  result.flagged_thresholds = profile.outside_envelope;
  if (result.flagged_thresholds.empty()) {
    result.summary = "no size threshold shows a displacement above the acceptable range";
    return result;
  }
  int max_flag = *std::max_element(result.flagged_thresholds.begin(),
                                   result.flagged_thresholds.end());
  char buf[160];
  if (max_flag <= 20) {
    std::snprintf(buf, sizeof buf,
                  "%zu threshold(s) flagged, confined to small units (p <= %d); "
                  "consistent with manipulation concentrated in small areas",
                  result.flagged_thresholds.size(), max_flag);
  } else {
    std::snprintf(buf, sizeof buf,
                  "%zu threshold(s) flagged up to p = %d; displacement is not confined "
                  "to the smallest units",
                  result.flagged_thresholds.size(), max_flag);
  }
  result.summary = buf;
  return result;
}

void write_profile_csv(const RiggingProfile& profile, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "p,delta,lower,upper,flagged\n";
  for (std::size_t i = 0; i < profile.thresholds.size(); ++i) {
    out << profile.thresholds[i] << ',';
    char buf[40];
    if (profile.delta[i]) {
      std::snprintf(buf, sizeof buf, "%.12g", *profile.delta[i]);
      out << buf;
    }
    out << ',';
    const std::optional<EnvelopeBound>* bound = nullptr;
    if (profile.envelope) bound = &profile.envelope->bounds[i];
    if (bound && *bound) {
      std::snprintf(buf, sizeof buf, "%.12g", (*bound)->lower);
      out << buf << ',';
      std::snprintf(buf, sizeof buf, "%.12g", (*bound)->upper);
      out << buf << ',';
    } else {
      out << ",,";
    }
    bool flagged = std::find(profile.outside_envelope.begin(), profile.outside_envelope.end(),
                             profile.thresholds[i]) != profile.outside_envelope.end();
    out << (flagged ? 1 : 0) << '\n';
  }
  if (!out.good()) throw std::runtime_error("error writing " + path);
}

}  // namespace psephos
