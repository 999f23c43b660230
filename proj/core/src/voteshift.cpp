#include "psephos/voteshift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "psephos/ingest.hpp"
#include "psephos/rng.hpp"
#include "psephos/stats.hpp"

namespace psephos {

namespace {

constexpr std::uint64_t kStreamReplicate = 0x5e;

}  // namespace

PairedRounds pair_rounds(const ElectionRound& r1, const ElectionRound& r2,
                         Level small_area_level) {
  PairedRounds paired;
  paired.candidates_r1 = r1.candidates;
  paired.candidates_r2 = r2.candidates;

  std::unordered_map<std::string_view, std::size_t> r2_index;
  r2_index.reserve(r2.boxes.size());
  for (std::size_t j = 0; j < r2.boxes.size(); ++j)
    r2_index.emplace(r2.boxes[j].box_id, j);

  auto area_counts = boxes_per_district(r1, small_area_level);

  std::vector<bool> r2_used(r2.boxes.size(), false);
  paired.pairs.reserve(std::min(r1.boxes.size(), r2.boxes.size()));
  for (const auto& b1 : r1.boxes) {
    auto it = r2_index.find(b1.box_id);
    if (it == r2_index.end()) {
      ++paired.diagnostics.unmatched_r1;
      continue;
    }
    const auto& b2 = r2.boxes[it->second];
    r2_used[it->second] = true;

    BoxPair pair;
    pair.box_id = b1.box_id;
    auto s1 = derive_shares(b1);
    auto s2 = derive_shares(b2);
    pair.shares_r1 = std::move(s1.vote_share);
    pair.shares_r2 = std::move(s2.vote_share);
    pair.turnout_r1 = s1.turnout;
    pair.turnout_r2 = s2.turnout;
    pair.electorate_r1 = b1.electorate;
    pair.valid_r2 = b2.valid_votes;
    pair.votes_r2 = b2.votes;
    pair.small_area = area_counts.at(group_key(b1, small_area_level)) <= 2;
    paired.pairs.push_back(std::move(pair));
  }
  for (bool used : r2_used)
    if (!used) ++paired.diagnostics.unmatched_r2;
  paired.diagnostics.matched = static_cast<std::int64_t>(paired.pairs.size());

  const auto smaller = static_cast<std::int64_t>(std::min(r1.boxes.size(), r2.boxes.size()));
  if (smaller > 0 && paired.diagnostics.matched * 2 < smaller)
    throw ValidationError("", "fewer than half of the boxes matched across rounds; "
                              "are these the same election?");
  return paired;
}

std::vector<double> compute_deltas(const PairedRounds& paired, const DeltaConfig& config) {
  std::vector<std::size_t> pro_r1;
  for (const auto& id : config.pro_candidates_r1) {
    auto it = std::find(paired.candidates_r1.begin(), paired.candidates_r1.end(), id);
    if (it == paired.candidates_r1.end())
      throw std::out_of_range("unknown round-1 candidate '" + id + "'");
    pro_r1.push_back(static_cast<std::size_t>(it - paired.candidates_r1.begin()));
  }
  auto it2 = std::find(paired.candidates_r2.begin(), paired.candidates_r2.end(),
                       config.candidate_r2);
  if (it2 == paired.candidates_r2.end())
    throw std::out_of_range("unknown round-2 candidate '" + config.candidate_r2 + "'");
  const auto ci2 = static_cast<std::size_t>(it2 - paired.candidates_r2.begin());

  std::vector<double> deltas(paired.pairs.size());
  for (std::size_t i = 0; i < paired.pairs.size(); ++i) {
    const auto& pair = paired.pairs[i];
    double pro1 = 0.0;
    for (auto c : pro_r1) pro1 += pair.shares_r1[c];
    if (config.literal_formula) {
      // Printed variant: raw counts divided by turnout (= share x electorate).
      deltas[i] = pair.shares_r2[ci2] * static_cast<double>(pair.valid_r2) / pair.turnout_r2 -
                  pro1 * static_cast<double>(pair.electorate_r1);
    } else {
      deltas[i] = pair.shares_r2[ci2] - pro1;
    }
  }
  return deltas;
}

double estimate_mode(const std::vector<double>& deltas) {
  return stats::kde_mode(deltas).mode;
}

VoteShiftReport symmetrize_and_excess(const std::vector<double>& deltas,
                                      const PairedRounds& paired, const DeltaConfig& config,
                                      double mode_hat, int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  if (deltas.size() != paired.pairs.size())
    throw std::invalid_argument("deltas and pairs disagree in length");

  auto it2 = std::find(paired.candidates_r2.begin(), paired.candidates_r2.end(),
                       config.candidate_r2);
  if (it2 == paired.candidates_r2.end())
    throw std::out_of_range("unknown round-2 candidate '" + config.candidate_r2 + "'");
  const auto ci2 = static_cast<std::size_t>(it2 - paired.candidates_r2.begin());

  VoteShiftReport report;
  report.mode_hat = mode_hat;
  report.n_pairs = static_cast<std::int64_t>(deltas.size());
  report.n_replicates = replicates;

  std::vector<std::size_t> plus, minus;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double dev = deltas[i] - mode_hat;
    if (dev > 0)
      plus.push_back(i);
    else if (dev < 0)
      minus.push_back(i);
  }
  report.n_plus = static_cast<std::int64_t>(plus.size());
  report.n_minus = static_cast<std::int64_t>(minus.size());
  report.n_at_mode = report.n_pairs - report.n_plus - report.n_minus;

  double mean_abs_plus = 0.0, mean_abs_minus = 0.0;
  for (auto i : plus) mean_abs_plus += deltas[i] - mode_hat;
  for (auto i : minus) mean_abs_minus += mode_hat - deltas[i];
  if (!plus.empty()) mean_abs_plus /= static_cast<double>(plus.size());
  if (!minus.empty()) mean_abs_minus /= static_cast<double>(minus.size());
  report.heavy_side_positive = mean_abs_plus >= mean_abs_minus;

  const auto& heavy = report.heavy_side_positive ? plus : minus;
  const auto& light = report.heavy_side_positive ? minus : plus;
  report.one_side_empty = light.empty() || heavy.empty();

  double actual_total = 0.0;
  double total_valid_r2 = 0.0;
  for (const auto& pair : paired.pairs) {
    actual_total += static_cast<double>(pair.votes_r2[ci2]);
    total_valid_r2 += static_cast<double>(pair.valid_r2);
  }
  report.actual_votes = actual_total;

  // Model vote total for a heavy-side box whose deviation is replaced:
  // share2' = pro-share1 + mode + dev (real-valued votes). Under the literal
  // formula the reconstruction is in the votes/turnout scale instead.
  std::vector<std::size_t> pro_r1;
  for (const auto& id : config.pro_candidates_r1)
    pro_r1.push_back(static_cast<std::size_t>(
        std::find(paired.candidates_r1.begin(), paired.candidates_r1.end(), id) -
        paired.candidates_r1.begin()));
  auto modeled_votes = [&](std::size_t i, double new_dev) {
    const auto& pair = paired.pairs[i];
    double pro1 = 0.0;
    for (auto c : pro_r1) pro1 += pair.shares_r1[c];
    double shifted = pro1 + mode_hat + new_dev;
    if (config.literal_formula) {
      // dv operates on V/t; invert back to votes via round-2 turnout.
      return (pro1 * static_cast<double>(pair.electorate_r1) + mode_hat + new_dev) *
             pair.turnout_r2;
    }
    return shifted * static_cast<double>(pair.valid_r2);
  };

  double base_total = 0.0;  // boxes never modified
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    bool modified = !heavy.empty() &&
                    (report.heavy_side_positive ? deltas[i] - mode_hat > 0
                                                : deltas[i] - mode_hat < 0);
    if (!modified) base_total += static_cast<double>(paired.pairs[i].votes_r2[ci2]);
  }

  std::vector<double> totals(replicates);
  for (int r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, kStreamReplicate, static_cast<std::uint64_t>(r)));
    double total = base_total;
    for (auto i : heavy) {
      double new_dev = 0.0;  // empty light side: zero-deviation replacement
      if (!light.empty()) {
        std::size_t j = light[rng.next_below(light.size())];
        new_dev = -(deltas[j] - mode_hat);
      }
      total += modeled_votes(i, new_dev);
    }
    totals[r] = total;
  }

  report.excess_votes = actual_total - stats::mean(totals);
  report.excess_sd = stats::sample_sd(totals);
  report.excess_pct = total_valid_r2 > 0 ? report.excess_votes / total_valid_r2 : 0.0;
  return report;
}

std::vector<HistogramBin> shift_histogram(const std::vector<double>& deltas,
                                          const PairedRounds& paired, int n_bins) {
  std::vector<HistogramBin> bins;
  if (deltas.empty()) return bins;
  if (n_bins < 3) throw std::invalid_argument("histogram needs at least 3 bins");

  auto [min_it, max_it] = std::minmax_element(deltas.begin(), deltas.end());
  double lo = *min_it, hi = *max_it;
  double p1 = stats::percentile_nearest_rank({deltas.begin(), deltas.end()}, 1.0);
  double p99 = stats::percentile_nearest_rank({deltas.begin(), deltas.end()}, 99.0);

  if (p1 >= p99) {  // degenerate spread: one bin covers everything
    HistogramBin bin;
    bin.lo = lo;
    bin.hi = hi;
    bins.push_back(bin);
  } else {
    const int inner = n_bins - 2;
    HistogramBin low_tail;  // merged tail below the 1st percentile
    low_tail.lo = lo;
    low_tail.hi = p1;
    bins.push_back(low_tail);
    for (int k = 0; k < inner; ++k) {
      HistogramBin bin;
      bin.lo = p1 + (p99 - p1) * static_cast<double>(k) / inner;
      bin.hi = p1 + (p99 - p1) * static_cast<double>(k + 1) / inner;
      bins.push_back(bin);
    }
    HistogramBin high_tail;
    high_tail.lo = p99;
    high_tail.hi = hi;
    bins.push_back(high_tail);
  }

  auto locate = [&](double x) -> std::size_t {
    if (bins.size() == 1) return 0;
    if (x < bins[1].lo) return 0;
    if (x >= bins[bins.size() - 1].lo) return bins.size() - 1;
    double p1_lo = bins[1].lo;
    double p99_hi = bins[bins.size() - 1].lo;
    const auto inner = bins.size() - 2;
    auto k = static_cast<std::size_t>((x - p1_lo) / (p99_hi - p1_lo) *
                                      static_cast<double>(inner));
    return std::min(k, inner - 1) + 1;
  };

  for (std::size_t i = 0; i < deltas.size(); ++i) {
    auto& bin = bins[locate(deltas[i])];
    ++bin.count;
    if (paired.pairs[i].small_area) ++bin.small_area_count;
  }
  for (auto& bin : bins)
    if (bin.count > 0)
      bin.small_area_fraction =
          static_cast<double>(bin.small_area_count) / static_cast<double>(bin.count);
  return bins;
}

void write_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "bin_low,bin_high,count,small_area_fraction\n";
  char buf[96];
  for (const auto& bin : bins) {
    if (bin.small_area_fraction) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%lld,%.12g\n", bin.lo, bin.hi,
                    static_cast<long long>(bin.count), *bin.small_area_fraction);
    } else {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%lld,\n", bin.lo, bin.hi,
                    static_cast<long long>(bin.count));
    }
    out << buf;
  }
  if (!out.good()) throw std::runtime_error("error writing " + path);
}

}  // namespace psephos
