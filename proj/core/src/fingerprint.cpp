#include "psephos/fingerprint.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "psephos/ingest.hpp"
#include "psephos/svg.hpp"

namespace psephos {

namespace {

std::vector<double> make_edges(int bins, double lo, double hi) {
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
  return edges;
}

// Bin index over [lo, hi]; values at hi land in the last bin, values outside
// clamp into the edge bins.
int bin_index(double value, int bins, double lo, double hi) {
  double t = (value - lo) / (hi - lo);
  int idx = static_cast<int>(t * bins);
  return std::clamp(idx, 0, bins - 1);
}

struct GroupSums {
  double turnout = 0.0;
  double share = 0.0;
  std::int64_t count = 0;
};

}  // namespace

StandardizedPoints standardize(const ElectionRound& round, const std::string& candidate,
                               const StandardizeOptions& options) {
  const std::size_t ci = round.candidate_index(candidate);

  // Levels from the chosen one up to province, for the parent fallback.
  std::vector<Level> chain;
  switch (options.level) {
    case Level::county: chain = {Level::county, Level::district, Level::province}; break;
    case Level::district: chain = {Level::district, Level::province}; break;
    case Level::province: chain = {Level::province}; break;
  }
  if (!options.fallback_parent) chain.resize(1);

  std::vector<std::unordered_map<std::string, GroupSums>> sums(chain.size());
  std::vector<double> turnouts(round.boxes.size()), shares(round.boxes.size());
  for (std::size_t i = 0; i < round.boxes.size(); ++i) {
    const auto& box = round.boxes[i];
    double t = static_cast<double>(box.valid_votes) / static_cast<double>(box.electorate);
    double v = static_cast<double>(box.votes[ci]) / static_cast<double>(box.valid_votes);
    turnouts[i] = t;
    shares[i] = v;
    for (std::size_t lvl = 0; lvl < chain.size(); ++lvl) {
      auto& g = sums[lvl][group_key(box, chain[lvl])];
      g.turnout += t;
      g.share += v;
      ++g.count;
    }
  }

  StandardizedPoints points;
  points.turnout_ratio.reserve(round.boxes.size());
  points.share_ratio.reserve(round.boxes.size());
  points.box_index.reserve(round.boxes.size());
  for (std::size_t i = 0; i < round.boxes.size(); ++i) {
    const auto& box = round.boxes[i];
    const GroupSums* group = nullptr;
    for (std::size_t lvl = 0; lvl < chain.size(); ++lvl) {
      group = &sums[lvl].at(group_key(box, chain[lvl]));
      if (group->count >= 2) break;  // singleton groups fall back to the parent
    }
    double mean_t = group->turnout / static_cast<double>(group->count);
    double mean_v = group->share / static_cast<double>(group->count);
    if (mean_t <= 0.0 || mean_v <= 0.0) {
      ++points.skipped;
      continue;
    }
    points.turnout_ratio.push_back(turnouts[i] / mean_t);
    points.share_ratio.push_back(shares[i] / mean_v);
    points.box_index.push_back(i);
  }
  return points;
}

Fingerprint raw_fingerprint(const ElectionRound& round, const std::string& candidate,
                            int bins) {
  if (bins < 2) throw std::invalid_argument("fingerprint needs at least 2 bins");
  if (round.boxes.empty()) throw std::invalid_argument("fingerprint of empty round");
  const std::size_t ci = round.candidate_index(candidate);

  Fingerprint fp;
  fp.bins = bins;
  fp.candidate = candidate;
  fp.grid.assign(static_cast<std::size_t>(bins) * bins, 0);
  fp.x_edges = make_edges(bins, 0.0, 1.0);
  fp.y_edges = make_edges(bins, 0.0, 1.0);
  for (const auto& box : round.boxes) {
    double t = static_cast<double>(box.valid_votes) / static_cast<double>(box.electorate);
    double v = static_cast<double>(box.votes[ci]) / static_cast<double>(box.valid_votes);
    ++fp.at(bin_index(v, bins, 0.0, 1.0), bin_index(t, bins, 0.0, 1.0));
    ++fp.n_boxes;
  }
  return fp;
}

Fingerprint standardized_fingerprint(const ElectionRound& round, const std::string& candidate,
                                     int bins, const StandardizeOptions& options,
                                     double range_max) {
  if (bins < 2) throw std::invalid_argument("fingerprint needs at least 2 bins");
  if (round.boxes.empty()) throw std::invalid_argument("fingerprint of empty round");
  auto points = standardize(round, candidate, options);

  Fingerprint fp;
  fp.bins = bins;
  fp.candidate = candidate;
  fp.standardized = true;
  fp.grid.assign(static_cast<std::size_t>(bins) * bins, 0);
  fp.x_edges = make_edges(bins, 0.0, range_max);
  fp.y_edges = make_edges(bins, 0.0, range_max);
  fp.skipped_boxes = points.skipped;
  for (std::size_t i = 0; i < points.turnout_ratio.size(); ++i) {
    ++fp.at(bin_index(points.share_ratio[i], bins, 0.0, range_max),
            bin_index(points.turnout_ratio[i], bins, 0.0, range_max));
    ++fp.n_boxes;
  }
  return fp;
}

CumulativeCurve cumulative_turnout_curve(const ElectionRound& round,
                                         const std::string& candidate) {
  if (round.boxes.empty()) throw std::invalid_argument("curve of empty round");
  const std::size_t ci = round.candidate_index(candidate);

  std::vector<std::size_t> order(round.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> turnouts(round.boxes.size());
  for (std::size_t i = 0; i < round.boxes.size(); ++i) {
    const auto& box = round.boxes[i];
    turnouts[i] = static_cast<double>(box.valid_votes) / static_cast<double>(box.electorate);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (turnouts[a] != turnouts[b]) return turnouts[a] < turnouts[b];
    return round.boxes[a].box_id < round.boxes[b].box_id;
  });

  CumulativeCurve curve;
  curve.mode = CumulativeCurve::Mode::by_turnout;
  std::int64_t votes = 0, valid = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& box = round.boxes[order[k]];
    votes += box.votes[ci];
    valid += box.valid_votes;
    // emit one point per distinct turnout level
    if (k + 1 < order.size() && turnouts[order[k + 1]] == turnouts[order[k]]) continue;
    curve.points.emplace_back(turnouts[order[k]],
                              static_cast<double>(votes) / static_cast<double>(valid));
  }
  return curve;
}

CumulativeCurve rank_cumulative_curve(const ElectionRound& round,
                                      const std::string& candidate) {
  if (round.boxes.empty()) throw std::invalid_argument("curve of empty round");
  const std::size_t ci = round.candidate_index(candidate);

  std::vector<std::size_t> order(round.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (round.boxes[a].electorate != round.boxes[b].electorate)
      return round.boxes[a].electorate > round.boxes[b].electorate;
    return round.boxes[a].box_id < round.boxes[b].box_id;
  });

  CumulativeCurve curve;
  curve.mode = CumulativeCurve::Mode::by_rank;
  curve.points.reserve(order.size());
  std::int64_t votes = 0, valid = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& box = round.boxes[order[k]];
    votes += box.votes[ci];
    valid += box.valid_votes;
    curve.points.emplace_back(static_cast<double>(k + 1),
                              static_cast<double>(votes) / static_cast<double>(valid));
  }
  return curve;
}

std::pair<bool, double> first_crossing(const CumulativeCurve& curve, double threshold) {
  for (const auto& [x, share] : curve.points)
    if (share >= threshold) return {true, x};
  return {false, 0.0};
}

void emit_heatmap(const Fingerprint& fp, const std::string& base_path) {
  // Grid CSV: one line per vote-share bin (ascending), counts along turnout.
  {
    std::ofstream out(base_path + ".csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + base_path + ".csv");
    for (int row = 0; row < fp.bins; ++row) {
      for (int col = 0; col < fp.bins; ++col) {
        if (col) out << ',';
        out << fp.at(row, col);
      }
      out << '\n';
    }
    if (!out.good()) throw std::runtime_error("error writing " + base_path + ".csv");
  }

  const double cell = 560.0 / fp.bins;
  const double margin_left = 60.0, margin_bottom = 46.0, margin_top = 34.0;
  const double plot = cell * fp.bins;
  svg::Document doc(margin_left + plot + 20.0, margin_top + plot + margin_bottom);

  std::int64_t max_count = 0;
  for (auto c : fp.grid) max_count = std::max(max_count, c);

  auto cell_x = [&](int col) { return margin_left + col * cell; };
  auto cell_y = [&](int row) { return margin_top + plot - (row + 1) * cell; };

  for (int row = 0; row < fp.bins; ++row) {
    for (int col = 0; col < fp.bins; ++col) {
      std::int64_t c = fp.at(row, col);
      if (c == 0) continue;
      double intensity = std::sqrt(static_cast<double>(c) / static_cast<double>(max_count));
      int blue = 255;
      int other = static_cast<int>(std::lround(255.0 * (1.0 - intensity)));
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", other, other, blue);
      doc.rect(cell_x(col), cell_y(row), cell, cell, color);
    }
  }

  // Turnout quartiles per vote-share row, as in the classic fingerprint
  // panels: a red band from q25 to q75 with a tick at the median.
  for (int row = 0; row < fp.bins; ++row) {
    std::int64_t row_total = 0;
    for (int col = 0; col < fp.bins; ++col) row_total += fp.at(row, col);
    if (row_total < 30) continue;
    auto weighted_quartile = [&](double q) {
      std::int64_t target = static_cast<std::int64_t>(std::ceil(q * row_total));
      std::int64_t cum = 0;
      for (int col = 0; col < fp.bins; ++col) {
        cum += fp.at(row, col);
        if (cum >= target) return 0.5 * (fp.x_edges[col] + fp.x_edges[col + 1]);
      }
      return fp.x_edges[fp.bins];
    };
    double q25 = weighted_quartile(0.25), q50 = weighted_quartile(0.50),
           q75 = weighted_quartile(0.75);
    const double x_lo = fp.x_edges.front(), x_hi = fp.x_edges.back();
    auto x_pos = [&](double v) { return margin_left + (v - x_lo) / (x_hi - x_lo) * plot; };
    double y_mid = cell_y(row) + 0.5 * cell;
    doc.line(x_pos(q25), y_mid, x_pos(q75), y_mid, "#d62728", std::max(1.0, cell * 0.5));
    doc.line(x_pos(q50), y_mid - cell, x_pos(q50), y_mid + cell, "#8b0000", 1.2);
  }

  // Frame and axis labels.
  doc.line(margin_left, margin_top, margin_left, margin_top + plot, "#000", 1.0);
  doc.line(margin_left, margin_top + plot, margin_left + plot, margin_top + plot, "#000", 1.0);
  const double x_lo = fp.x_edges.front(), x_hi = fp.x_edges.back();
  const double y_lo = fp.y_edges.front(), y_hi = fp.y_edges.back();
  const int ticks = 5;
  char label[32];
  for (int i = 0; i <= ticks; ++i) {
    double fx = static_cast<double>(i) / ticks;
    std::snprintf(label, sizeof label, "%.2g", x_lo + fx * (x_hi - x_lo));
    doc.line(margin_left + fx * plot, margin_top + plot, margin_left + fx * plot,
             margin_top + plot + 5, "#000", 1.0);
    doc.text(margin_left + fx * plot, margin_top + plot + 18, label, 11, "middle");
    std::snprintf(label, sizeof label, "%.2g", y_lo + fx * (y_hi - y_lo));
    doc.line(margin_left - 5, margin_top + plot - fx * plot, margin_left,
             margin_top + plot - fx * plot, "#000", 1.0);
    doc.text(margin_left - 8, margin_top + plot - fx * plot + 4, label, 11, "end");
  }
  std::string title = fp.candidate + (fp.standardized ? " (standardized)" : "");
  doc.text(margin_left, margin_top - 12, title, 14);
  doc.text(margin_left + plot / 2, margin_top + plot + 36,
           fp.standardized ? "standardized turnout" : "turnout", 12, "middle");
  doc.write(base_path + ".svg");
}

void write_curve_csv(const CumulativeCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << (curve.mode == CumulativeCurve::Mode::by_turnout ? "turnout" : "rank")
      << ",cumulative_share\n";
  char buf[64];
  for (const auto& [x, share] : curve.points) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", x, share);
    out << buf;
  }
  if (!out.good()) throw std::runtime_error("error writing " + path);
}

Fingerprint parse_grid_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Fingerprint fp;
  std::string line;
  std::vector<std::vector<std::int64_t>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::int64_t> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw std::runtime_error("bad grid value in " + path);
      row.push_back(v);
      p = ptr;
      if (p < end && *p == ',') ++p;
    }
    rows.push_back(std::move(row));
  }
  fp.bins = static_cast<int>(rows.size());
  fp.grid.reserve(static_cast<std::size_t>(fp.bins) * fp.bins);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != fp.bins)
      throw std::runtime_error("grid in " + path + " is not square");
    for (auto v : row) {
      fp.grid.push_back(v);
      fp.n_boxes += v;
    }
  }
  fp.x_edges = make_edges(fp.bins, 0.0, 1.0);
  fp.y_edges = make_edges(fp.bins, 0.0, 1.0);
  return fp;
}

}  // namespace psephos
