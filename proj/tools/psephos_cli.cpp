// psephos: statistical forensics for ballot-box-level election results.
//
// Subcommands: ingest, fingerprint, test-stuffing, test-rigging,
// test-voteshift, simulate, report. Logging goes to stderr, machine
// artifacts to files; every run writes <out>/manifest.json with the inputs
// (path + content hash), effective configuration, and versions, so a run is
// fully reproducible from its manifest.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psephos/fingerprint.hpp"
#include "psephos/ingest.hpp"
#include "psephos/rigging.hpp"
#include "psephos/stuffing.hpp"
#include "psephos/synth.hpp"
#include "psephos/types.hpp"
#include "psephos/version.hpp"
#include "psephos/voteshift.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;
constexpr std::uint64_t kStreamSyntheticRef = 0x5EF;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open input file: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

void require_inputs(const std::vector<std::string>& paths) {
  for (const auto& path : paths)
    if (!fs::is_regular_file(path)) throw UsageError("input file not found: " + path);
}

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out.good()) throw std::runtime_error("error writing " + path);
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& inputs, const json& config) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = psephos::kVersion;
  manifest["config"] = config;
  manifest["inputs"] = json::array();
  for (const auto& path : inputs) {
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    manifest["inputs"].push_back({{"path", path}, {"fnv1a64", hex}});
  }
  write_json(manifest, out_dir + "/manifest.json");
}

json hierarchy_json(const psephos::HierarchyCounts& h) {
  return {{"provinces", h.provinces}, {"districts", h.districts}, {"counties", h.counties}};
}

json ingest_summary(const psephos::ElectionRound& round, std::int64_t min_electorate,
                    psephos::Level small_area_level) {
  auto filtered = psephos::filter_min_electorate(round, min_electorate);
  json j;
  j["n_boxes"] = round.boxes.size();
  j["n_rows_parsed"] = static_cast<std::int64_t>(round.boxes.size()) +
                       round.dropped_zero_valid + round.dropped_invalid;
  j["dropped_zero_valid"] = round.dropped_zero_valid;
  j["dropped_invalid"] = round.dropped_invalid;
  j["hierarchy_counts"] = hierarchy_json(round.hierarchy_counts);
  j["candidates"] = round.candidates;
  j["min_electorate"] = min_electorate;
  j["n_boxes_after_min_electorate"] = filtered.boxes.size();
  j["small_area_level"] = psephos::level_name(small_area_level);
  j["small_area_boxes"] = psephos::small_area_box_count(round, small_area_level);
  std::int64_t small_electorate = 0;
  for (const auto& box : round.boxes)
    if (box.electorate <= 100) ++small_electorate;
  j["small_electorate_boxes"] = small_electorate;
  return j;
}

json stuffing_json(const psephos::StuffingFit& fit) {
  json j;
  j["f_hat"] = fit.f_hat;
  j["f_sd"] = number_or_null(fit.f_sd);
  j["alpha"] = fit.alpha;
  j["loss"] = fit.loss;
  j["loss_at_zero"] = fit.loss_at_zero;
  j["loss_at_one"] = fit.loss_at_one;
  j["n_boxes_used"] = fit.n_boxes_used;
  j["restriction"] = {{"min_turnout", fit.restriction.min_turnout},
                      {"min_share", fit.restriction.min_share}};
  j["significant"] = fit.significant;
  j["converged"] = fit.converged;
  j["fair_model"] = {{"turnout_mean", fit.fair_turnout_mean},
                     {"turnout_sd", fit.fair_turnout_sd},
                     {"share_mean", fit.fair_share_mean},
                     {"share_sd", fit.fair_share_sd}};
  return j;
}

json voteshift_json(const psephos::VoteShiftReport& report,
                    const psephos::PairDiagnostics& diag, bool literal_formula) {
  json j;
  j["n_pairs"] = report.n_pairs;
  j["matched"] = diag.matched;
  j["unmatched_round1"] = diag.unmatched_r1;
  j["unmatched_round2"] = diag.unmatched_r2;
  j["mode_hat"] = report.mode_hat;
  j["n_plus"] = report.n_plus;
  j["n_minus"] = report.n_minus;
  j["n_at_mode"] = report.n_at_mode;
  j["heavy_side"] = report.heavy_side_positive ? "positive" : "negative";
  j["one_side_empty"] = report.one_side_empty;
  j["actual_votes"] = report.actual_votes;
  j["excess_votes"] = report.excess_votes;
  j["excess_sd"] = report.excess_sd;
  j["excess_pct"] = report.excess_pct;
  j["replicates"] = report.n_replicates;
  j["literal_formula"] = literal_formula;
  return j;
}

json rigging_json(const psephos::RiggingProfile& profile, const psephos::RiggingVerdict& v) {
  json j;
  j["thresholds"] = profile.thresholds;
  json deltas = json::array(), lowers = json::array(), uppers = json::array();
  for (std::size_t i = 0; i < profile.thresholds.size(); ++i) {
    deltas.push_back(profile.delta[i] ? json(*profile.delta[i]) : json(nullptr));
    const auto& bound = profile.envelope->bounds[i];
    lowers.push_back(bound ? json(bound->lower) : json(nullptr));
    uppers.push_back(bound ? json(bound->upper) : json(nullptr));
  }
  j["delta"] = deltas;
  j["envelope_lower"] = lowers;
  j["envelope_upper"] = uppers;
  j["n_small"] = profile.n_small;
  j["n_large"] = profile.n_large;
  j["flagged_thresholds"] = v.flagged_thresholds;
  j["summary"] = v.summary;
  return j;
}

struct CommonOpts {
  std::string out = ".";
  std::uint64_t seed = kDefaultSeed;
  std::int64_t min_electorate = 100;
  int bins = 100;
};

psephos::ElectionRound load_round(const std::string& path, bool lenient,
                                  const std::string& label) {
  psephos::IngestConfig config;
  config.lenient = lenient;
  config.round_label = label.empty() ? path : label;
  return psephos::parse_round(path, config);
}

std::vector<psephos::ElectionRound> load_references(const std::string& dir, bool lenient) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    throw UsageError("reference directory needs at least two .csv files: " + dir);
  std::vector<psephos::ElectionRound> rounds;
  rounds.reserve(files.size());
  for (const auto& file : files) rounds.push_back(load_round(file, lenient, file));
  return rounds;
}

std::vector<psephos::ElectionRound> synthetic_references(int count, std::uint64_t seed,
                                                         std::int64_t n_boxes) {
  std::vector<psephos::ElectionRound> rounds;
  rounds.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto spec = psephos::make_reference_spec(
        psephos::derive_seed(seed, kStreamSyntheticRef, static_cast<std::uint64_t>(i)),
        n_boxes);
    rounds.push_back(psephos::generate(spec));
  }
  return rounds;
}

psephos::RiggingProfile run_rigging(const psephos::ElectionRound& filtered,
                                    const std::string& candidate,
                                    const std::vector<psephos::ElectionRound>& refs,
                                    psephos::Level level, std::int64_t min_electorate) {
  psephos::StandardizeOptions options;
  options.level = level;
  std::vector<psephos::ElectionRound> filtered_refs;
  filtered_refs.reserve(refs.size());
  for (const auto& ref : refs)
    filtered_refs.push_back(psephos::filter_min_electorate(ref, min_electorate));
  std::vector<std::pair<const psephos::ElectionRound*, std::string>> ref_pairs;
  for (const auto& ref : filtered_refs) {
    // Synthetic references carry their own incumbent as the first candidate.
    const std::string& cand =
        ref.has_candidate(candidate) ? candidate : ref.candidates.front();
    ref_pairs.emplace_back(&ref, cand);
  }
  auto envelope = psephos::build_envelope(ref_pairs, options);
  auto profile = psephos::displacement_profile(filtered, candidate, options);
  psephos::apply_envelope(profile, std::move(envelope));
  return profile;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psephos: election forensics toolkit (fingerprints, ballot-stuffing fit, "
               "voter-rigging displacement, two-round vote-shift symmetrization)"};
  app.require_subcommand(1);

  // ingest
  auto* cmd_ingest = app.add_subcommand("ingest", "Parse and validate a results file");
  struct {
    std::string round;
    CommonOpts common;
    bool lenient = false;
    std::string small_area_level = "county";
    std::string json_out;
  } o_ingest;
  cmd_ingest->add_option("--round", o_ingest.round, "Results CSV")->required();
  cmd_ingest->add_option("--min-electorate", o_ingest.common.min_electorate,
                         "Analysis filter threshold reported in the summary");
  cmd_ingest->add_flag("--lenient", o_ingest.lenient, "Drop invalid rows with a warning");
  cmd_ingest->add_option("--small-area-level", o_ingest.small_area_level,
                         "Level for <=2-box areas: county|district");
  cmd_ingest->add_option("--out", o_ingest.common.out, "Output directory");
  cmd_ingest->add_option("--json", o_ingest.json_out, "Also write the summary JSON here");

  // fingerprint
  auto* cmd_fp = app.add_subcommand("fingerprint", "Vote-turnout fingerprint (CSV + SVG)");
  struct {
    std::string round;
    std::string candidate;
    CommonOpts common;
    bool standardized = false;
    std::string level = "county";
    double range_max = 2.0;
    std::int64_t max_electorate = 0;  // 0 = no upper bound
    bool small_area = false;
    bool lenient = false;
  } o_fp;
  cmd_fp->add_option("--round", o_fp.round, "Results CSV")->required();
  cmd_fp->add_option("--candidate", o_fp.candidate, "Candidate id")->required();
  cmd_fp->add_option("--bins", o_fp.common.bins, "Bins per axis (default 100 raw, 80 std)");
  cmd_fp->add_flag("--standardized", o_fp.standardized,
                   "Rescale by group means before binning");
  cmd_fp->add_option("--level", o_fp.level, "Standardization level: county|district|province");
  cmd_fp->add_option("--range-max", o_fp.range_max, "Axis maximum for standardized ratios");
  cmd_fp->add_option("--min-electorate", o_fp.common.min_electorate,
                     "Drop boxes below this electorate (default 100)");
  cmd_fp->add_option("--max-electorate", o_fp.max_electorate,
                     "Keep only boxes at or below this electorate (0 = off)");
  cmd_fp->add_flag("--small-area", o_fp.small_area, "Keep only boxes in <=2-box counties");
  cmd_fp->add_flag("--lenient", o_fp.lenient, "Drop invalid rows with a warning");
  cmd_fp->add_option("--out", o_fp.common.out, "Output directory");

  // test-stuffing
  auto* cmd_stuff =
      app.add_subcommand("test-stuffing", "Fit the ballot-stuffing fraud parameter");
  struct {
    std::string round;
    std::string candidate;
    CommonOpts common;
    double alpha = 2.0;
    double extreme_f = 0.0;
    int replicates = 32;
    int bootstrap = 50;
    std::string json_out;
    bool lenient = false;
  } o_stuff;
  cmd_stuff->add_option("--round", o_stuff.round, "Results CSV")->required();
  cmd_stuff->add_option("--candidate", o_stuff.candidate, "Candidate id")->required();
  cmd_stuff->add_option("--alpha", o_stuff.alpha, "Incremental stuffing intensity exponent");
  cmd_stuff->add_option("--extreme-f", o_stuff.extreme_f,
                        "Fixed extreme-stuffing fraction in the model");
  cmd_stuff->add_option("--seed", o_stuff.common.seed, "Master seed");
  cmd_stuff->add_option("--replicates", o_stuff.replicates,
                        "Model fingerprints per evaluation");
  cmd_stuff->add_option("--bootstrap", o_stuff.bootstrap, "Bootstrap refits for f_sd");
  cmd_stuff->add_option("--bins", o_stuff.common.bins, "Fingerprint bins per axis");
  cmd_stuff->add_option("--min-electorate", o_stuff.common.min_electorate,
                        "Electorate filter before the fit");
  cmd_stuff->add_option("--json", o_stuff.json_out, "Result JSON path");
  cmd_stuff->add_flag("--lenient", o_stuff.lenient, "Drop invalid rows with a warning");
  cmd_stuff->add_option("--out", o_stuff.common.out, "Output directory");

  // test-rigging
  auto* cmd_rig = app.add_subcommand("test-rigging", "Small-unit displacement vs an envelope");
  struct {
    std::string round;
    std::string candidate;
    CommonOpts common;
    std::string references;
    int synthetic_refs = 0;
    std::string level = "county";
    std::string json_out;
    bool lenient = false;
  } o_rig;
  cmd_rig->add_option("--round", o_rig.round, "Results CSV")->required();
  cmd_rig->add_option("--candidate", o_rig.candidate, "Candidate id")->required();
  cmd_rig->add_option("--references", o_rig.references,
                      "Directory of reference election CSVs");
  cmd_rig->add_option("--synthetic-refs", o_rig.synthetic_refs,
                      "Generate N fair synthetic references instead");
  cmd_rig->add_option("--level", o_rig.level, "Standardization level (default county)");
  cmd_rig->add_option("--min-electorate", o_rig.common.min_electorate,
                      "Electorate filter before the test");
  cmd_rig->add_option("--seed", o_rig.common.seed, "Seed for synthetic references");
  cmd_rig->add_option("--json", o_rig.json_out, "Result JSON path");
  cmd_rig->add_flag("--lenient", o_rig.lenient, "Drop invalid rows with a warning");
  cmd_rig->add_option("--out", o_rig.common.out, "Output directory");

  // test-voteshift
  auto* cmd_vs =
      app.add_subcommand("test-voteshift", "Two-round vote-shift symmetrization test");
  struct {
    std::string round1, round2;
    std::string pro_r1;
    std::string cand_r2;
    CommonOpts common;
    int replicates = 200;
    int hist_bins = 40;
    bool literal = false;
    std::string small_area_level = "county";
    std::string json_out;
    bool lenient = false;
  } o_vs;
  o_vs.common.min_electorate = 0;  // the shift test uses the full data
  cmd_vs->add_option("--round1", o_vs.round1, "First-round CSV")->required();
  cmd_vs->add_option("--round2", o_vs.round2, "Second-round CSV")->required();
  cmd_vs->add_option("--pro-r1", o_vs.pro_r1,
                     "Comma-separated round-1 candidates pooled as pro-beneficiary")
      ->required();
  cmd_vs->add_option("--cand-r2", o_vs.cand_r2, "Round-2 beneficiary candidate")->required();
  cmd_vs->add_option("--replicates", o_vs.replicates, "Symmetrization replicates");
  cmd_vs->add_option("--seed", o_vs.common.seed, "Master seed");
  cmd_vs->add_option("--min-electorate", o_vs.common.min_electorate,
                     "Electorate filter (default 0: keep everything)");
  cmd_vs->add_option("--hist-bins", o_vs.hist_bins, "Histogram bins (tails merged)");
  cmd_vs->add_flag("--literal-formula", o_vs.literal,
                   "Use the votes/turnout shift definition instead of shares");
  cmd_vs->add_option("--small-area-level", o_vs.small_area_level,
                     "Level for <=2-box areas: county|district");
  cmd_vs->add_option("--json", o_vs.json_out, "Result JSON path");
  cmd_vs->add_flag("--lenient", o_vs.lenient, "Drop invalid rows with a warning");
  cmd_vs->add_option("--out", o_vs.common.out, "Output directory");

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "Generate a synthetic election");
  struct {
    std::string spec;
    CommonOpts common;
  } o_sim;
  cmd_sim->add_option("--spec", o_sim.spec, "Synthesis spec JSON")->required();
  cmd_sim->add_option("--seed", o_sim.common.seed, "Override the spec seed");
  cmd_sim->add_option("--out", o_sim.common.out, "Output directory")->required();

  // report
  auto* cmd_rep =
      app.add_subcommand("report", "Run the full battery on a two-round election");
  struct {
    std::string round1, round2;
    std::string candidate;
    std::string pro_r1;
    std::string cand_r2;
    std::string references;
    int synthetic_refs = 0;
    CommonOpts common;
    int replicates = 200;
    int fit_replicates = 32;
    int bootstrap = 50;
    bool skip_stuffing = false;
    bool lenient = false;
  } o_rep;
  cmd_rep->add_option("--round1", o_rep.round1, "First-round CSV")->required();
  cmd_rep->add_option("--round2", o_rep.round2, "Second-round CSV (runoff)")->required();
  cmd_rep->add_option("--candidate", o_rep.candidate, "Incumbent / beneficiary id")
      ->required();
  cmd_rep->add_option("--pro-r1", o_rep.pro_r1,
                      "Round-1 pro-beneficiary pool (default: the candidate)");
  cmd_rep->add_option("--cand-r2", o_rep.cand_r2, "Round-2 beneficiary (default: candidate)");
  cmd_rep->add_option("--references", o_rep.references, "Reference election CSV directory");
  cmd_rep->add_option("--synthetic-refs", o_rep.synthetic_refs,
                      "Fair synthetic references for the rigging envelope");
  cmd_rep->add_option("--min-electorate", o_rep.common.min_electorate,
                      "Electorate filter for fingerprints and tests");
  cmd_rep->add_option("--bins", o_rep.common.bins, "Fingerprint bins per axis");
  cmd_rep->add_option("--seed", o_rep.common.seed, "Master seed");
  cmd_rep->add_option("--replicates", o_rep.replicates, "Vote-shift replicates");
  cmd_rep->add_option("--fit-replicates", o_rep.fit_replicates,
                      "Stuffing-fit fingerprints per evaluation");
  cmd_rep->add_option("--bootstrap", o_rep.bootstrap, "Stuffing bootstrap refits");
  cmd_rep->add_flag("--skip-stuffing", o_rep.skip_stuffing, "Skip the (slow) stuffing fit");
  cmd_rep->add_flag("--lenient", o_rep.lenient, "Drop invalid rows with a warning");
  cmd_rep->add_option("--out", o_rep.common.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_ingest) {
      require_inputs({o_ingest.round});
      auto level = psephos::level_from_name(o_ingest.small_area_level);
      auto round = load_round(o_ingest.round, o_ingest.lenient, "");
      auto summary = ingest_summary(round, o_ingest.common.min_electorate, level);
      fs::create_directories(o_ingest.common.out);
      std::cout << summary.dump(2) << '\n';
      if (!o_ingest.json_out.empty()) write_json(summary, o_ingest.json_out);
      write_manifest(o_ingest.common.out, "ingest", {o_ingest.round},
                     {{"min_electorate", o_ingest.common.min_electorate},
                      {"lenient", o_ingest.lenient},
                      {"small_area_level", o_ingest.small_area_level}});
    } else if (*cmd_fp) {
      require_inputs({o_fp.round});
      auto level = psephos::level_from_name(o_fp.level);
      auto round = load_round(o_fp.round, o_fp.lenient, "");
      auto working = psephos::filter_min_electorate(round, o_fp.common.min_electorate);
      if (o_fp.max_electorate > 0) {
        psephos::ElectionRound bounded = working;
        bounded.boxes.clear();
        for (const auto& box : working.boxes)
          if (box.electorate <= o_fp.max_electorate) bounded.boxes.push_back(box);
        bounded.hierarchy_counts = psephos::compute_hierarchy_counts(bounded);
        working = std::move(bounded);
      }
      if (o_fp.small_area) {
        auto counts = psephos::boxes_per_district(working, psephos::Level::county);
        psephos::ElectionRound small = working;
        small.boxes.clear();
        for (const auto& box : working.boxes)
          if (counts.at(psephos::group_key(box, psephos::Level::county)) <= 2)
            small.boxes.push_back(box);
        small.hierarchy_counts = psephos::compute_hierarchy_counts(small);
        working = std::move(small);
      }
      int bins = o_fp.common.bins;
      if (o_fp.standardized && bins == 100) bins = 80;  // default for ratio axes
      psephos::Fingerprint fp;
      if (o_fp.standardized) {
        psephos::StandardizeOptions options;
        options.level = level;
        fp = psephos::standardized_fingerprint(working, o_fp.candidate, bins, options,
                                               o_fp.range_max);
      } else {
        fp = psephos::raw_fingerprint(working, o_fp.candidate, bins);
      }
      fs::create_directories(o_fp.common.out);
      std::string base = o_fp.common.out + "/fingerprint_" + o_fp.candidate +
                         (o_fp.standardized ? "_standardized" : "_raw");
      psephos::emit_heatmap(fp, base);
      std::cerr << "psephos: wrote " << base << ".csv and .svg (" << fp.n_boxes
                << " boxes binned, " << fp.skipped_boxes << " skipped)\n";
      write_manifest(o_fp.common.out, "fingerprint", {o_fp.round},
                     {{"candidate", o_fp.candidate},
                      {"bins", bins},
                      {"standardized", o_fp.standardized},
                      {"level", o_fp.level},
                      {"range_max", o_fp.range_max},
                      {"min_electorate", o_fp.common.min_electorate},
                      {"max_electorate", o_fp.max_electorate},
                      {"small_area", o_fp.small_area}});
    } else if (*cmd_stuff) {
      require_inputs({o_stuff.round});
      auto round = load_round(o_stuff.round, o_stuff.lenient, "");
      auto filtered = psephos::filter_min_electorate(round, o_stuff.common.min_electorate);
      psephos::FitConfig config;
      config.alpha = o_stuff.alpha;
      config.extreme_fraction = o_stuff.extreme_f;
      config.fit_replicates = o_stuff.replicates;
      config.bootstrap_refits = o_stuff.bootstrap;
      config.bins = o_stuff.common.bins;
      config.seed = o_stuff.common.seed;
      auto fit = psephos::fit(filtered, o_stuff.candidate, config);
      json result = stuffing_json(fit);
      fs::create_directories(o_stuff.common.out);
      std::string json_path = o_stuff.json_out.empty()
                                  ? o_stuff.common.out + "/stuffing.json"
                                  : o_stuff.json_out;
      write_json(result, json_path);
      if (o_stuff.json_out.empty()) std::cout << result.dump(2) << '\n';
      std::cerr << "psephos: f_hat = " << fit.f_hat << " (sd " << fit.f_sd << "), "
                << (fit.significant ? "significant" : "not significant") << ", "
                << fit.n_boxes_used << " boxes used\n";
      write_manifest(o_stuff.common.out, "test-stuffing", {o_stuff.round},
                     {{"candidate", o_stuff.candidate},
                      {"alpha", o_stuff.alpha},
                      {"extreme_f", o_stuff.extreme_f},
                      {"replicates", o_stuff.replicates},
                      {"bootstrap", o_stuff.bootstrap},
                      {"bins", o_stuff.common.bins},
                      {"seed", o_stuff.common.seed},
                      {"min_electorate", o_stuff.common.min_electorate}});
    } else if (*cmd_rig) {
      require_inputs({o_rig.round});
      if (o_rig.references.empty() == (o_rig.synthetic_refs == 0))
        throw UsageError("pass exactly one of --references or --synthetic-refs");
      auto level = psephos::level_from_name(o_rig.level);
      auto round = load_round(o_rig.round, o_rig.lenient, "");
      auto filtered = psephos::filter_min_electorate(round, o_rig.common.min_electorate);
      std::vector<psephos::ElectionRound> refs;
      if (!o_rig.references.empty()) {
        refs = load_references(o_rig.references, o_rig.lenient);
      } else {
        refs = synthetic_references(o_rig.synthetic_refs, o_rig.common.seed, 50000);
      }
      auto profile = run_rigging(filtered, o_rig.candidate, refs, level,
                                 o_rig.common.min_electorate);
      auto v = psephos::verdict(profile);
      fs::create_directories(o_rig.common.out);
      json result = rigging_json(profile, v);
      std::string json_path =
          o_rig.json_out.empty() ? o_rig.common.out + "/rigging.json" : o_rig.json_out;
      write_json(result, json_path);
      psephos::write_profile_csv(profile, o_rig.common.out + "/rigging_profile.csv");
      if (o_rig.json_out.empty()) std::cout << result.dump(2) << '\n';
      std::cerr << "psephos: " << v.summary << '\n';
      write_manifest(o_rig.common.out, "test-rigging", {o_rig.round},
                     {{"candidate", o_rig.candidate},
                      {"references", o_rig.references},
                      {"synthetic_refs", o_rig.synthetic_refs},
                      {"level", o_rig.level},
                      {"seed", o_rig.common.seed},
                      {"min_electorate", o_rig.common.min_electorate}});
    } else if (*cmd_vs) {
      require_inputs({o_vs.round1, o_vs.round2});
      auto level = psephos::level_from_name(o_vs.small_area_level);
      auto r1 = load_round(o_vs.round1, o_vs.lenient, "round1");
      auto r2 = load_round(o_vs.round2, o_vs.lenient, "round2");
      if (o_vs.common.min_electorate > 0) {
        r1 = psephos::filter_min_electorate(r1, o_vs.common.min_electorate);
        r2 = psephos::filter_min_electorate(r2, o_vs.common.min_electorate);
      }
      auto paired = psephos::pair_rounds(r1, r2, level);
      psephos::DeltaConfig dc;
      for (auto&& part : CLI::detail::split(o_vs.pro_r1, ','))
        dc.pro_candidates_r1.push_back(part);
      dc.candidate_r2 = o_vs.cand_r2;
      dc.literal_formula = o_vs.literal;
      auto deltas = psephos::compute_deltas(paired, dc);
      double mode = psephos::estimate_mode(deltas);
      auto report = psephos::symmetrize_and_excess(deltas, paired, dc, mode,
                                                   o_vs.replicates, o_vs.common.seed);
      auto hist = psephos::shift_histogram(deltas, paired, o_vs.hist_bins);
      fs::create_directories(o_vs.common.out);
      json result = voteshift_json(report, paired.diagnostics, o_vs.literal);
      std::string json_path =
          o_vs.json_out.empty() ? o_vs.common.out + "/voteshift.json" : o_vs.json_out;
      write_json(result, json_path);
      psephos::write_histogram_csv(hist, o_vs.common.out + "/voteshift_histogram.csv");
      if (o_vs.json_out.empty()) std::cout << result.dump(2) << '\n';
      std::cerr << "psephos: excess votes = " << report.excess_votes << " (sd "
                << report.excess_sd << "), " << 100.0 * report.excess_pct
                << "% of valid votes\n";
      write_manifest(o_vs.common.out, "test-voteshift", {o_vs.round1, o_vs.round2},
                     {{"pro_r1", o_vs.pro_r1},
                      {"cand_r2", o_vs.cand_r2},
                      {"replicates", o_vs.replicates},
                      {"seed", o_vs.common.seed},
                      {"min_electorate", o_vs.common.min_electorate},
                      {"hist_bins", o_vs.hist_bins},
                      {"literal_formula", o_vs.literal},
                      {"small_area_level", o_vs.small_area_level}});
    } else if (*cmd_sim) {
      require_inputs({o_sim.spec});
      auto spec = psephos::load_synth_spec(o_sim.spec);
      if (cmd_sim->count("--seed") > 0) spec.seed = o_sim.common.seed;
      psephos::GenerateStats stats;
      auto round1 = psephos::generate(spec, &stats);
      fs::create_directories(o_sim.common.out);
      psephos::write_round(round1, o_sim.common.out + "/round1.csv");
      json summary;
      summary["n_boxes"] = round1.boxes.size();
      summary["hierarchy_counts"] = hierarchy_json(round1.hierarchy_counts);
      summary["stuffed_boxes"] = stats.stuffed_boxes;
      summary["extreme_boxes"] = stats.extreme_boxes;
      summary["coerced_boxes"] = stats.coerced_boxes;
      summary["clamped_draws"] = stats.clamped_draws;
      summary["seed"] = spec.seed;

      // Optional paired round: a "shift" block in the spec JSON.
      std::ifstream spec_in(o_sim.spec);
      json spec_json;
      spec_in >> spec_json;
      if (spec_json.contains("shift")) {
        const auto& s = spec_json.at("shift");
        psephos::ShiftSpec shift;
        shift.base_shift = s.value("base_shift", shift.base_shift);
        shift.noise_sd = s.value("noise_sd", shift.noise_sd);
        shift.tail_noise_sd = s.value("tail_noise_sd", shift.tail_noise_sd);
        shift.tail_fraction = s.value("tail_fraction", shift.tail_fraction);
        shift.skew_fraction = s.value("skew_fraction", shift.skew_fraction);
        shift.skew_magnitude = s.value("skew_magnitude", shift.skew_magnitude);
        shift.small_area_only = s.value("small_area_only", shift.small_area_only);
        shift.seed = s.value("seed", spec.seed + 1);
        auto injected = psephos::inject_round2(round1, shift);
        psephos::write_round(injected.round2, o_sim.common.out + "/round2.csv");
        summary["round2"] = {{"injected_excess_votes", injected.injected_excess_votes},
                             {"skewed_boxes", injected.skewed_boxes.size()},
                             {"seed", shift.seed}};
      }
      write_json(summary, o_sim.common.out + "/simulate_summary.json");
      std::cerr << "psephos: generated " << round1.boxes.size() << " boxes into "
                << o_sim.common.out << '\n';
      write_manifest(o_sim.common.out, "simulate", {o_sim.spec}, {{"seed", spec.seed}});
    } else if (*cmd_rep) {
      require_inputs({o_rep.round1, o_rep.round2});
      if (!o_rep.references.empty() && o_rep.synthetic_refs > 0)
        throw UsageError("pass at most one of --references or --synthetic-refs");
      const std::string& cand = o_rep.candidate;
      std::string cand_r2 = o_rep.cand_r2.empty() ? cand : o_rep.cand_r2;
      std::vector<std::string> pro_r1;
      if (o_rep.pro_r1.empty()) {
        pro_r1.push_back(cand);
      } else {
        for (auto&& part : CLI::detail::split(o_rep.pro_r1, ',')) pro_r1.push_back(part);
      }

      auto r1 = load_round(o_rep.round1, o_rep.lenient, "round1");
      auto r2 = load_round(o_rep.round2, o_rep.lenient, "round2");
      fs::create_directories(o_rep.common.out);
      const std::string& out = o_rep.common.out;

      json report_summary;
      report_summary["round1"] =
          ingest_summary(r1, o_rep.common.min_electorate, psephos::Level::county);
      report_summary["round2"] =
          ingest_summary(r2, o_rep.common.min_electorate, psephos::Level::county);
      write_json(report_summary["round1"], out + "/ingest_round1.json");
      write_json(report_summary["round2"], out + "/ingest_round2.json");

      // Cumulative curves on the full (unfiltered) rounds.
      auto curve1 = psephos::cumulative_turnout_curve(r1, cand);
      auto curve2 = psephos::cumulative_turnout_curve(r2, cand_r2);
      psephos::write_curve_csv(curve1, out + "/cumulative_turnout_round1.csv");
      psephos::write_curve_csv(curve2, out + "/cumulative_turnout_round2.csv");
      psephos::write_curve_csv(psephos::rank_cumulative_curve(r1, cand),
                               out + "/rank_cumulative_round1.csv");
      psephos::write_curve_csv(psephos::rank_cumulative_curve(r2, cand_r2),
                               out + "/rank_cumulative_round2.csv");
      auto [crossed1, where1] = psephos::first_crossing(curve1, 0.5);
      auto [crossed2, where2] = psephos::first_crossing(curve2, 0.5);
      report_summary["cumulative_crossing_round1"] = crossed1 ? json(where1) : json(nullptr);
      report_summary["cumulative_crossing_round2"] = crossed2 ? json(where2) : json(nullptr);

      // Fingerprints: analysis filter for the main panels, the full data for
      // the two small-unit definitions.
      auto f1 = psephos::filter_min_electorate(r1, o_rep.common.min_electorate);
      auto f2 = psephos::filter_min_electorate(r2, o_rep.common.min_electorate);
      psephos::emit_heatmap(psephos::raw_fingerprint(f1, cand, o_rep.common.bins),
                            out + "/fp_raw_round1");
      psephos::emit_heatmap(psephos::raw_fingerprint(f2, cand_r2, o_rep.common.bins),
                            out + "/fp_raw_round2");
      psephos::StandardizeOptions std_options;
      psephos::emit_heatmap(psephos::standardized_fingerprint(f1, cand, 80, std_options),
                            out + "/fp_standardized_round1");
      psephos::emit_heatmap(psephos::standardized_fingerprint(f2, cand_r2, 80, std_options),
                            out + "/fp_standardized_round2");

      auto small_panels = [&](const psephos::ElectionRound& full, const std::string& cid,
                              const std::string& tag) {
        psephos::ElectionRound small_e = full;
        small_e.boxes.clear();
        for (const auto& box : full.boxes)
          if (box.electorate <= 100) small_e.boxes.push_back(box);
        if (!small_e.boxes.empty()) {
          small_e.hierarchy_counts = psephos::compute_hierarchy_counts(small_e);
          psephos::emit_heatmap(psephos::raw_fingerprint(small_e, cid, o_rep.common.bins),
                                out + "/fp_small_electorate_" + tag);
        }
        auto counts = psephos::boxes_per_district(full, psephos::Level::county);
        psephos::ElectionRound small_a = full;
        small_a.boxes.clear();
        for (const auto& box : full.boxes)
          if (counts.at(psephos::group_key(box, psephos::Level::county)) <= 2)
            small_a.boxes.push_back(box);
        if (!small_a.boxes.empty()) {
          small_a.hierarchy_counts = psephos::compute_hierarchy_counts(small_a);
          psephos::emit_heatmap(psephos::raw_fingerprint(small_a, cid, o_rep.common.bins),
                                out + "/fp_small_area_" + tag);
        }
      };
      small_panels(r1, cand, "round1");
      small_panels(r2, cand_r2, "round2");

      // Stuffing fit per round.
      if (!o_rep.skip_stuffing) {
        psephos::FitConfig fit_config;
        fit_config.fit_replicates = o_rep.fit_replicates;
        fit_config.bootstrap_refits = o_rep.bootstrap;
        fit_config.bins = o_rep.common.bins;
        fit_config.seed = o_rep.common.seed;
        auto fit1 = psephos::fit(f1, cand, fit_config);
        auto fit2 = psephos::fit(f2, cand_r2, fit_config);
        write_json(stuffing_json(fit1), out + "/stuffing_round1.json");
        write_json(stuffing_json(fit2), out + "/stuffing_round2.json");
        report_summary["stuffing_round1"] = stuffing_json(fit1);
        report_summary["stuffing_round2"] = stuffing_json(fit2);
      }

      // Rigging profile when references are available.
      if (!o_rep.references.empty() || o_rep.synthetic_refs > 0) {
        std::vector<psephos::ElectionRound> refs;
        if (!o_rep.references.empty()) {
          refs = load_references(o_rep.references, o_rep.lenient);
        } else {
          refs = synthetic_references(o_rep.synthetic_refs, o_rep.common.seed, 50000);
        }
        for (int round_i = 0; round_i < 2; ++round_i) {
          const auto& filtered = round_i == 0 ? f1 : f2;
          const std::string& cid = round_i == 0 ? cand : cand_r2;
          std::string tag = round_i == 0 ? "round1" : "round2";
          auto profile = run_rigging(filtered, cid, refs, psephos::Level::county,
                                     o_rep.common.min_electorate);
          auto v = psephos::verdict(profile);
          write_json(rigging_json(profile, v), out + "/rigging_" + tag + ".json");
          psephos::write_profile_csv(profile, out + "/rigging_" + tag + ".csv");
          report_summary["rigging_" + tag] = v.summary;
        }
      }

      // Vote-shift test on the full paired rounds.
      auto paired = psephos::pair_rounds(r1, r2, psephos::Level::county);
      psephos::DeltaConfig dc;
      dc.pro_candidates_r1 = pro_r1;
      dc.candidate_r2 = cand_r2;
      auto deltas = psephos::compute_deltas(paired, dc);
      double mode = psephos::estimate_mode(deltas);
      auto shift_report = psephos::symmetrize_and_excess(
          deltas, paired, dc, mode, o_rep.replicates, o_rep.common.seed);
      write_json(voteshift_json(shift_report, paired.diagnostics, false),
                 out + "/voteshift.json");
      psephos::write_histogram_csv(psephos::shift_histogram(deltas, paired),
                                   out + "/voteshift_histogram.csv");
      report_summary["voteshift"] =
          voteshift_json(shift_report, paired.diagnostics, false);

      write_json(report_summary, out + "/report.json");
      std::cerr << "psephos: report written to " << out << '\n';
      write_manifest(out, "report", {o_rep.round1, o_rep.round2},
                     {{"candidate", cand},
                      {"pro_r1", o_rep.pro_r1},
                      {"cand_r2", cand_r2},
                      {"references", o_rep.references},
                      {"synthetic_refs", o_rep.synthetic_refs},
                      {"min_electorate", o_rep.common.min_electorate},
                      {"bins", o_rep.common.bins},
                      {"seed", o_rep.common.seed},
                      {"replicates", o_rep.replicates},
                      {"fit_replicates", o_rep.fit_replicates},
                      {"bootstrap", o_rep.bootstrap},
                      {"skip_stuffing", o_rep.skip_stuffing}});
    }
  } catch (const UsageError& e) {
    std::cerr << "psephos: error: " << e.what() << '\n';
    return 2;
  } catch (const psephos::ParseError& e) {
    std::cerr << "psephos: parse error: " << e.what() << '\n';
    return 2;
  } catch (const psephos::ValidationError& e) {
    std::cerr << "psephos: validation error: " << e.what() << '\n';
    return 2;
  } catch (const psephos::InsufficientDataError& e) {
    std::cerr << "psephos: error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "psephos: error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "psephos: error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "psephos: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "psephos: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
