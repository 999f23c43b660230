#include "psephos/stuffing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psephos/rng.hpp"
#include "psephos/stats.hpp"
#include "psephos/synth.hpp"

namespace psephos {

namespace {

constexpr std::uint64_t kStreamCrn = 0xF17;
constexpr std::uint64_t kStreamBoot = 0xB007;
constexpr std::uint64_t kStreamCalibrate = 0xCA1;

constexpr double kGolden = 0.6180339887498949;
constexpr double kGoldenTolerance = 0.01;
constexpr double kRefineStep = 0.002;
constexpr int kMaxStages = 5;
constexpr double kStageTolerance = 0.004;

// Per-box scale left after removing the county-offset variance from the
// total spread (floored at a quarter of it).
double residual_sd(double total_sd, double county_sd) {
  double v = total_sd * total_sd - county_sd * county_sd;
  return std::sqrt(std::max(v, 0.0625 * total_sd * total_sd));
}

struct SearchResult {
  double f_hat = 0.0;
  double loss = 0.0;
  double loss_at_zero = 0.0;
  double loss_at_one = 0.0;
  bool converged = true;
};

SearchResult golden_search(const StuffingObjective& objective) {
  double lo_seen = std::numeric_limits<double>::infinity();
  double hi_seen = -lo_seen;
  auto eval = [&](double f) {
    double j = objective.evaluate(f);
    lo_seen = std::min(lo_seen, j);
    hi_seen = std::max(hi_seen, j);
    return j;
  };

  double a = 0.0, b = 1.0;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > kGoldenTolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = eval(d);
    }
  }

  // One grid refinement around the bracket at the reporting resolution.
  double center = 0.5 * (a + b);
  double best_f = center, best_j = eval(center);
  for (int k = -5; k <= 5; ++k) {
    double f = center + k * kRefineStep;
    if (f < 0.0 || f > 1.0 || k == 0) continue;
    double j = eval(f);
    if (j < best_j || (j == best_j && f < best_f)) {
      best_j = j;
      best_f = f;
    }
  }

  SearchResult result;
  result.f_hat = best_f;
  result.loss = best_j;
  result.loss_at_zero = eval(0.0);
  result.loss_at_one = eval(1.0);
  // The boundaries are grid points of the refinement too.
  if (result.loss_at_one < result.loss) {
    result.f_hat = 1.0;
    result.loss = result.loss_at_one;
  }
  if (result.loss_at_zero <= result.loss) {
    result.f_hat = 0.0;
    result.loss = result.loss_at_zero;
  }
  // Flat objective: nothing to fit.
  result.converged = hi_seen > lo_seen && (hi_seen - lo_seen) > 1e-9 * hi_seen;
  return result;
}

// Samples the full model (fair + stuffing at f) once and returns the
// restricted median/MAD of the realized turnouts and shares.
struct ModelStats {
  double t_median = 0, t_mad = 0, v_median = 0, v_mad = 0;
  bool ok = false;
};

ModelStats model_restricted_stats(const FitFairParams& params,
                                  const std::vector<std::int64_t>& electorates,
                                  const FitConfig& config, double f, int iteration) {
  const double min_t = config.restriction.min_turnout;
  const double min_v = config.restriction.min_share;
  const double resid_t = residual_sd(params.turnout_sd, config.county_sd);
  const double resid_v = residual_sd(params.share_sd, config.county_sd);
  const auto bpc =
      static_cast<std::size_t>(std::max<std::int64_t>(config.boxes_per_county, 1));
  const double extreme_hi = f + config.extreme_fraction;
  const std::size_t m = std::min<std::size_t>(electorates.size(), 40000);

  Rng rng(derive_seed(config.seed, kStreamCalibrate, static_cast<std::uint64_t>(iteration)));
  std::vector<double> ts, vs;
  ts.reserve(m);
  vs.reserve(m);
  double dt = 0.0, dv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i % bpc == 0) {
      dt = config.county_sd * rng.next_gaussian();
      dv = config.county_sd * rng.next_gaussian();
    }
    FairParams fair{params.turnout_mean + dt, resid_t, params.share_mean + dv, resid_v};
    BoxDraw draw = sample_box_draw(rng, fair, config.alpha, electorates[i]);
    double t, v;
    if (draw.stuff_u < f) {
      t = draw.turnout_inc;
      v = draw.share_inc;
    } else if (draw.stuff_u < extreme_hi) {
      t = draw.turnout_ext;
      v = draw.share_ext;
    } else {
      t = draw.turnout_fair;
      v = draw.share_fair;
    }
    if (t > min_t && v > min_v) {
      ts.push_back(t);
      vs.push_back(v);
    }
  }
  ModelStats stats_out;
  if (ts.size() < 100) return stats_out;
  stats_out.t_median = stats::median(ts);
  stats_out.t_mad = stats::scaled_mad(ts);
  stats_out.v_median = stats::median(vs);
  stats_out.v_mad = stats::scaled_mad(vs);
  stats_out.ok = true;
  return stats_out;
}

struct FitCore {
  double f_hat = 0.0;
  double loss = 0.0;
  double loss_at_zero = 0.0;
  double loss_at_one = 0.0;
  bool converged = true;
  FitFairParams fair;
};

// Staged fit: search f, then recalibrate the fair parameters so the full
// model (including stuffing at the current estimate) reproduces the observed
// restricted median/MAD, and search again until the estimate settles.
// Truncation, count rounding, and the 25% restriction distort plug-in
// estimates, and an uncalibrated model buys the missing tail mass with f.
FitCore run_fit(const std::vector<double>& turnouts, const std::vector<double>& shares,
                const std::vector<std::int64_t>& electorates, FitConfig config,
                std::uint64_t seed) {
  config.seed = seed;
  const FitFairParams observed = plug_in_fair_params(turnouts, shares);

  FitFairParams params = observed;
  FitCore core;
  double previous_f = -1.0;
  for (int stage = 0; stage < kMaxStages; ++stage) {
    if (stage > 0) {
      ModelStats model = model_restricted_stats(params, electorates, config, core.f_hat,
                                                stage);
      if (!model.ok) break;
      params.turnout_mean += observed.turnout_mean - model.t_median;
      params.share_mean += observed.share_mean - model.v_median;
      if (model.t_mad > 1e-9)
        params.turnout_sd = std::max(params.turnout_sd * observed.turnout_sd / model.t_mad,
                                     1e-6);
      if (model.v_mad > 1e-9)
        params.share_sd = std::max(params.share_sd * observed.share_sd / model.v_mad, 1e-6);
    }

    StuffingObjective objective(turnouts, shares, electorates, config, params);
    SearchResult search = golden_search(objective);
    core.f_hat = search.f_hat;
    core.loss = search.loss;
    core.loss_at_zero = search.loss_at_zero;
    core.loss_at_one = search.loss_at_one;
    core.converged = search.converged;
    core.fair = params;
    if (!search.converged) break;
    if (previous_f >= 0.0 && std::fabs(core.f_hat - previous_f) <= kStageTolerance) break;
    previous_f = core.f_hat;
  }
  return core;
}

}  // namespace

FitFairParams plug_in_fair_params(const std::vector<double>& turnouts,
                                  const std::vector<double>& shares) {
  FitFairParams params;
  params.turnout_mean = stats::median(turnouts);
  params.turnout_sd = std::max(stats::scaled_mad(turnouts), 1e-6);
  params.share_mean = stats::median(shares);
  params.share_sd = std::max(stats::scaled_mad(shares), 1e-6);
  return params;
}

StuffingObjective::StuffingObjective(const std::vector<double>& turnouts,
                                     const std::vector<double>& shares,
                                     const std::vector<std::int64_t>& electorates,
                                     const FitConfig& config,
                                     const FitFairParams& model_params)
    : n_(turnouts.size()), config_(config) {
  const int bins = config_.bins;
  const auto cells = static_cast<std::size_t>(bins) * bins;
  const double min_t = config_.restriction.min_turnout;
  const double min_v = config_.restriction.min_share;
  auto grid_bin = [&](double t, double v) -> std::int32_t {
    if (!(t > min_t) || !(v > min_v)) return -1;
    int col = std::min(static_cast<int>(t * bins), bins - 1);
    int row = std::min(static_cast<int>(v * bins), bins - 1);
    return row * bins + col;
  };

  observed_.assign(cells, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    std::int32_t bin = grid_bin(turnouts[i], shares[i]);
    if (bin >= 0) observed_[bin] += 1.0;
  }
  if (n_ > 0)
    for (auto& cell : observed_) cell /= static_cast<double>(n_);

  // Common random numbers: replicate draws are fixed up front, so the
  // objective is a deterministic, near-smooth function of f.
  const double resid_t = residual_sd(model_params.turnout_sd, config_.county_sd);
  const double resid_v = residual_sd(model_params.share_sd, config_.county_sd);
  const auto bpc =
      static_cast<std::size_t>(std::max<std::int64_t>(config_.boxes_per_county, 1));
  replicates_.resize(config_.fit_replicates);
  for (int r = 0; r < config_.fit_replicates; ++r) {
    Rng rng(derive_seed(config_.seed, kStreamCrn, static_cast<std::uint64_t>(r)));
    auto& rep = replicates_[r];
    rep.resize(n_);
    double county_dt = 0.0, county_dv = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (i % bpc == 0) {
        county_dt = config_.county_sd * rng.next_gaussian();
        county_dv = config_.county_sd * rng.next_gaussian();
      }
      FairParams fair{model_params.turnout_mean + county_dt, resid_t,
                      model_params.share_mean + county_dv, resid_v};
      BoxDraw draw = sample_box_draw(rng, fair, config_.alpha, electorates[i]);
      rep[i] = {static_cast<float>(draw.stuff_u),
                grid_bin(draw.turnout_fair, draw.share_fair),
                grid_bin(draw.turnout_inc, draw.share_inc),
                grid_bin(draw.turnout_ext, draw.share_ext)};
    }
  }
}

double StuffingObjective::evaluate(double f) const {
  const auto cells = observed_.size();
  std::vector<double> model(cells, 0.0);
  std::vector<std::int32_t> counts(cells);
  const double extreme_hi = f + config_.extreme_fraction;
  int replicates_used = 0;
  for (const auto& rep : replicates_) {
    std::fill(counts.begin(), counts.end(), 0);
    std::int64_t included = 0;
    for (const auto& box : rep) {
      std::int32_t bin = box.stuff_u < f
                             ? box.inc_bin
                             : (box.stuff_u < extreme_hi ? box.ext_bin : box.fair_bin);
      if (bin >= 0) {
        ++counts[bin];
        ++included;
      }
    }
    if (included == 0) continue;
    const double inv = 1.0 / static_cast<double>(included);
    for (std::size_t cidx = 0; cidx < cells; ++cidx)
      model[cidx] += static_cast<double>(counts[cidx]) * inv;
    ++replicates_used;
  }
  if (replicates_used == 0) return 0.0;
  double l2 = 0.0;
  const double inv_r = 1.0 / static_cast<double>(replicates_used);
  for (std::size_t cidx = 0; cidx < cells; ++cidx) {
    double diff = model[cidx] * inv_r - observed_[cidx];
    l2 += diff * diff;
  }
  return l2;
}

StuffingFit fit(const ElectionRound& round, const std::string& candidate,
                const FitConfig& config) {
  const std::size_t ci = round.candidate_index(candidate);
  const double min_t = config.restriction.min_turnout;
  const double min_v = config.restriction.min_share;

  std::vector<double> turnouts, shares;
  std::vector<std::int64_t> electorates;
  turnouts.reserve(round.boxes.size());
  shares.reserve(round.boxes.size());
  electorates.reserve(round.boxes.size());
  for (const auto& box : round.boxes) {
    double t = static_cast<double>(box.valid_votes) / static_cast<double>(box.electorate);
    double v = static_cast<double>(box.votes[ci]) / static_cast<double>(box.valid_votes);
    if (t > min_t && v > min_v) {
      turnouts.push_back(t);
      shares.push_back(v);
      electorates.push_back(box.electorate);
    }
  }
  if (static_cast<std::int64_t>(turnouts.size()) < config.min_boxes)
    throw InsufficientDataError("insufficient data: " + std::to_string(turnouts.size()) +
                                " boxes after the turnout/share restriction, need " +
                                std::to_string(config.min_boxes));

  FitCore core = run_fit(turnouts, shares, electorates, config, config.seed);

  StuffingFit result;
  result.f_hat = core.f_hat;
  result.alpha = config.alpha;
  result.loss = core.loss;
  result.loss_at_zero = core.loss_at_zero;
  result.loss_at_one = core.loss_at_one;
  result.n_boxes_used = static_cast<std::int64_t>(turnouts.size());
  result.restriction = config.restriction;
  result.converged = core.converged;
  result.fair_turnout_mean = core.fair.turnout_mean;
  result.fair_turnout_sd = core.fair.turnout_sd;
  result.fair_share_mean = core.fair.share_mean;
  result.fair_share_sd = core.fair.share_sd;

  if (!core.converged) {
    result.f_sd = std::numeric_limits<double>::infinity();
    result.significant = false;
    return result;
  }

  if (config.bootstrap_refits > 0) {
    // Parametric bootstrap: regenerate restricted datasets at f_hat with the
    // fitted fair parameters and rerun the whole staged fit on each.
    const double resid_t = residual_sd(core.fair.turnout_sd, config.county_sd);
    const double resid_v = residual_sd(core.fair.share_sd, config.county_sd);
    const auto bpc =
        static_cast<std::size_t>(std::max<std::int64_t>(config.boxes_per_county, 1));
    std::vector<double> refits;
    refits.reserve(config.bootstrap_refits);
    const double extreme_hi = core.f_hat + config.extreme_fraction;
    for (int k = 0; k < config.bootstrap_refits; ++k) {
      std::uint64_t boot_seed =
          derive_seed(config.seed, kStreamBoot, static_cast<std::uint64_t>(k));
      Rng rng(boot_seed);
      std::vector<double> bt, bv;
      std::vector<std::int64_t> be;
      bt.reserve(electorates.size());
      bv.reserve(electorates.size());
      be.reserve(electorates.size());
      double county_dt = 0.0, county_dv = 0.0;
      for (std::size_t i = 0; i < electorates.size(); ++i) {
        const std::int64_t electorate = electorates[i];
        if (i % bpc == 0) {
          county_dt = config.county_sd * rng.next_gaussian();
          county_dv = config.county_sd * rng.next_gaussian();
        }
        FairParams fitted{core.fair.turnout_mean + county_dt, resid_t,
                          core.fair.share_mean + county_dv, resid_v};
        BoxDraw draw = sample_box_draw(rng, fitted, config.alpha, electorate);
        double t, v;
        if (draw.stuff_u < core.f_hat) {
          t = draw.turnout_inc;
          v = draw.share_inc;
        } else if (draw.stuff_u < extreme_hi) {
          t = draw.turnout_ext;
          v = draw.share_ext;
        } else {
          t = draw.turnout_fair;
          v = draw.share_fair;
        }
        if (t > min_t && v > min_v) {
          bt.push_back(t);
          bv.push_back(v);
          be.push_back(electorate);
        }
      }
      refits.push_back(run_fit(bt, bv, be, config, boot_seed).f_hat);
    }
    result.f_sd = stats::sample_sd(refits);
  } else {
    result.f_sd = std::numeric_limits<double>::quiet_NaN();
  }

  result.significant = std::isfinite(result.f_sd) && result.f_hat > 2.0 * result.f_sd;
  return result;
}

}  // namespace psephos
