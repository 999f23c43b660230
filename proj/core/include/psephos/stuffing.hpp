#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psephos/types.hpp"

namespace psephos {

struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitRestriction {
  double min_turnout = 0.25;  // strict >
  double min_share = 0.25;
};

struct FitConfig {
  double alpha = 2.0;          // fixed incremental intensity exponent
  double extreme_fraction = 0.0;
  int fit_replicates = 32;     // model fingerprints averaged per objective eval
  int bootstrap_refits = 50;   // 0 disables the bootstrap (f_sd = NaN)
  int bins = 100;
  std::uint64_t seed = 42;
  FitRestriction restriction;
  std::int64_t min_boxes = 1000;
  // Fair-model regional layer, mirroring the generative model: pseudo-county
  // mean offsets ~ N(0, county_sd) with the residual per-box scale reduced
  // so the marginal spread matches the robust estimate. Without it, per-
  // county truncation pileup near turnout 1 is misread as stuffing.
  double county_sd = 0.05;
  std::int64_t boxes_per_county = 6;
};

struct StuffingFit {
  double f_hat = 0.0;
  double f_sd = 0.0;           // parametric bootstrap; +inf if not converged
  double alpha = 2.0;
  double loss = 0.0;           // objective at the optimum
  double loss_at_zero = 0.0;   // local-optimality witnesses
  double loss_at_one = 0.0;
  std::int64_t n_boxes_used = 0;
  FitRestriction restriction;
  bool significant = false;    // f_hat > 2 * f_sd
  bool converged = true;
  // Fair-model parameters estimated from the restricted data (median /
  // scaled MAD of turnout and share).
  double fair_turnout_mean = 0.0, fair_turnout_sd = 0.0;
  double fair_share_mean = 0.0, fair_share_sd = 0.0;
};

// Fair-model parameters of the fit (marginal means and total spreads; the
// county layer consumes county_sd of the spread, the per-box scale gets the
// residual).
struct FitFairParams {
  double turnout_mean = 0.0;
  double turnout_sd = 0.0;
  double share_mean = 0.0;
  double share_sd = 0.0;
};

// Precomputed objective for the fraud-parameter fit. Replicate box draws do
// not depend on f (common random numbers), so each evaluation only re-bins.
class StuffingObjective {
 public:
  // turnouts/shares/electorates describe the restricted observed boxes;
  // model_params parameterize the fair model used for the replicates.
  StuffingObjective(const std::vector<double>& turnouts, const std::vector<double>& shares,
                    const std::vector<std::int64_t>& electorates, const FitConfig& config,
                    const FitFairParams& model_params);

  // Mean L2 distance between the observed normalized fingerprint and the
  // model fingerprint averaged over the replicates.
  double evaluate(double f) const;

  std::int64_t n_boxes() const { return static_cast<std::int64_t>(n_); }

 private:
  struct ReplicateBox {
    float stuff_u;
    std::int32_t fair_bin;  // -1 when outside the fit restriction
    std::int32_t inc_bin;
    std::int32_t ext_bin;
  };

  std::size_t n_ = 0;
  FitConfig config_;
  std::vector<double> observed_;             // normalized grid
  std::vector<std::vector<ReplicateBox>> replicates_;
};

// Robust location/scale of the restricted data (median, scaled MAD).
FitFairParams plug_in_fair_params(const std::vector<double>& turnouts,
                                  const std::vector<double>& shares);

// Fits the fraud parameter f to a round (golden-section search plus a 0.002
// grid refinement; f_sd from a parametric bootstrap at f_hat). The round is
// expected to be pre-filtered to electorate >= 100. Throws
// InsufficientDataError when fewer than config.min_boxes boxes survive the
// restriction.
StuffingFit fit(const ElectionRound& round, const std::string& candidate,
                const FitConfig& config = {});

}  // namespace psephos
