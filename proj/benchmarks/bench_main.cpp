// Microbenchmarks for the hot paths: synthesis, binning, KDE mode, the
// stuffing objective, and the symmetrization loop.

#include <benchmark/benchmark.h>

#include "psephos/fingerprint.hpp"
#include "psephos/ingest.hpp"
#include "psephos/stats.hpp"
#include "psephos/stuffing.hpp"
#include "psephos/synth.hpp"
#include "psephos/voteshift.hpp"

namespace {

psephos::ElectionRound make_round(std::int64_t n, double f = 0.0, std::uint64_t seed = 1) {
  psephos::SynthSpec spec;
  spec.n_boxes = n;
  spec.seed = seed;
  spec.stuffing_fraction = f;
  return psephos::generate(spec);
}

void BM_generate(benchmark::State& state) {
  psephos::SynthSpec spec;
  spec.n_boxes = state.range(0);
  for (auto _ : state) {
    spec.seed++;
    benchmark::DoNotOptimize(psephos::generate(spec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_generate)->Arg(10000)->Arg(100000);

void BM_raw_fingerprint(benchmark::State& state) {
  auto round = make_round(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(psephos::raw_fingerprint(round, "E", 100));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_raw_fingerprint)->Arg(100000);

void BM_standardized_fingerprint(benchmark::State& state) {
  auto round = make_round(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(psephos::standardized_fingerprint(round, "E", 80));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_standardized_fingerprint)->Arg(100000);

void BM_kde_mode(benchmark::State& state) {
  psephos::Rng rng(4);
  std::vector<double> xs(state.range(0));
  for (auto& x : xs) x = 0.03 + 0.02 * rng.next_gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(psephos::stats::kde_mode(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_kde_mode)->Arg(10000)->Arg(190000);

void BM_stuffing_objective_eval(benchmark::State& state) {
  auto round = make_round(state.range(0), 0.05);
  std::vector<double> turnouts, shares;
  std::vector<std::int64_t> electorates;
  for (const auto& box : round.boxes) {
    double t = double(box.valid_votes) / double(box.electorate);
    double v = double(box.votes[0]) / double(box.valid_votes);
    if (t > 0.25 && v > 0.25) {
      turnouts.push_back(t);
      shares.push_back(v);
      electorates.push_back(box.electorate);
    }
  }
  psephos::FitConfig config;
  auto params = psephos::plug_in_fair_params(turnouts, shares);
  psephos::StuffingObjective objective(turnouts, shares, electorates, config, params);
  double f = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective.evaluate(f));
    f = f < 0.2 ? f + 0.01 : 0.0;
  }
  state.SetItemsProcessed(state.iterations() * turnouts.size() * config.fit_replicates);
}
BENCHMARK(BM_stuffing_objective_eval)->Arg(50000);

void BM_symmetrize(benchmark::State& state) {
  auto round1 = make_round(state.range(0));
  psephos::ShiftSpec shift;
  shift.base_shift = 0.02;
  auto round2 = psephos::inject_round2(round1, shift).round2;
  auto paired = psephos::pair_rounds(round1, round2);
  psephos::DeltaConfig config;
  config.pro_candidates_r1 = {"E"};
  config.candidate_r2 = "E";
  auto deltas = psephos::compute_deltas(paired, config);
  double mode = psephos::estimate_mode(deltas);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        psephos::symmetrize_and_excess(deltas, paired, config, mode, 50, 1));
  state.SetItemsProcessed(state.iterations() * 50 * state.range(0) / 2);
}
BENCHMARK(BM_symmetrize)->Arg(50000);

}  // namespace

BENCHMARK_MAIN();
