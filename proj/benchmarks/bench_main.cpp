#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <vdcal/calibrate.hpp>
#include <vdcal/cleaning.hpp>
#include <vdcal/ingest.hpp>
#include <vdcal/stats.hpp>
#include <vdcal/synth.hpp>

namespace {

using namespace vdcal;

std::vector<PairedObservation> site(std::size_t n) {
  SynthSpec s;
  s.truth = {60, 800, 1.2, 1.7, Provenance::DD2};
  s.n_obs = n;
  s.volume_law = VolumeLaw::BimodalDaily;
  s.noise_sigma0 = 0.05;
  s.noise_growth = 0.1;
  s.outlier_count = 2;
  return generate_site(s, {11, Direction::North}).observations;
}

void BM_Dbscan(benchmark::State& state) {
  const auto points = normalize_site(site(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(points, 0.1, 5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dbscan)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_FitBpr(benchmark::State& state) {
  const auto obs = site(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_bpr(obs, 60, 800));
}
BENCHMARK(BM_FitBpr)->Arg(336)->Arg(1000)->Arg(5000);

void BM_CalibrateSite(benchmark::State& state) {
  const auto obs = site(336);
  const SiteMetadata meta{{11, Direction::North}, RoadClass::Principal, 561, 48, 2100, {}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(calibrate_site(meta, obs));
}
BENCHMARK(BM_CalibrateSite);

void BM_HourlyAggregation(benchmark::State& state) {
  std::vector<VehicleRecord> records;
  for (const auto& o : site(336)) {
    const auto r = vehicle_records_for(o, 30);
    records.insert(records.end(), r.begin(), r.end());
  }
  for (auto _ : state) {
    HourlyAggregator agg;
    for (const auto& r : records) agg.add(r);
    benchmark::DoNotOptimize(agg.result());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_HourlyAggregation);

void BM_Percentile(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (auto& v : values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(stats::percentile(values, 0.95));
}
BENCHMARK(BM_Percentile)->Arg(336)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
