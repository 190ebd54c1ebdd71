#include <benchmark/benchmark.h>

#include "moodcast/geo.hpp"
#include "moodcast/rng.hpp"

#include <vector>

using namespace moodcast;

namespace {

std::vector<GpsFix> day_trace(int n_days, Rng& rng) {
    std::vector<GpsFix> fixes;
    std::int64_t t = 0;
    for (int d = 0; d < n_days; ++d) {
        for (int i = 0; i < 288; ++i) {
            GpsFix f;
            f.t = Timestamp{t, 0};
            const bool at_work = i > 100 && i < 210;
            f.lat = (at_work ? 47.32 : 47.30) + rng.uniform(-2e-5, 2e-5);
            f.lon = 8.20 + rng.uniform(-2e-5, 2e-5);
            f.accuracy_m = 10.0;
            f.speed_mps = rng.uniform(0.0, 1.0);
            fixes.push_back(f);
            t += 300'000;
        }
    }
    return fixes;
}

} // namespace

static void BM_Haversine(benchmark::State& state) {
    Rng rng(1);
    const geo::GeoPoint a{rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)};
    const geo::GeoPoint b{rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(geo::haversine_m(a, b));
    }
}
BENCHMARK(BM_Haversine);

static void BM_TimeBasedClustering(benchmark::State& state) {
    Rng rng(2);
    const auto fixes = day_trace(static_cast<int>(state.range(0)), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(geo::cluster_time_based(fixes));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixes.size()));
}
BENCHMARK(BM_TimeBasedClustering)->Arg(7)->Arg(56);

static void BM_AdaptiveKmeans(benchmark::State& state) {
    Rng rng(3);
    const auto fixes = day_trace(static_cast<int>(state.range(0)), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(geo::cluster_kmeans_adaptive(fixes));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixes.size()));
}
BENCHMARK(BM_AdaptiveKmeans)->Arg(7)->Arg(28);

static void BM_Dbscan(benchmark::State& state) {
    Rng rng(4);
    const auto fixes = day_trace(static_cast<int>(state.range(0)), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(geo::cluster_dbscan(fixes));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixes.size()));
}
BENCHMARK(BM_Dbscan)->Arg(7)->Arg(28);
