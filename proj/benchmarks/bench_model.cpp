#include <benchmark/benchmark.h>

#include "moodcast/model.hpp"
#include "moodcast/rng.hpp"

#include <vector>

using namespace moodcast;

namespace {

std::vector<double> random_seq(int steps, Rng& rng) {
    std::vector<double> seq(static_cast<std::size_t>(steps) * features::kFeatureCount);
    for (auto& v : seq) v = rng.uniform(-2.0, 2.0);
    return seq;
}

} // namespace

static void BM_Forward(benchmark::State& state) {
    Rng rng(1);
    model::ModelParams p = model::ModelParams::init(features::kFeatureCount, 4, rng);
    const int steps = static_cast<int>(state.range(0));
    const auto seq = random_seq(steps, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::forward(p, seq, steps));
    }
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(7);

static void BM_ForwardBackward(benchmark::State& state) {
    Rng rng(2);
    model::ModelParams p = model::ModelParams::init(features::kFeatureCount, 4, rng);
    const int steps = static_cast<int>(state.range(0));
    const auto seq = random_seq(steps, rng);
    model::ForwardCache cache;
    for (auto _ : state) {
        model::forward(p, seq, steps, &cache);
        benchmark::DoNotOptimize(model::backward(p, cache, 10.0));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(7);

static void BM_AdamStep(benchmark::State& state) {
    Rng rng(3);
    model::ModelParams p = model::ModelParams::init(features::kFeatureCount, 4, rng);
    auto adam = model::AdamState::make(p.size());
    std::vector<double> grads(p.size());
    for (auto& g : grads) g = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        model::adam_step(p, grads, adam);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}
BENCHMARK(BM_AdamStep);

BENCHMARK_MAIN();
