// Parallel kernels against the serial reference.

#include <numeric>

#include <benchmark/benchmark.h>

#include "sequency/dcc.hpp"
#include "sequency/features.hpp"
#include "sequency/kmeans.hpp"
#include "sequency/parallel.hpp"
#include "sequency/rng.hpp"
#include "sequency/wft.hpp"

using namespace sequency;

namespace {

const Dataset& data() {
    // one 2508-series shard of 1440 minutes
    static const Dataset d = generate_synthetic(836, 1440, 0.05, 1);
    return d;
}

std::vector<std::size_t> all_members() {
    std::vector<std::size_t> idx(data().size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::vector<double> random_series(std::size_t n) {
    Rng rng(n);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(0, 2);
    return x;
}

void BM_FastWft(benchmark::State& state) {
    const auto x = random_series(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fast_wft(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FastWft)->RangeMultiplier(2)->Range(1 << 6, 1 << 16)->Complexity(benchmark::oNLogN);

void BM_NaiveWft(benchmark::State& state) {
    const auto x = random_series(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::naive_wft(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NaiveWft)->RangeMultiplier(2)->Range(1 << 6, 1 << 11)->Complexity(benchmark::oNSquared);

void BM_LocalRanges(benchmark::State& state) {
    const auto idx = all_members();
    set_parallel_enabled(state.range(0) != 0);
    for (auto _ : state) benchmark::DoNotOptimize(local_ranges(data(), idx));
    set_parallel_enabled(true);
}
BENCHMARK(BM_LocalRanges)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_LocalRangesReference(benchmark::State& state) {
    const auto idx = all_members();
    for (auto _ : state) benchmark::DoNotOptimize(reference::local_ranges(data(), idx));
}
BENCHMARK(BM_LocalRangesReference)->Unit(benchmark::kMillisecond);

void BM_BuildFeatures(benchmark::State& state) {
    const auto idx = all_members();
    const auto ranges = reference::local_ranges(data(), idx);
    std::vector<std::vector<SeriesRange>> shards{ranges};
    const auto g = reduce_global_range(shards);
    set_parallel_enabled(state.range(0) != 0);
    for (auto _ : state) benchmark::DoNotOptimize(build_features(ranges, g, kDefaultLandscapeLength));
    set_parallel_enabled(true);
}
BENCHMARK(BM_BuildFeatures)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

void BM_BuildFeaturesReference(benchmark::State& state) {
    const auto ranges = reference::local_ranges(data(), all_members());
    std::vector<std::vector<SeriesRange>> shards{ranges};
    const auto g = reduce_global_range(shards);
    for (auto _ : state) benchmark::DoNotOptimize(reference::build_features(ranges, g, kDefaultLandscapeLength));
}
BENCHMARK(BM_BuildFeaturesReference)->Unit(benchmark::kMicrosecond);

void BM_Lloyd(benchmark::State& state) {
    const auto plan = make_shard_plan(data().size(), 1, 1);
    const auto f = extract_features(data(), plan, kDefaultLandscapeLength);
    const auto& x = f.shards[0];
    const auto init = init_uniform(x, static_cast<std::size_t>(state.range(1)), 3);
    set_parallel_enabled(state.range(0) != 0);
    for (auto _ : state) benchmark::DoNotOptimize(lloyd(x, init));
    set_parallel_enabled(true);
}
BENCHMARK(BM_Lloyd)->ArgsProduct({{0, 1}, {3, 8}})->ArgNames({"parallel", "K"})->Unit(benchmark::kMillisecond);

void BM_ShardPlan(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(make_shard_plan(250882, 100, 1));
}
BENCHMARK(BM_ShardPlan)->Unit(benchmark::kMillisecond);

void BM_Dcc(benchmark::State& state) {
    DccConfig cfg;
    cfg.K = 3;
    cfg.S = static_cast<std::size_t>(state.range(0));
    cfg.seed = 7;
    for (auto _ : state) benchmark::DoNotOptimize(run_dcc(data(), cfg));
}
BENCHMARK(BM_Dcc)->Arg(1)->Arg(4)->Arg(16)->ArgName("S")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
