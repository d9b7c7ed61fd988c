#include "divret/clustering.hpp"
#include "divret/eval.hpp"
#include "divret/optimizer.hpp"

#include <benchmark/benchmark.h>

using namespace divret;

namespace {

ObjectiveContext instance(std::size_t size) {
    Rng rng(size);
    InstanceSpec spec;
    spec.size = size;
    return random_context(rng, spec);
}

SyntheticData blobs(std::size_t total) {
    SyntheticSpec spec;
    spec.blob_count = 8;
    spec.per_blob = total / 8;
    spec.dim = 64;
    return generate_synthetic(spec);
}

}  // namespace

static void BM_GreedyNaive(benchmark::State& state) {
    const auto ctx = instance(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(greedy_select(ctx, 8));
}
BENCHMARK(BM_GreedyNaive)->Arg(200)->Arg(2000)->Arg(20000);

static void BM_GreedyLazy(benchmark::State& state) {
    const auto ctx = instance(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(lazy_greedy_select(ctx, 8));
}
BENCHMARK(BM_GreedyLazy)->Arg(200)->Arg(2000)->Arg(20000);

static void BM_BruteForceOracle(benchmark::State& state) {
    const auto ctx = instance(16);
    for (auto _ : state) benchmark::DoNotOptimize(brute_force_optimal(ctx, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_BruteForceOracle)->Arg(2)->Arg(4)->Arg(6);

static void BM_LeaderCluster(benchmark::State& state) {
    const auto data = blobs(static_cast<std::size_t>(state.range(0)));
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < data.corpus.size(); ++i) cands.push_back({i, 0.0});
    for (auto _ : state) benchmark::DoNotOptimize(leader_cluster(data.corpus, cands, 0.85, 3));
}
BENCHMARK(BM_LeaderCluster)->Arg(200)->Arg(2000);

static void BM_PrefilterTopM(benchmark::State& state) {
    const auto data = blobs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(prefilter_top_m(data.corpus, data.centers[0], 200, true));
}
BENCHMARK(BM_PrefilterTopM)->Arg(2000)->Arg(80000);
BENCHMARK_MAIN();
