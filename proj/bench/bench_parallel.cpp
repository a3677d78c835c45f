// Serial reference vs OpenMP kernels: batch scoring and the evaluation sweep.
#include <benchmark/benchmark.h>

#include "graphrec/eval.hpp"
#include "graphrec/scoring.hpp"

namespace {

using namespace graphrec;

struct Fixture {
    std::vector<InteractionEvent> events;
    GraphData graph;
    std::vector<std::string> users;

    explicit Fixture(std::size_t users_per) {
        eval::SyntheticSpec spec;
        spec.communities = 4;
        spec.users_per = users_per;
        spec.items_per = 200;
        spec.interactions_per_user = 30;
        spec.seed = 7;
        events = eval::generate_synthetic(spec);
        for (const auto& e : events) graph.upsert(e);
        for (std::size_t c = 0; c < spec.communities; ++c)
            for (std::size_t u = 0; u < users_per; ++u) users.push_back(eval::synthetic_user(c, u));
    }
};

const Fixture& fixture() {
    static Fixture f(250);
    return f;
}

void BM_RecommendManySerial(benchmark::State& state) {
    ScoringParams p;
    p.depth = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(recommend_many_serial(fixture().graph, fixture().users, p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixture().users.size()));
}

void BM_RecommendManyParallel(benchmark::State& state) {
    ScoringParams p;
    p.depth = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(recommend_many(fixture().graph, fixture().users, p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fixture().users.size()));
}

eval::SweepGrid small_grid() {
    eval::SweepGrid g;
    g.usage_windows = {25, 100};
    g.depths = {2, 3, 5};
    return g;
}

eval::SplitSpec split_for(const Fixture& f) {
    eval::SplitSpec s;
    s.cut_ts = eval::quantile_cut(f.events, 0.8);
    s.sample_size = 50;
    s.repetitions = 2;
    return s;
}

void BM_SweepSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(eval::sweep_serial(f.events, split_for(f), small_grid()));
}

void BM_SweepParallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(eval::sweep(f.events, split_for(f), small_grid()));
}

}  // namespace

BENCHMARK(BM_RecommendManySerial)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RecommendManyParallel)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
