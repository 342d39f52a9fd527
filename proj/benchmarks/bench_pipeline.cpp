#include "attnpipe/fusion.hpp"
#include "attnpipe/ocular.hpp"
#include "attnpipe/pipeline.hpp"
#include "attnpipe/session_io.hpp"
#include "attnpipe/synth.hpp"

#include <benchmark/benchmark.h>

#include <sstream>

using namespace attnpipe;

namespace {

void BM_Ear(benchmark::State& state) {
    EyeObservation e{{0, 0}, {1, 1}, {3, 1}, {4, 0}, {3, -1}, {1, -1}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(e);
        benchmark::DoNotOptimize(ear(e));
    }
}
BENCHMARK(BM_Ear);

void BM_Fuse(benchmark::State& state) {
    WindowScores s{0.8, 0.6, 1.0, 0.9, 0.7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(s);
        benchmark::DoNotOptimize(fuse(s, 0));
    }
}
BENCHMARK(BM_Fuse);

Session bench_session(double duration) {
    ScenarioScript s;
    s.duration_s = duration;
    ScriptSpan c;
    c.type = SpanType::Closure;
    c.start = duration / 2;
    c.end = c.start + 2.5;
    s.spans.push_back(c);
    return synthesize(s, 1).session;
}

void BM_BuildTimeline(benchmark::State& state) {
    auto session = bench_session(static_cast<double>(state.range(0)));
    auto exec = state.range(1) ? Execution::Concurrent : Execution::Sequential;
    for (auto _ : state) benchmark::DoNotOptimize(build_timeline(session, Config{}, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(session.records.size()));
}
BENCHMARK(BM_BuildTimeline)->Args({60, 0})->Args({60, 1})->Args({500, 0})->Args({500, 1})->Unit(benchmark::kMillisecond);

void BM_ParseAndScore(benchmark::State& state) {
    auto text = serialize_session(bench_session(static_cast<double>(state.range(0))));
    for (auto _ : state) {
        std::istringstream in(text);
        LineStreamSource src(in);
        benchmark::DoNotOptimize(run_source(src, Config{}, EngineOptions{Execution::Sequential, 1024}));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseAndScore)->Arg(60)->Arg(500)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
