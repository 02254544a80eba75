#include <benchmark/benchmark.h>

#include <sstream>

#include "ewlogit/data_io.hpp"
#include "ewlogit/posterior.hpp"
#include "ewlogit/predictors.hpp"
#include "ewlogit/sampler.hpp"

using namespace ewlogit;

namespace {

std::shared_ptr<const PosteriorData> bench_data(int n, int d, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < n; ++i) {
        LabeledExample e;
        e.x.resize(d);
        for (double& v : e.x) v = rng.next_gaussian();
        e.y = rng.next_double() < 0.5 ? +1 : -1;
        ex.push_back(std::move(e));
    }
    return PosteriorData::make(ex);
}

void BM_PotentialEval(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    auto data = bench_data(t, 2, 1);
    const PosteriorSpec spec = make_posterior(data, t, 5.0);
    const Vec theta{0.3, -0.7};
    for (auto _ : state) benchmark::DoNotOptimize(potential(spec, theta));
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_PotentialEval)->Arg(50)->Arg(200)->Arg(800);

void BM_MalaStep(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    auto data = bench_data(t, 2, 2);
    const PosteriorSpec spec = make_posterior(data, t, 5.0);
    ChainState chain = ChainState::init(Vec{0.0, 0.0}, 0.05, 42);
    const Target target = make_target(spec);
    for (auto _ : state) benchmark::DoNotOptimize(mala_step(target, chain));
}
BENCHMARK(BM_MalaStep)->Arg(50)->Arg(200);

void BM_ExactPredict2d(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    auto data = bench_data(t, 2, 3);
    const PosteriorSpec spec = make_posterior(data, t, 5.0);
    const Vec query{0.8, -0.4};
    Vec hint;
    for (auto _ : state) {
        ExactOptions opts;
        if (!hint.empty()) opts.mode_hint = &hint;
        const Prediction p = ew_predict_exact(spec, query, opts);
        benchmark::DoNotOptimize(p.p_plus);
        hint = potential_mode(spec);
    }
}
BENCHMARK(BM_ExactPredict2d)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_PracticalRound(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    auto data = bench_data(t, 2, 4);
    const PosteriorSpec spec = make_posterior(data, t, 2.0);
    PracticalSampler sampler(2, 2.0, 7);
    for (auto _ : state) {
        const auto samples = sampler.round(spec, data->max_norm());
        benchmark::DoNotOptimize(samples.size());
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_PracticalRound)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ParseLibsvm(benchmark::State& state) {
    Dataset src;
    src.d = 12;
    SplitMix64 rng(5);
    for (int i = 0; i < 100; ++i) {
        LabeledExample e;
        e.x.assign(12, 0.0);
        for (int j = 0; j < 12; j += 2) e.x[j] = rng.next_gaussian();
        e.y = rng.next_double() < 0.5 ? +1 : -1;
        src.examples.push_back(std::move(e));
    }
    const std::string text = serialize_libsvm(src);
    for (auto _ : state) {
        std::istringstream in(text);
        const Dataset ds = parse_libsvm(in);
        benchmark::DoNotOptimize(ds.size());
    }
    state.SetBytesProcessed(state.iterations() * text.size());
}
BENCHMARK(BM_ParseLibsvm);

}  // namespace

BENCHMARK_MAIN();
