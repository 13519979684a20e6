#include "gazeaffect/gaze_features.hpp"
#include "gazeaffect/metrics.hpp"
#include "gazeaffect/sequence_net.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gazeaffect;

namespace {

Sequence random_sequence(Eigen::Index dim, Eigen::Index frames) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    Sequence s(dim, frames);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = n(rng);
    return s;
}

// Fused input width: 88 speech + 31 gaze features.
constexpr Eigen::Index kFusedWidth = 119;

void BM_Forward(benchmark::State& state) {
    const auto kind = state.range(0) ? LayerKind::blstm : LayerKind::lstm;
    const auto spec = NetworkSpec::stacked(kind, {static_cast<std::size_t>(state.range(1)),
                                                  static_cast<std::size_t>(state.range(2))},
                                           kFusedWidth);
    const auto params = init_network(spec, 1);
    const auto x = random_sequence(kFusedWidth, 1500);
    for (auto _ : state) benchmark::DoNotOptimize(network_forward(params, spec, x));
    state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_Forward)->Args({0, 80, 60})->Args({1, 40, 30})->Args({1, 16, 12})->Unit(benchmark::kMillisecond);

void BM_Bptt(benchmark::State& state) {
    const auto kind = state.range(0) ? LayerKind::blstm : LayerKind::lstm;
    const auto spec = NetworkSpec::stacked(kind, {static_cast<std::size_t>(state.range(1)),
                                                  static_cast<std::size_t>(state.range(2))},
                                           kFusedWidth);
    const auto params = init_network(spec, 1);
    const auto x = random_sequence(kFusedWidth, 1500);
    const std::vector<double> y(1500, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(bptt_gradients(params, spec, x, y));
    state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_Bptt)->Args({0, 80, 60})->Args({1, 40, 30})->Args({1, 16, 12})->Unit(benchmark::kMillisecond);

void BM_GazeExtraction(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 0.05);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GazeLog log;
    log.fps = FrameRate(25.0);
    double h = 0.0, v = 0.0;
    for (std::int64_t t = 0; t < 1500; ++t) {
        if (u(rng) < 0.1) {
            h = u(rng) * 2.0 - 1.0;
            v = u(rng) * 2.0 - 1.0;
        }
        log.frames.push_back({t, h + n(rng), v + n(rng), u(rng) < 0.02, u(rng) > 0.01});
    }
    const WindowSpec window{static_cast<double>(state.range(0)), 1};
    for (auto _ : state) benchmark::DoNotOptimize(extract_gaze_features(log, window));
    state.SetItemsProcessed(state.iterations() * 1500);
}
BENCHMARK(BM_GazeExtraction)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Ccc(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = n(rng);
        y[i] = 0.5 * x[i] + n(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(ccc(PredictionPair(x, y)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ccc)->Arg(1500)->Arg(67500);

}  // namespace

BENCHMARK_MAIN();
