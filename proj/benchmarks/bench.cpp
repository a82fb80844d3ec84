#include <benchmark/benchmark.h>

#include "cqr/conformal.hpp"
#include "cqr/dataset.hpp"
#include "cqr/net.hpp"
#include "cqr/rng.hpp"
#include "cqr/stats.hpp"

namespace {

cqr::Network make_net(std::size_t input_dim) {
    cqr::NetConfig config;
    config.seed = 7;
    return cqr::init_network(input_dim, cqr::QuantileGrid{}, config);
}

void BM_Forward(benchmark::State& state) {
    auto net = make_net(static_cast<std::size_t>(state.range(0)));
    std::vector<double> x(net.input_dim, 0.3);
    cqr::Rng rng(1);
    for (auto _ : state) {
        auto out = cqr::forward(net, x, false, rng);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(16)->Arg(256);

void BM_McPredict(benchmark::State& state) {
    auto net = make_net(4);
    std::vector<double> x(net.input_dim, 0.3);
    auto samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto est = cqr::mc_predict(net, x, samples, 11);
        benchmark::DoNotOptimize(est);
    }
}
BENCHMARK(BM_McPredict)->Arg(100)->Arg(1000);

void BM_CalibrationConstant(benchmark::State& state) {
    cqr::Rng rng(3);
    std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
    for (double& s : scores) s = rng.gaussian();
    for (auto _ : state) {
        double q = cqr::calibration_constant(scores, 0.1);
        benchmark::DoNotOptimize(q);
    }
}
BENCHMARK(BM_CalibrationConstant)->Arg(1000)->Arg(10000);

void BM_MannWhitney(benchmark::State& state) {
    cqr::Rng rng(5);
    std::vector<double> a(static_cast<std::size_t>(state.range(0)));
    std::vector<double> b(a.size());
    for (double& v : a) v = rng.gaussian();
    for (double& v : b) v = rng.gaussian() + 0.2;
    for (auto _ : state) {
        auto r = cqr::mann_whitney(a, b);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_MannWhitney)->Arg(100)->Arg(2000);

} // namespace

BENCHMARK_MAIN();
