#include <benchmark/benchmark.h>

#include <vector>

#include "htsgd/network.hpp"
#include "htsgd/prune.hpp"
#include "htsgd/random_stream.hpp"
#include "htsgd/stable.hpp"

using namespace htsgd;

static void BM_Philox(benchmark::State& state) {
  RandomStream stream(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(stream.next_u64());
}
BENCHMARK(BM_Philox);

static void BM_StableScalar(benchmark::State& state) {
  RandomStream stream(1, 0);
  const double alpha = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_scalar(alpha, stream));
}
BENCHMARK(BM_StableScalar)->Arg(100)->Arg(150)->Arg(190)->Arg(200);

static void BM_StableVector(benchmark::State& state) {
  RandomStream stream(1, 0);
  const StableSpec spec{1.75, static_cast<VectorType>(state.range(0)), 1.0};
  std::vector<double> out(143);
  for (auto _ : state) {
    sample_vector(spec, out, stream);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_StableVector)->Arg(0)->Arg(1)->Arg(2);

static NetworkParams random_net(std::size_t n, std::size_t d, std::size_t l) {
  NetworkShape shape{n, d, l, true, SecondLayer::Trainable, Activation::ReLU};
  RandomStream stream(3, 0);
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(shape.unit_dim()), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = stream.next_normal();
  return NetworkParams(shape, theta);
}

static void BM_GradRisk(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 140, m = 500;
  const auto params = random_net(n, d, 2);
  RandomStream stream(4, 0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = stream.next_normal();
  std::vector<int> labels(m);
  for (auto& y : labels) y = static_cast<int>(stream.next_below(2));
  for (auto _ : state) benchmark::DoNotOptimize(grad_risk(params, x, labels));
}
BENCHMARK(BM_GradRisk)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_PruningRatio(benchmark::State& state) {
  const auto params = random_net(static_cast<std::size_t>(state.range(0)), 140, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pruning_ratio(params, 0.1));
}
BENCHMARK(BM_PruningRatio)->Arg(2000)->Arg(10000);

BENCHMARK_MAIN();
