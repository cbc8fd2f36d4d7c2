#include <benchmark/benchmark.h>

#include "tapauc/check/oracles.hpp"
#include "tapauc/harness.hpp"
#include "tapauc/losses.hpp"
#include "tapauc/nn.hpp"
#include "tapauc/random.hpp"

namespace {

using namespace tapauc;

loss::ScorePartition random_partition(std::size_t n_pos, std::size_t n_neg) {
  Rng rng(1);
  nn::Vector p(static_cast<Eigen::Index>(n_pos)), n(static_cast<Eigen::Index>(n_neg));
  for (auto& x : p) x = rng.uniform();
  for (auto& x : n) x = rng.uniform();
  return loss::ScorePartition::from_sets(p, n);
}

void BM_ApproxAucLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto part = random_partition(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(loss::approx_auc_loss(part, 0.3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApproxAucLoss)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_NaivePairwiseHinge(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto part = random_partition(n, n);
  const std::span<const double> p(part.positives.data(), n), q(part.negatives.data(), n);
  for (auto _ : state) benchmark::DoNotOptimize(check::naive_pairwise_hinge(p, q, 0.3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NaivePairwiseHinge)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_TapaucLoss(benchmark::State& state) {
  const auto part = random_partition(200, 400);
  const loss::SelectionSchedule sched{.total_epochs = 2, .warmup_epochs = 0,
                                      .alpha = loss::NegativeRatio::fraction(0.1), .margin = 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(loss::tapauc_loss(part, sched, 1));
}
BENCHMARK(BM_TapaucLoss);

void BM_ForwardBackward(benchmark::State& state) {
  const int d = 23;
  auto model = nn::init_network(nn::NetworkConfig::for_inputs(d), 3);
  Rng rng(4);
  nn::Matrix x(state.range(0), d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  const nn::Vector g = nn::Vector::Constant(x.rows(), 1e-3);
  for (auto _ : state) {
    auto pass = nn::forward(model, x, nn::Mode::train, &rng);
    benchmark::DoNotOptimize(nn::backward(model, pass.cache, g));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(455)->Arg(1024);

void BM_TrainOneEpochs(benchmark::State& state) {
  data::Dataset train, val;
  Rng rng(5);
  train.features.resize(455, 23);
  for (Eigen::Index i = 0; i < train.features.size(); ++i) train.features.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < train.features.rows(); ++i) train.labels.push_back(i % 3 == 0 ? 1 : 0);
  for (int j = 0; j < 23; ++j) train.feature_names.push_back("f" + std::to_string(j));
  val = train;
  const HyperParams hp{.method = Method::tapauc, .total_epochs = static_cast<int>(state.range(0)),
                       .warmup_fraction = 0.5, .margin = 0.3, .alpha = loss::NegativeRatio::fraction(0.1)};
  for (auto _ : state) benchmark::DoNotOptimize(train_one(train, val, hp, 1));
}
BENCHMARK(BM_TrainOneEpochs)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
