// Parallel kernels against their serial references on a training-sized batch.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "peakcast/kernels.hpp"

using namespace peakcast;

namespace {

constexpr std::size_t kLags = 24;

data::SupervisedSet make_set(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0, 1);
  data::SupervisedSet ds;
  ds.lags = kLags;
  ds.horizon = 5;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kLags; ++k) ds.inputs.push_back(N(rng));
    ds.targets.push_back(std::abs(N(rng)));
    ds.base.push_back(i);
  }
  return ds;
}

Network make_net(int kind) {
  std::mt19937_64 rng(2);
  if (kind == 0) {
    const std::size_t widths[] = {kLags, 16, 1};
    auto m = nn::Mlp::make(widths, nn::Activation::tanh);
    m.init_glorot(rng);
    return m;
  }
  if (kind == 1) {
    nn::LstmRegressor l(1, 8);
    l.init_glorot(rng);
    return l;
  }
  nn::EvtHead h(kLags, 16);
  h.init_glorot(rng);
  return h;
}

LossSpec spec_for(const Network& net) {
  return std::holds_alternative<nn::EvtHead>(net) ? LossSpec{Objective::gpd_nll, 0.0} : LossSpec{};
}

template <bool Parallel>
void BM_batch_gradient(benchmark::State& state) {
  const auto net = make_net(static_cast<int>(state.range(0)));
  const auto ds = make_set(static_cast<std::size_t>(state.range(1)));
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto spec = spec_for(net);
  const auto p = parameters(net);
  for (auto _ : state) {
    auto g = Parallel ? kernels::batch_gradient(net, p, ds, rows, spec)
                      : kernels::batch_gradient_serial(net, p, ds, rows, spec);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_dataset_loss(benchmark::State& state) {
  const auto net = make_net(static_cast<int>(state.range(0)));
  const auto ds = make_set(static_cast<std::size_t>(state.range(1)));
  const auto spec = spec_for(net);
  const auto p = parameters(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::dataset_loss(net, p, ds, spec)
                                      : kernels::dataset_loss_serial(net, p, ds, spec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <bool Parallel>
void BM_predict(benchmark::State& state) {
  const auto net = make_net(static_cast<int>(state.range(0)));
  const auto ds = make_set(static_cast<std::size_t>(state.range(1)));
  const auto p = parameters(net);
  for (auto _ : state) {
    auto out = Parallel ? kernels::predict(net, p, ds.inputs, kLags) : kernels::predict_serial(net, p, ds.inputs, kLags);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

// range(0): 0 = mlp, 1 = lstm, 2 = evt head; range(1): rows.
void shapes(benchmark::internal::Benchmark* b) {
  b->ArgNames({"net", "rows"});
  for (int net : {0, 1, 2}) {
    for (int rows : {256, 4096}) b->Args({net, rows});
  }
  b->UseRealTime();
}

}  // namespace

BENCHMARK(BM_batch_gradient<false>)->Apply(shapes);
BENCHMARK(BM_batch_gradient<true>)->Apply(shapes);
BENCHMARK(BM_dataset_loss<false>)->Apply(shapes);
BENCHMARK(BM_dataset_loss<true>)->Apply(shapes);
BENCHMARK(BM_predict<false>)->Apply(shapes);
BENCHMARK(BM_predict<true>)->Apply(shapes);

BENCHMARK_MAIN();
