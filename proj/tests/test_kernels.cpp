#include <doctest.h>
#include <omp.h>

#include <numeric>
#include <random>
#include <vector>

#include "peakcast/data.hpp"
#include "peakcast/evt.hpp"
#include "peakcast/kernels.hpp"

using namespace peakcast;

namespace {

data::SupervisedSet random_set(std::size_t n, std::size_t lags, std::uint64_t seed, bool positive_targets) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0, 1);
  data::SupervisedSet ds;
  ds.lags = lags;
  ds.horizon = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < lags; ++k) ds.inputs.push_back(N(rng));
    ds.targets.push_back(positive_targets ? std::abs(N(rng)) : N(rng));
    ds.base.push_back(i);
  }
  return ds;
}

std::vector<Network> networks(std::size_t lags) {
  std::mt19937_64 rng(99);
  std::vector<std::size_t> w{lags, 6, 1};
  auto mlp = nn::Mlp::make(w, nn::Activation::tanh);
  mlp.init_glorot(rng);
  nn::LstmRegressor lstm(1, 4);
  lstm.init_glorot(rng);
  nn::EvtHead head(lags, 5);
  head.init_glorot(rng);
  return {mlp, lstm, head};
}

LossSpec spec_for(const Network& net) {
  return std::holds_alternative<nn::EvtHead>(net) ? LossSpec{Objective::gpd_nll, 0.0} : LossSpec{};
}

}  // namespace

TEST_CASE("parallel kernels agree bit for bit with the serial reference") {
  const std::size_t lags = 8;
  auto ds = random_set(301, lags, 5, true);
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> masks;
  std::mt19937_64 rng(7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto m = nn::dropout_mask(0.2, lags, rng);
    masks.insert(masks.end(), m.begin(), m.end());
  }
  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    for (const Network& net : networks(lags)) {
      const auto spec = spec_for(net);
      const auto p = parameters(net);
      auto a = kernels::batch_gradient(net, p, ds, rows, spec);
      auto b = kernels::batch_gradient_serial(net, p, ds, rows, spec);
      CHECK(a.loss == b.loss);
      CHECK(a.grad == b.grad);
      auto am = kernels::batch_gradient(net, p, ds, rows, spec, masks);
      auto bm = kernels::batch_gradient_serial(net, p, ds, rows, spec, masks);
      CHECK(am.grad == bm.grad);
      CHECK(am.grad != a.grad);
      CHECK(kernels::dataset_loss(net, p, ds, spec) == kernels::dataset_loss_serial(net, p, ds, spec));
      CHECK(kernels::predict(net, p, ds.inputs, lags) == kernels::predict_serial(net, p, ds.inputs, lags));
    }
  }
}

TEST_CASE("batch gradient matches finite differences of the dataset loss") {
  const std::size_t lags = 4;
  auto ds = random_set(40, lags, 11, true);
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  for (const Network& net : networks(lags)) {
    const auto spec = spec_for(net);
    std::vector<double> p(parameters(net).begin(), parameters(net).end());
    auto g = kernels::batch_gradient(net, p, ds, rows, spec);
    CHECK(g.loss == doctest::Approx(kernels::dataset_loss(net, p, ds, spec)).epsilon(1e-14));
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto hi = p, lo = p;
      hi[i] += eps;
      lo[i] -= eps;
      const double num =
          (kernels::dataset_loss(net, hi, ds, spec) - kernels::dataset_loss(net, lo, ds, spec)) / (2 * eps);
      worst = std::max(worst, std::abs(num - g.grad[i]) / std::max({std::abs(num), std::abs(g.grad[i]), 1e-8}));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("predict output layout") {
  auto nets = networks(3);
  auto ds = random_set(5, 3, 2, false);
  auto out = kernels::predict(nets[2], parameters(nets[2]), ds.inputs, 3);
  CHECK(out.size() == 10);
  for (std::size_t i = 0; i < 5; ++i) {
    auto [s, k] = std::get<nn::EvtHead>(nets[2]).forward(ds.row(i));
    CHECK(out[2 * i] == s);
    CHECK(out[2 * i + 1] == k);
  }
  CHECK_THROWS_AS(kernels::predict(nets[0], parameters(nets[0]), ds.inputs, 5), Error);
  CHECK_THROWS_AS(kernels::predict(nets[0], parameters(nets[0]), std::span<const double>(ds.inputs).first(10), 2), Error);
}

TEST_CASE("kernel errors") {
  omp_set_num_threads(4);
  auto nets = networks(3);
  auto ds = random_set(50, 3, 3, true);
  CHECK_THROWS_AS(kernels::batch_gradient(nets[0], parameters(nets[0]), ds, {}, {}), Error);
  // Rows below the threshold are out of support; the lowest one is reported.
  ds.targets[17] = -1.0;
  ds.targets[40] = -1.0;
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  for (int pass = 0; pass < 2; ++pass) {
    try {
      if (pass == 0) {
        kernels::batch_gradient(nets[2], parameters(nets[2]), ds, rows, spec_for(nets[2]));
      } else {
        kernels::batch_gradient_serial(nets[2], parameters(nets[2]), ds, rows, spec_for(nets[2]));
      }
      FAIL("expected OutOfSupport");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutOfSupport);
      CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
  }
}
