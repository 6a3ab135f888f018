#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "peakcast/evt.hpp"
#include "peakcast/kernels.hpp"
#include "peakcast/loss.hpp"
#include "peakcast/trainer.hpp"

using namespace peakcast;
using trainer::TrainConfig;

namespace {

data::SupervisedSet make_set(const std::vector<double>& x, const std::vector<double>& y) {
  data::SupervisedSet ds;
  ds.lags = 1;
  ds.horizon = 1;
  ds.inputs = x;
  ds.targets = y;
  ds.base.resize(y.size());
  std::iota(ds.base.begin(), ds.base.end(), 0);
  return ds;
}

data::SupervisedSet affine_data(std::size_t n) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    x.push_back(v);
    y.push_back(2.0 * v + 1.0);
  }
  return make_set(x, y);
}

Network linear_net() {
  std::vector<std::size_t> w{1, 1};
  return nn::Mlp::make(w, nn::Activation::identity);
}

}  // namespace

TEST_CASE("train/validation split") {
  auto ds = affine_data(100);
  auto [tr, va] = trainer::train_val_split(ds, 0.2);
  CHECK(tr.size() == 80);
  CHECK(va.size() == 20);
  CHECK(tr.targets.back() == ds.targets[79]);
  CHECK(va.targets.front() == ds.targets[80]);
  auto [all, none] = trainer::train_val_split(ds, 0.0);
  CHECK(all.size() == 100);
  CHECK(none.empty());
  for (double f : {0.05, 0.1, 0.33, 0.5}) {
    auto [a, b] = trainer::train_val_split(ds, f);
    CHECK(a.size() + b.size() == ds.size());
    std::vector<double> joined(a.targets);
    joined.insert(joined.end(), b.targets.begin(), b.targets.end());
    CHECK(joined == ds.targets);
  }
}

TEST_CASE("zero learning rate leaves the weights alone") {
  Network net = linear_net();
  std::vector<double> p0{0.3, -0.2};
  std::get<nn::Mlp>(net).set_params(p0);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 5;
  auto r = trainer::sgd_train(net, affine_data(50), {}, cfg);
  std::vector<double> after(parameters(net).begin(), parameters(net).end());
  CHECK(after == p0);
  for (double l : r.train_loss) CHECK(l == r.train_loss.front());
}

TEST_CASE("linear model fits exact affine data") {
  Network net = linear_net();
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.epochs = 500;
  auto r = trainer::sgd_train(net, affine_data(200), {}, cfg);
  CHECK(r.train_loss.back() < 1e-6);
  CHECK(parameters(net)[0] == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(parameters(net)[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("training is seed deterministic") {
  auto run = [](std::uint64_t seed) {
    std::mt19937_64 rng(3);
    std::vector<std::size_t> w{1, 4, 1};
    Network net = nn::Mlp::make(w, nn::Activation::tanh);
    std::get<nn::Mlp>(net).init_glorot(rng);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = seed;
    cfg.p_drop = 0.1;
    cfg.val_fraction = 0.2;
    return trainer::sgd_train(net, affine_data(120), {}, cfg);
  };
  auto a = run(1), b = run(1), c = run(2);
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.best_params == b.best_params);
  CHECK(a.train_loss != c.train_loss);
}

TEST_CASE("best snapshot is restored and patience stops early") {
  std::mt19937_64 rng(5);
  std::vector<std::size_t> w{1, 6, 1};
  Network net = nn::Mlp::make(w, nn::Activation::tanh);
  std::get<nn::Mlp>(net).init_glorot(rng);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.lr = 0.5;  // large enough to wander
  cfg.val_fraction = 0.25;
  cfg.patience = 5;
  auto ds = affine_data(80);
  auto r = trainer::sgd_train(net, ds, {}, cfg);
  std::vector<double> now(parameters(net).begin(), parameters(net).end());
  CHECK(now == r.best_params);
  const auto [tr, va] = trainer::train_val_split(ds, cfg.val_fraction);
  CHECK(kernels::dataset_loss(net, now, va, {}) == r.val_loss[r.best_epoch]);
  for (double v : r.val_loss) CHECK(r.val_loss[r.best_epoch] <= v);
  if (r.stopped_early) CHECK(r.train_loss.size() == r.best_epoch + cfg.patience + 1);
}

TEST_CASE("single-sample step decreases that sample's loss") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0, 1);
  for (int state = 0; state < 50; ++state) {
    Network net;
    LossSpec spec;
    data::SupervisedSet ds;
    if (state % 2 == 0) {
      std::vector<std::size_t> w{3, 4, 1};
      auto m = nn::Mlp::make(w, nn::Activation::tanh);
      m.init_glorot(rng);
      net = m;
      ds = make_set({}, {N(rng)});
    } else {
      nn::EvtHead h(3, 4);
      h.init_glorot(rng);
      auto p = h.params();
      p[p.size() - 1] = 0.3 * N(rng);
      net = h;
      spec = {Objective::gpd_nll, 0.0};
      ds = make_set({}, {std::abs(N(rng)) + 0.01});
    }
    ds.lags = 3;
    ds.inputs = {N(rng), N(rng), N(rng)};
    std::vector<std::size_t> rows{0};
    const double before = kernels::dataset_loss(net, parameters(net), ds, spec);
    trainer::sgd_step(net, ds, rows, spec, 1e-6, 0.0);
    CHECK(kernels::dataset_loss(net, parameters(net), ds, spec) < before);
  }
}

TEST_CASE("weight decay shrinks weights when the data gradient vanishes") {
  // Zero input and a bias equal to the target: the data term is flat in w.
  Network net = linear_net();
  std::get<nn::Mlp>(net).set_params({3.0, 5.0});
  auto ds = make_set({0.0}, {5.0});
  std::vector<std::size_t> rows{0};
  double prev = 3.0;
  for (int i = 0; i < 20; ++i) {
    trainer::sgd_step(net, ds, rows, {}, 0.1, 0.5);
    const double w = parameters(net)[0];
    CHECK(std::abs(w) < std::abs(prev));
    CHECK(w == doctest::Approx(prev * (1.0 - 0.1 * 2.0 * 0.5)));
    prev = w;
  }
  CHECK(parameters(net)[1] == 5.0);
}

TEST_CASE("no dropout means an all-ones mask") {
  std::mt19937_64 rng(4);
  nn::LstmRegressor lstm(1, 3);
  lstm.init_glorot(rng);
  Network net = lstm;
  auto ds = make_set({}, {0.5, -0.2});
  ds.lags = 4;
  ds.inputs = {0.1, 0.2, 0.3, 0.4, -1, 0, 1, 2};
  std::vector<std::size_t> rows{0, 1};
  std::mt19937_64 mr(1);
  auto m = nn::dropout_mask(0.0, 8, mr);
  auto a = kernels::batch_gradient(net, parameters(net), ds, rows, {}, m);
  auto b = kernels::batch_gradient(net, parameters(net), ds, rows, {});
  CHECK(a.grad == b.grad);
  CHECK(a.loss == b.loss);
}

TEST_CASE("evt head learns a covariate-dependent scale") {
  // sigma(x) = 1 + |x|, xi = 0.2; score on fresh draws against the true law.
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> N(0, 1);
  auto draw = [&](std::size_t n) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = N(rng);
      x.push_back(v);
      y.push_back(evt::gpd_sample({0.0, 1.0 + std::abs(v), 0.2}, 1, rng)[0] + 1e-12);
    }
    return make_set(x, y);
  };
  auto train = draw(5000);
  auto test = draw(5000);
  nn::EvtHead head(1, 8);
  std::mt19937_64 init(1);
  head.init_glorot(init);
  // As in the CLI: sigma is expressed in units of the mean training excess.
  head.set_excess_scale(std::accumulate(train.targets.begin(), train.targets.end(), 0.0) / train.size());
  Network net = head;
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.epochs = 60;
  cfg.val_fraction = 0.1;
  trainer::sgd_train(net, train, {Objective::gpd_nll, 0.0}, cfg);
  const double fitted = loss::batch_nll(std::get<nn::EvtHead>(net), test.inputs, test.targets, 0.0).total;
  double truth = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth += loss::gpd_nll(1.0 + std::abs(test.inputs[i]), 0.2, test.targets[i], 0.0);
  }
  truth /= static_cast<double>(test.size());
  INFO("fitted " << fitted << " truth " << truth);
  CHECK(std::abs(fitted - truth) < 0.02 * std::abs(truth));
}

TEST_CASE("trainer errors") {
  Network net = linear_net();
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(trainer::sgd_train(net, affine_data(10), {}, bad), Error);
  TrainConfig cfg;
  CHECK_THROWS_AS(trainer::sgd_train(net, make_set({}, {}), {}, cfg), Error);
  cfg.p_drop = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  // A huge step blows the weights up: reported as divergence with the epoch.
  Network big = linear_net();
  TrainConfig hot;
  hot.lr = 1e6;
  hot.epochs = 50;
  std::vector<double> x(20), y(20);
  for (int i = 0; i < 20; ++i) {
    x[i] = 100.0 * i;
    y[i] = 1e5 * i;
  }
  try {
    trainer::sgd_train(big, make_set(x, y), {}, hot);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DivergedLoss);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
  CHECK(trainer::default_lr(Objective::mse) == 0.01);
  CHECK(trainer::default_lr(Objective::gpd_nll) == 0.005);
}
