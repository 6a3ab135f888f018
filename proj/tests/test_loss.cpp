#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "peakcast/evt.hpp"
#include "peakcast/loss.hpp"
#include "peakcast/nn.hpp"

using namespace peakcast;
using ad::Tape;
using ad::Var;

TEST_CASE("gpd_nll closed forms") {
  CHECK(loss::gpd_nll(1.0, 0.0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(loss::gpd_nll(2.0, 0.0, 3.0, 3.0) == doctest::Approx(std::log(2.0)));
  // -log of (1/sigma)(1 + xi z/sigma)^(-1/xi-1), written independently.
  const double sigma = 2.0, xi = 0.3, z = 1.5;
  const double h = std::pow(1.0 + xi * z / sigma, -1.0 / xi - 1.0) / sigma;
  CHECK(loss::gpd_nll(sigma, xi, 10.0 + z, 10.0) == doctest::Approx(-std::log(h)).epsilon(1e-14));
}

TEST_CASE("gpd_nll domain errors") {
  CHECK_THROWS_AS(loss::gpd_nll(1.0, 0.1, -0.5, 0.0), Error);
  CHECK_THROWS_AS(loss::gpd_nll(0.0, 0.1, 1.0, 0.0), Error);
  CHECK_THROWS_AS(loss::gpd_nll(1.0, -0.5, 3.0, 0.0), Error);  // beyond upper endpoint 2
  CHECK_THROWS_AS(loss::gpd_nll(1.0, 1.0, 3.0, 0.0), Error);
}

TEST_CASE("gpd_nll gradients") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> S(0.3, 3.0), X(-0.4, 0.8), Z(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p{S(rng), X(rng)};
    if (std::abs(p[1]) < 1e-6) continue;
    const double z = Z(rng);
    if (1.0 + p[1] * z / p[0] < 0.05) continue;
    auto f = [z](Tape&, std::span<const Var> v) { return loss::gpd_nll(v[0], v[1], 7.0 + z, 7.0); };
    CHECK(ad::grad_check(f, p, 1e-5) < 1e-5);
  }
}

TEST_CASE("gpd_nll gradient through network weights") {
  std::mt19937_64 rng(19);
  nn::EvtHead head(4, 3);
  head.init_glorot(rng);
  std::vector<double> w(head.params().begin(), head.params().end());
  // Move xi away from 0 so the general branch is exercised.
  w.back() = 0.4;
  std::vector<double> x{0.3, -0.2, 1.1, 0.5};
  auto f = [&](Tape& t, std::span<const Var> v) {
    auto [s, k] = head.forward<Var>(v, t.variables(x));
    return loss::gpd_nll(s, k, 2.5, 1.0);
  };
  CHECK(ad::grad_check(f, w, 1e-5) < 1e-5);
}

TEST_CASE("batch_nll") {
  std::mt19937_64 rng(6);
  nn::EvtHead head(2, 3);
  head.init_glorot(rng);
  std::vector<double> x{0.1, 0.2};
  std::vector<double> y{4.5};
  auto [s, k] = head.forward(x);
  CHECK(loss::batch_nll(head, x, y, 4.0).total == doctest::Approx(loss::gpd_nll(s, k, 4.5, 4.0)).epsilon(1e-15));

  std::vector<double> xs{0.1, 0.2, -1.0, 0.4, 2.0, 0.0};
  std::vector<double> ys{4.5, 6.0, 4.1};
  const double base = loss::batch_nll(head, xs, ys, 4.0).total;
  std::vector<double> x2(xs), y2(ys);
  x2.insert(x2.end(), xs.begin(), xs.end());
  y2.insert(y2.end(), ys.begin(), ys.end());
  CHECK(loss::batch_nll(head, x2, y2, 4.0).total == doctest::Approx(base).epsilon(1e-15));
  std::vector<double> xp{2.0, 0.0, 0.1, 0.2, -1.0, 0.4};
  std::vector<double> yp{4.1, 4.5, 6.0};
  CHECK(loss::batch_nll(head, xp, yp, 4.0).total == doctest::Approx(base).epsilon(1e-14));

  CHECK_THROWS_AS(loss::batch_nll(head, {}, {}, 4.0), Error);
  std::vector<double> below{4.5, 3.0};
  std::vector<double> xb{0, 0, 0, 0};
  try {
    loss::batch_nll(head, xb, below, 4.0);
    FAIL("expected OutOfSupport");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfSupport);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("batch_nll is minimized near the generating weights") {
  // sigma(x) = softplus(a x + b) + 1e-6, xi = tanh(c): a linear backbone (no hidden layer).
  std::vector<nn::LayerShape> shapes{{1, 2, nn::Activation::identity}};
  nn::EvtHead head{nn::Mlp(shapes)};
  const std::vector<double> truth{0.8, 0.0, 0.5, std::atanh(0.2)};  // W = [0.8; 0], b = [0.5; atanh 0.2]
  head.backbone().set_params(truth);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> N(0, 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 5000; ++i) {
    const double x = N(rng);
    auto [s, k] = head.forward(std::vector<double>{x});
    xs.push_back(x);
    ys.push_back(evt::gpd_sample({0.0, s, k}, 1, rng)[0]);
  }
  const double at_truth = loss::batch_nll(head, xs, ys, 0.0).total;
  int wins = 0;
  std::normal_distribution<double> P(0, 0.15);
  for (int t = 0; t < 100; ++t) {
    auto w = truth;
    for (double& v : w) v += P(rng);
    head.backbone().set_params(w);
    try {
      if (at_truth <= loss::batch_nll(head, xs, ys, 0.0).total) ++wins;
    } catch (const Error&) {
      ++wins;  // perturbed xi excludes some observation: infinitely worse
    }
  }
  CHECK(wins >= 95);
}

TEST_CASE("mse_loss") {
  std::vector<double> a{1, 2, 3};
  CHECK(loss::mse_loss(a, a) == 0.0);
  CHECK(loss::mse_loss(std::vector<double>{0}, std::vector<double>{2}) == 4.0);
  CHECK(loss::mse_loss(std::vector<double>{1, 2}, std::vector<double>{3, 2}) == 2.0);
  CHECK_THROWS_AS(loss::mse_loss(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(loss::mse_loss({}, {}), Error);
}

TEST_CASE("l2 penalty") {
  std::vector<double> w{3.0};
  std::vector<std::uint8_t> m{1};
  CHECK(loss::l2_penalty(w, m, 0.0) == 0.0);
  CHECK(loss::l2_penalty(w, m, 1.0) == 9.0);
  std::vector<double> z(4, 0.0);
  std::vector<std::uint8_t> m4{1, 1, 0, 1};
  CHECK(loss::l2_penalty(z, m4, 7.0) == 0.0);
  std::vector<double> p{1, 2, 100, 3};
  CHECK(loss::l2_penalty(p, m4, 0.5) == 7.0);
  CHECK_THROWS_AS(loss::l2_penalty(p, m4, -1.0), Error);
}

TEST_CASE("gpd_nll keeps its xi derivative at the exponential limit") {
  // d/dxi NLL at xi = 0 is w - w^2/2 with w = (y-u)/sigma.
  Tape tape;
  Var s = tape.variable(2.0), k = tape.variable(0.0);
  Var f = loss::gpd_nll(s, k, 3.0, 0.0);
  auto g = tape.gradient(f, std::vector<Var>{s, k});
  const double w = 1.5;
  CHECK(g[1] == doctest::Approx(w - 0.5 * w * w).epsilon(1e-12));
  CHECK(g[0] == doctest::Approx(1.0 / 2.0 - w / 2.0).epsilon(1e-12));
  // The branches meet continuously at the switch: the jump across it is just
  // the slope times the step in xi.
  const double w2 = 4.5, slope = w2 - 0.5 * w2 * w2;
  const double jump = loss::gpd_nll(2.0, 1.001e-8, 9.0, 0.0) - loss::gpd_nll(2.0, 0.999e-8, 9.0, 0.0);
  CHECK(std::abs(jump - slope * 2e-11) < 1e-12);
}
