#include "biview/nn.hpp"

#include <cmath>

#include "doctest.h"

#include "biview/rng.hpp"

using namespace biview;
using nn::Activation;

namespace {

nn::DenseLayer identity_layer(std::size_t d) {
  nn::DenseLayer layer;
  layer.W = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) layer.W(i, i) = 1.0;
  layer.b.assign(d, 0.0);
  layer.act = Activation::identity;
  return layer;
}

}  // namespace

TEST_CASE("dense forward") {
  SUBCASE("identity weights pass the input through") {
    auto layer = identity_layer(3);
    std::vector<double> x{1.5, -2.0, 0.25};
    CHECK(nn::forward(layer, x) == x);
  }
  SUBCASE("sigmoid of the zero vector is 0.5") {
    auto layer = identity_layer(4);
    layer.act = Activation::sigmoid;
    std::vector<double> x(4, 0.0);
    for (double y : nn::forward(layer, x)) CHECK(y == doctest::Approx(0.5));
  }
  SUBCASE("relu clips negatives") {
    auto layer = identity_layer(2);
    layer.act = Activation::relu;
    auto y = nn::forward(layer, std::vector<double>{-1.0, 2.0});
    CHECK(y[0] == doctest::Approx(0.0));
    CHECK(y[1] == doctest::Approx(2.0));
  }
  SUBCASE("shape mismatch throws") {
    auto layer = identity_layer(3);
    CHECK_THROWS_AS(nn::forward(layer, std::vector<double>{1.0}), Error);
  }
}

TEST_CASE("softmax cross-entropy") {
  SUBCASE("uniform logits give ln k") {
    std::vector<double> logits(5, 0.7);
    auto sx = nn::softmax_xent(logits, 2);
    CHECK(sx.loss == doctest::Approx(std::log(5.0)));
  }
  SUBCASE("huge logits do not overflow") {
    std::vector<double> logits{1000.0, 0.0};
    auto sx = nn::softmax_xent(logits, 0);
    CHECK(sx.loss == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(sx.grad[0]));
    CHECK(std::isfinite(sx.grad[1]));
  }
  SUBCASE("gradient matches finite differences on random 4-class logits") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> logits(4);
      for (double& v : logits) v = rng.uniform(-2.0, 2.0);
      const std::size_t target = rng.below(4);
      auto sx = nn::softmax_xent(logits, target);
      auto loss_fn = [&](const std::vector<double>& p) {
        return nn::softmax_xent(p, target).loss;
      };
      CHECK(nn::grad_check(loss_fn, logits, sx.grad) < 1e-6);
    }
  }
  SUBCASE("softmax output sums to 1 with entries in (0,1)") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> logits(6);
      for (double& v : logits) v = rng.uniform(-10.0, 10.0);
      auto sm = nn::softmax(logits);
      double sum = 0.0;
      for (double p : sm) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0));
    }
  }
  SUBCASE("loss is non-negative") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> logits(3);
      for (double& v : logits) v = rng.uniform(-5.0, 5.0);
      CHECK(nn::softmax_xent(logits, rng.below(3)).loss >= 0.0);
    }
  }
}

TEST_CASE("grad_check across model shapes") {
  Rng rng(123);
  SUBCASE("linear layer is exact") {
    auto layer = nn::make_dense(4, 3, Activation::identity, rng);
    std::vector<double> x{0.3, -1.2, 0.8, 2.0};
    auto run_from = [&](const std::vector<double>& params) {
      nn::DenseLayer l = layer;
      nn::read_params(l, params, 0);
      auto y = nn::forward(l, x);
      double s = 0.0;
      for (double v : y) s += v;  // loss = sum of outputs, a linear functional
      return s;
    };
    std::vector<double> point;
    nn::append_params(layer, point);
    // analytic gradient of sum(Wx + b): dW[o][i] = x[i], db[o] = 1
    std::vector<double> analytic;
    for (std::size_t o = 0; o < 3; ++o)
      analytic.insert(analytic.end(), x.begin(), x.end());
    analytic.insert(analytic.end(), 3, 1.0);
    CHECK(nn::grad_check(run_from, point, analytic) < 1e-8);
  }
  SUBCASE("two-layer sigmoid MLP through backward()") {
    nn::Mlp mlp;
    mlp.layers.push_back(nn::make_dense(3, 5, Activation::sigmoid, rng));
    mlp.layers.push_back(nn::make_dense(5, 2, Activation::sigmoid, rng));
    Matrix x(2, 3);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);

    auto params_of = [&](const nn::Mlp& m) {
      std::vector<double> p;
      for (const auto& l : m.layers) nn::append_params(l, p);
      return p;
    };
    auto loss_of = [&](const nn::Mlp& m) {
      Matrix y = m.forward(x);
      double s = 0.0;
      for (double v : y.data) s += v * v;
      return s;
    };
    // analytic: dL/dy = 2y propagated through backward
    std::vector<nn::DenseCache> caches;
    Matrix y = mlp.forward_cached(x, caches);
    Matrix dY(y.rows, y.cols);
    for (std::size_t i = 0; i < y.data.size(); ++i) dY.data[i] = 2.0 * y.data[i];
    std::vector<nn::DenseGrads> grads;
    for (const auto& l : mlp.layers) grads.push_back(nn::zero_grads(l));
    mlp.backward(caches, dY, grads);
    std::vector<double> analytic;
    for (const auto& g : grads) nn::append_grads(g, analytic);

    auto run_from = [&](const std::vector<double>& params) {
      nn::Mlp m = mlp;
      std::size_t off = 0;
      for (auto& l : m.layers) off = nn::read_params(l, params, off);
      return loss_of(m);
    };
    CHECK(nn::grad_check(run_from, params_of(mlp), analytic) < 1e-4);
  }
  SUBCASE("softmax cross-entropy end-to-end") {
    auto layer = nn::make_dense(4, 3, Activation::identity, rng);
    std::vector<double> x{1.0, -0.5, 0.25, 0.75};
    const std::size_t target = 1;

    std::vector<double> point;
    nn::append_params(layer, point);
    // analytic via backward of the dense layer with softmax grad on top
    nn::DenseCache cache;
    Matrix xm(1, 4);
    std::copy(x.begin(), x.end(), xm.row(0).begin());
    Matrix logits = nn::forward_cached(layer, xm, cache);
    auto sx = nn::softmax_xent(logits.row(0), target);
    Matrix dY(1, 3);
    std::copy(sx.grad.begin(), sx.grad.end(), dY.row(0).begin());
    auto grads = nn::zero_grads(layer);
    nn::backward(layer, cache, dY, grads);
    std::vector<double> analytic;
    nn::append_grads(grads, analytic);

    auto run_from = [&](const std::vector<double>& params) {
      nn::DenseLayer l = layer;
      nn::read_params(l, params, 0);
      return nn::softmax_xent(nn::forward(l, x), target).loss;
    };
    CHECK(nn::grad_check(run_from, point, analytic) < 1e-5);
  }
}

TEST_CASE("optimizer steps") {
  SUBCASE("plain SGD") {
    nn::OptimizerState opt;
    opt.algo = nn::OptimizerState::Algo::sgd;
    opt.lr = 0.1;
    std::vector<double> p{1.0};
    opt.step(p, {1.0});
    CHECK(p[0] == doctest::Approx(0.9));
  }
  SUBCASE("zero gradient is a fixed point for both algorithms") {
    for (auto algo : {nn::OptimizerState::Algo::sgd, nn::OptimizerState::Algo::adam}) {
      nn::OptimizerState opt;
      opt.algo = algo;
      opt.lr = 0.5;
      std::vector<double> p{2.0, -3.0};
      opt.step(p, {0.0, 0.0});
      CHECK(p[0] == doctest::Approx(2.0));
      CHECK(p[1] == doctest::Approx(-3.0));
    }
  }
  SUBCASE("Adam minimizes p^2 from p=1") {
    nn::OptimizerState opt;
    opt.lr = 0.05;
    std::vector<double> p{1.0};
    for (int step = 0; step < 500; ++step) {
      if (std::abs(p[0]) < 0.01) break;
      opt.step(p, {2.0 * p[0]});
    }
    CHECK(std::abs(p[0]) < 0.01);
  }
}

TEST_CASE("forward is deterministic and finite") {
  Rng rng(5);
  auto layer = nn::make_dense(6, 6, Activation::sigmoid, rng);
  Matrix x(4, 6);
  for (double& v : x.data) v = rng.uniform(-2.0, 2.0);
  auto a = nn::forward(layer, x);
  auto b = nn::forward(layer, x);
  CHECK(a.data == b.data);
  CHECK(a.all_finite());
}

TEST_CASE("MLP checkpoint JSON round-trip") {
  Rng rng(9);
  nn::Mlp mlp;
  mlp.layers.push_back(nn::make_dense(3, 4, Activation::relu, rng));
  mlp.layers.push_back(nn::make_dense(4, 2, Activation::identity, rng));
  auto text = nn::mlp_to_json(mlp);
  auto back = nn::mlp_from_json(text);
  REQUIRE(back.layers.size() == 2);
  CHECK(back.layers[0].W.data == mlp.layers[0].W.data);
  CHECK(back.layers[1].b == mlp.layers[1].b);
  CHECK(back.layers[0].act == Activation::relu);
  Matrix x(1, 3);
  x.data = {0.5, -0.5, 1.0};
  CHECK(back.forward(x).data == mlp.forward(x).data);
}
