#include "biview/fusion.hpp"

#include <cmath>

#include "doctest.h"

#include "biview/rng.hpp"

using namespace biview;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

fusion::GatedFusion zero_gate(std::size_t d1, std::size_t d2) {
  fusion::GatedFusion gate;
  gate.w_alpha.assign(d1 + d2, 0.0);
  gate.b_alpha = 0.0;
  return gate;
}

}  // namespace

TEST_CASE("gated_fuse") {
  SUBCASE("zero gate averages the views") {
    auto z1 = random_matrix(5, 4, 1);
    auto z2 = random_matrix(5, 4, 2);
    auto out = fusion::gated_fuse(z1, z2, zero_gate(4, 4));
    for (double a : out.alpha) CHECK(a == doctest::Approx(0.5));
    for (std::size_t v = 0; v < 5; ++v)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(out.fused.values(v, j) == doctest::Approx(0.5 * (z1(v, j) + z2(v, j))));
  }
  SUBCASE("saturated gate reproduces the n2v view") {
    auto z1 = random_matrix(4, 3, 3);
    auto z2 = random_matrix(4, 3, 4);
    auto gate = zero_gate(3, 3);
    gate.b_alpha = 50.0;
    auto out = fusion::gated_fuse(z1, z2, gate);
    for (std::size_t v = 0; v < 4; ++v)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(out.fused.values(v, j) - z1(v, j)) < 1e-15);
  }
  SUBCASE("alpha = 0.25 convex combination") {
    Matrix z1(1, 2), z2(1, 2);
    z1(0, 0) = 1.0;
    z2(0, 1) = 1.0;
    auto gate = zero_gate(2, 2);
    gate.b_alpha = -std::log(3.0);  // sigmoid(-ln 3) = 1/4
    auto out = fusion::gated_fuse(z1, z2, gate);
    CHECK(out.alpha[0] == doctest::Approx(0.25));
    CHECK(out.fused.values(0, 0) == doctest::Approx(0.25));
    CHECK(out.fused.values(0, 1) == doctest::Approx(0.75));
  }
  SUBCASE("hard alpha limits return each view exactly") {
    auto z1 = random_matrix(6, 5, 5);
    auto z2 = random_matrix(6, 5, 6);
    auto gate = zero_gate(5, 5);
    gate.b_alpha = 1000.0;  // sigmoid saturates to exactly 1.0 in double
    auto pick1 = fusion::gated_fuse(z1, z2, gate);
    CHECK(pick1.fused.values.data == z1.data);
    gate.b_alpha = -1000.0;
    auto pick2 = fusion::gated_fuse(z1, z2, gate);
    CHECK(pick2.fused.values.data == z2.data);
  }
  SUBCASE("output stays inside the component-wise segment (convexity)") {
    auto z1 = random_matrix(10, 6, 7);
    auto z2 = random_matrix(10, 6, 8);
    fusion::GatedFusion gate;
    Rng rng(9);
    gate.w_alpha.assign(12, 0.0);
    for (double& w : gate.w_alpha) w = rng.uniform(-2.0, 2.0);
    gate.b_alpha = rng.uniform(-1.0, 1.0);
    auto out = fusion::gated_fuse(z1, z2, gate);
    for (std::size_t v = 0; v < 10; ++v) {
      CHECK(out.alpha[v] > 0.0);
      CHECK(out.alpha[v] < 1.0);
      for (std::size_t j = 0; j < 6; ++j) {
        const double lo = std::min(z1(v, j), z2(v, j));
        const double hi = std::max(z1(v, j), z2(v, j));
        CHECK(out.fused.values(v, j) >= lo - 1e-12);
        CHECK(out.fused.values(v, j) <= hi + 1e-12);
      }
    }
  }
  SUBCASE("dimension mismatch between views is rejected") {
    CHECK_THROWS_AS(fusion::gated_fuse(random_matrix(3, 4, 1), random_matrix(3, 5, 2),
                                       zero_gate(4, 5)),
                    Error);
  }
}

TEST_CASE("gated gradient matches finite differences") {
  auto z1 = random_matrix(8, 3, 11);
  auto z2 = random_matrix(8, 3, 12);
  std::vector<std::uint32_t> train{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> labels{0, 1, 0, 1, 1, 0, 1, 0};

  Rng rng(13);
  fusion::GatedStack model;
  model.gate.w_alpha.assign(6, 0.0);
  for (double& w : model.gate.w_alpha) w = rng.uniform(-0.5, 0.5);
  model.gate.b_alpha = 0.1;
  model.head = nn::make_dense(3, 2, nn::Activation::identity, rng);

  auto analytic = fusion::gated_loss_grads(model, z1, z2, train, labels);
  auto point = fusion::gated_get_params(model);
  auto loss_fn = [&](const std::vector<double>& p) {
    fusion::GatedStack m = model;
    fusion::gated_set_params(m, p);
    return fusion::gated_loss(m, z1, z2, train, labels);
  };
  CHECK(nn::grad_check(loss_fn, point, analytic) < 1e-4);
}

TEST_CASE("gate shifts toward the informative view") {
  // One view separates the classes, the other is pure noise; after training
  // the mean alpha should move toward the informative side by >= 0.1.
  double mean_shift = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t n = 60;
    Rng rng(seed * 101);
    Matrix informative(n, 4), noise(n, 4);
    std::vector<int> labels(n);
    for (std::size_t v = 0; v < n; ++v) {
      labels[v] = static_cast<int>(v % 2);
      for (std::size_t j = 0; j < 4; ++j) {
        informative(v, j) = (labels[v] == 0 ? 1.0 : -1.0) + 0.1 * rng.normal();
        noise(v, j) = rng.normal();
      }
    }
    std::vector<std::uint32_t> train(n);
    for (std::size_t v = 0; v < n; ++v) train[v] = static_cast<std::uint32_t>(v);

    fusion::FusionHyper hyper;
    hyper.epochs = 300;
    hyper.learning_rate = 0.05;
    hyper.seed = seed;
    // informative view passed as the n2v (alpha-weighted) side
    auto result = fusion::train_gated(informative, noise, train, labels, 2, hyper);
    double mean_alpha = 0.0;
    for (double a : result.alpha) mean_alpha += a;
    mean_alpha /= static_cast<double>(n);
    mean_shift += mean_alpha - 0.5;  // alpha starts at 0.5
    for (double a : result.alpha) {
      CHECK(a > 0.0);
      CHECK(a < 1.0);
    }
  }
  CHECK(mean_shift / 5.0 >= 0.1);
}

TEST_CASE("mismatched view widths train through a learned projection") {
  auto z1 = random_matrix(12, 6, 51);  // wider view gets projected down
  auto z2 = random_matrix(12, 4, 52);
  std::vector<std::uint32_t> train{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  fusion::FusionHyper hyper;
  hyper.epochs = 40;
  hyper.seed = 53;
  auto result = fusion::train_gated(z1, z2, train, labels, 2, hyper);
  CHECK(result.model.has_projection);
  CHECK(result.model.project_first_view);
  CHECK(result.fused.dim() == 4);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());

  // gradient check including the projection parameters
  auto analytic = fusion::gated_loss_grads(result.model, z1, z2, train, labels);
  auto point = fusion::gated_get_params(result.model);
  auto loss_fn = [&](const std::vector<double>& p) {
    fusion::GatedStack m = result.model;
    fusion::gated_set_params(m, p);
    return fusion::gated_loss(m, z1, z2, train, labels);
  };
  CHECK(nn::grad_check(loss_fn, point, analytic) < 1e-4);

  auto probs = fusion::predict_proba(result.model, z1, z2);
  CHECK(probs.rows == 12);
  for (std::size_t v = 0; v < 12; ++v) {
    double sum = 0.0;
    for (double p : probs.row(v)) sum += p;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("fusionnet early stopping halts once validation loss turns") {
  // Random labels over noise features: the net memorizes the fit split and
  // validation loss starts climbing, which must trip the patience stop.
  const std::size_t n = 60;
  Rng rng(61);
  Matrix z1(n, 4), z2(n, 4);
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) {
    labels[v] = static_cast<int>(rng.below(2));
    for (std::size_t j = 0; j < 4; ++j) {
      z1(v, j) = rng.normal();
      z2(v, j) = rng.normal();
    }
  }
  std::vector<std::uint32_t> train(n);
  for (std::size_t v = 0; v < n; ++v) train[v] = static_cast<std::uint32_t>(v);
  fusion::FusionNetConfig cfg;
  cfg.hidden = 32;
  cfg.out_dim = 4;
  cfg.epochs = 2000;
  cfg.learning_rate = 0.05;
  cfg.early_stop_fraction = 0.25;
  cfg.patience = 5;
  cfg.seed = 62;
  auto result = fusion::fusionnet_train(z1, z2, train, labels, 2, cfg);
  CHECK(result.epoch_loss.size() < 2000);
  auto probs = fusion::predict_proba(result.model, z1, z2);
  CHECK(probs.all_finite());
}

TEST_CASE("fusionnet dimensions follow the configuration") {
  Rng rng(17);
  fusion::FusionNetConfig cfg;  // hidden 128, out 64
  auto model = fusion::make_fusionnet(64, 64, 4, cfg, rng);
  CHECK(model.encoder.in_dim() == 128);
  CHECK(model.encoder.layers[0].out_dim() == 128);
  CHECK(model.encoder.out_dim() == 64);
  CHECK(model.head.out_dim() == 4);
  CHECK(fusion::concat_views(random_matrix(3, 64, 1), random_matrix(3, 64, 2)).cols == 128);
}

TEST_CASE("fusionnet construction enforces strict dimensionality reduction") {
  Rng rng(18);
  fusion::FusionNetConfig cfg;
  cfg.out_dim = 8;
  CHECK_THROWS_AS(fusion::make_fusionnet(4, 4, 2, cfg, rng), Error);
  cfg.out_dim = 7;
  CHECK_NOTHROW(fusion::make_fusionnet(4, 4, 2, cfg, rng));
}

TEST_CASE("fusionnet end-to-end gradient matches finite differences") {
  auto z1 = random_matrix(10, 3, 19);
  auto z2 = random_matrix(10, 3, 20);
  auto z_cat = fusion::concat_views(z1, z2);
  std::vector<std::uint32_t> train{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};

  Rng rng(21);
  fusion::FusionNetConfig cfg;
  cfg.hidden = 6;
  cfg.out_dim = 4;
  auto model = fusion::make_fusionnet(3, 3, 3, cfg, rng);
  // sigmoid hidden keeps central differences clean at the check points
  model.encoder.layers[0].act = nn::Activation::sigmoid;

  auto analytic = fusion::fusionnet_loss_grads(model, z_cat, train, labels);
  auto point = fusion::fusionnet_get_params(model);
  auto loss_fn = [&](const std::vector<double>& p) {
    fusion::FusionNet m = model;
    fusion::fusionnet_set_params(m, p);
    return fusion::fusionnet_loss(m, z_cat, train, labels);
  };
  CHECK(nn::grad_check(loss_fn, point, analytic) < 1e-4);
}

TEST_CASE("fusionnet fits linearly separable clusters to 100% training accuracy") {
  const std::size_t n = 40;
  Rng rng(23);
  Matrix z1(n, 4), z2(n, 4);
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) {
    labels[v] = static_cast<int>(v % 2);
    for (std::size_t j = 0; j < 4; ++j) {
      z1(v, j) = (labels[v] == 0 ? 2.0 : -2.0) + 0.05 * rng.normal();
      z2(v, j) = rng.normal() * 0.1;
    }
  }
  std::vector<std::uint32_t> train(n);
  for (std::size_t v = 0; v < n; ++v) train[v] = static_cast<std::uint32_t>(v);

  fusion::FusionNetConfig cfg;
  cfg.hidden = 16;
  cfg.out_dim = 4;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  cfg.seed = 24;
  auto result = fusion::fusionnet_train(z1, z2, train, labels, 2, cfg);
  auto probs = fusion::predict_proba(result.model, z1, z2);
  auto hard = fusion::argmax_rows(probs);
  std::size_t correct = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (hard[v] == labels[v]) ++correct;
  CHECK(correct == n);
  CHECK(result.enhanced.dim() == 4);
  CHECK(result.enhanced.role == EmbeddingRole::enhanced);
}

TEST_CASE("predict_proba rows sum to 1 and are deterministic") {
  auto z1 = random_matrix(7, 5, 31);
  auto z2 = random_matrix(7, 5, 32);
  std::vector<std::uint32_t> train{0, 1, 2, 3, 4, 5, 6};
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0};
  fusion::FusionNetConfig cfg;
  cfg.hidden = 8;
  cfg.out_dim = 4;
  cfg.epochs = 10;
  cfg.seed = 33;
  auto result = fusion::fusionnet_train(z1, z2, train, labels, 3, cfg);
  auto probs = fusion::predict_proba(result.model, z1, z2);
  for (std::size_t v = 0; v < 7; ++v) {
    double sum = 0.0;
    for (double p : probs.row(v)) sum += p;
    CHECK(sum == doctest::Approx(1.0));
  }
  auto again = fusion::predict_proba(result.model, z1, z2);
  CHECK(probs.data == again.data);
}

TEST_CASE("training rejects an empty train set") {
  auto z1 = random_matrix(4, 3, 41);
  auto z2 = random_matrix(4, 3, 42);
  fusion::FusionNetConfig cfg;
  cfg.out_dim = 2;
  cfg.hidden = 4;
  CHECK_THROWS_AS(fusion::fusionnet_train(z1, z2, {}, {0, 1, 0, 1}, 2, cfg), Error);
  fusion::FusionHyper hyper;
  CHECK_THROWS_AS(fusion::train_gated(z1, z2, {}, {0, 1, 0, 1}, 2, hyper), Error);
}
