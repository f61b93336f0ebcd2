#pragma once

#include <functional>
#include <span>
#include <vector>

#include "biview/matrix.hpp"
#include "biview/rng.hpp"

namespace biview::nn {

enum class Activation { identity, relu, sigmoid };

struct DenseLayer {
  Matrix W;               // out x in
  std::vector<double> b;  // out
  Activation act = Activation::identity;

  std::size_t in_dim() const { return W.cols; }
  std::size_t out_dim() const { return W.rows; }
  std::size_t param_count() const { return W.data.size() + b.size(); }
};

// Glorot-uniform weights, zero bias.
DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

double apply_activation(Activation act, double z);
// Derivative expressed through the activated output y.
double activation_deriv_from_output(Activation act, double y);

// activation(W x + b)
std::vector<double> forward(const DenseLayer& layer, std::span<const double> x);
// Row-wise batch forward: X is batch x in, result batch x out.
Matrix forward(const DenseLayer& layer, const Matrix& X);

struct DenseCache {
  Matrix X;  // layer input
  Matrix Y;  // activated output
};

Matrix forward_cached(const DenseLayer& layer, const Matrix& X, DenseCache& cache);

struct DenseGrads {
  Matrix dW;
  std::vector<double> db;
};

DenseGrads zero_grads(const DenseLayer& layer);

// Accumulates into `grads`, returns dX.
Matrix backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& dY,
                DenseGrads& grads);

std::vector<double> softmax(std::span<const double> logits);

struct SoftmaxXent {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits = softmax - one_hot(target)
};

// Numerically stabilized by max-subtraction.
SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t target);

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }

  Matrix forward(const Matrix& X) const;
  Matrix forward_cached(const Matrix& X, std::vector<DenseCache>& caches) const;
  // Returns dX at the input; accumulates parameter grads.
  Matrix backward(const std::vector<DenseCache>& caches, const Matrix& dY,
                  std::vector<DenseGrads>& grads) const;
};

// Flat parameter views used by the optimizer and by gradient checks.
void append_params(const DenseLayer& layer, std::vector<double>& out);
std::size_t read_params(DenseLayer& layer, std::span<const double> in, std::size_t offset);
void append_grads(const DenseGrads& grads, std::vector<double>& out);

struct OptimizerState {
  enum class Algo { sgd, adam };
  Algo algo = Algo::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;

  void step(std::vector<double>& params, const std::vector<double>& grads);
};

// Max coordinate-wise relative error between the analytic gradient and
// central finite differences of `loss` at `point`.
double grad_check(const std::function<double(const std::vector<double>&)>& loss,
                  const std::vector<double>& point, const std::vector<double>& analytic,
                  double eps = 1e-5);

// Checkpoint: versioned JSON with shape headers and row-major arrays.
std::string mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const std::string& text);

}  // namespace biview::nn
