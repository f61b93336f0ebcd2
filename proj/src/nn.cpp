#include "biview/nn.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "biview/util.hpp"

namespace biview::nn {

using nlohmann::json;

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.W = Matrix(out, in);
  layer.b.assign(out, 0.0);
  layer.act = act;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.W.data) w = rng.uniform(-limit, limit);
  return layer;
}

double apply_activation(Activation act, double z) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

double activation_deriv_from_output(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

std::vector<double> forward(const DenseLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_dim()) throw Error("dense forward: input dimension mismatch");
  std::vector<double> y(layer.out_dim());
  for (std::size_t o = 0; o < layer.out_dim(); ++o)
    y[o] = apply_activation(layer.act, dot(layer.W.row(o), x) + layer.b[o]);
  return y;
}

Matrix forward(const DenseLayer& layer, const Matrix& X) {
  if (X.cols != layer.in_dim()) throw Error("dense forward: input dimension mismatch");
  Matrix Y(X.rows, layer.out_dim());
  for (std::size_t r = 0; r < X.rows; ++r) {
    auto x = X.row(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o)
      Y(r, o) = apply_activation(layer.act, dot(layer.W.row(o), x) + layer.b[o]);
  }
  return Y;
}

Matrix forward_cached(const DenseLayer& layer, const Matrix& X, DenseCache& cache) {
  cache.X = X;
  cache.Y = forward(layer, X);
  return cache.Y;
}

DenseGrads zero_grads(const DenseLayer& layer) {
  DenseGrads g;
  g.dW = Matrix(layer.W.rows, layer.W.cols);
  g.db.assign(layer.b.size(), 0.0);
  return g;
}

Matrix backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& dY,
                DenseGrads& grads) {
  const std::size_t batch = cache.X.rows;
  Matrix dX(batch, layer.in_dim());
  for (std::size_t r = 0; r < batch; ++r) {
    auto x = cache.X.row(r);
    auto dx = dX.row(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      const double dz = dY(r, o) * activation_deriv_from_output(layer.act, cache.Y(r, o));
      if (dz == 0.0) continue;
      grads.db[o] += dz;
      axpy(dz, x, grads.dW.row(o));
      axpy(dz, layer.W.row(o), dx);
    }
  }
  return dX;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) throw Error("softmax_xent: target out of range");
  SoftmaxXent result;
  result.grad = softmax(logits);
  // -log softmax[target], computed from the stabilized form directly
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  result.loss = std::log(lse) + mx - logits[target];
  result.grad[target] -= 1.0;
  return result;
}

Matrix Mlp::forward(const Matrix& X) const {
  Matrix h = X;
  for (const auto& layer : layers) h = nn::forward(layer, h);
  return h;
}

Matrix Mlp::forward_cached(const Matrix& X, std::vector<DenseCache>& caches) const {
  caches.resize(layers.size());
  Matrix h = X;
  for (std::size_t i = 0; i < layers.size(); ++i) h = nn::forward_cached(layers[i], h, caches[i]);
  return h;
}

Matrix Mlp::backward(const std::vector<DenseCache>& caches, const Matrix& dY,
                     std::vector<DenseGrads>& grads) const {
  Matrix d = dY;
  for (std::size_t i = layers.size(); i-- > 0;) d = nn::backward(layers[i], caches[i], d, grads[i]);
  return d;
}

void append_params(const DenseLayer& layer, std::vector<double>& out) {
  out.insert(out.end(), layer.W.data.begin(), layer.W.data.end());
  out.insert(out.end(), layer.b.begin(), layer.b.end());
}

std::size_t read_params(DenseLayer& layer, std::span<const double> in, std::size_t offset) {
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), layer.W.data.size(),
              layer.W.data.begin());
  offset += layer.W.data.size();
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), layer.b.size(), layer.b.begin());
  return offset + layer.b.size();
}

void append_grads(const DenseGrads& grads, std::vector<double>& out) {
  out.insert(out.end(), grads.dW.data.begin(), grads.dW.data.end());
  out.insert(out.end(), grads.db.begin(), grads.db.end());
}

void OptimizerState::step(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != grads.size()) throw Error("optimizer step: shape mismatch");
  if (algo == Algo::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    ++step_count;
    return;
  }
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    step_count = 0;
  }
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

double grad_check(const std::function<double(const std::vector<double>&)>& loss,
                  const std::vector<double>& point, const std::vector<double>& analytic,
                  double eps) {
  if (!(eps > 0.0)) throw Error("grad_check: eps must be positive");
  if (point.size() != analytic.size()) throw Error("grad_check: shape mismatch");
  double max_err = 0.0;
  std::vector<double> p = point;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + eps;
    const double up = loss(p);
    p[i] = orig - eps;
    const double down = loss(p);
    p[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw Error("unknown activation '" + s + "'");
}

}  // namespace

std::string mlp_to_json(const Mlp& mlp) {
  json j;
  j["format"] = 1;
  json layers = json::array();
  for (const auto& layer : mlp.layers) {
    json l;
    l["in"] = layer.in_dim();
    l["out"] = layer.out_dim();
    l["activation"] = activation_name(layer.act);
    l["W"] = layer.W.data;  // row-major, out x in
    l["b"] = layer.b;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

Mlp mlp_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("format") || j["format"].get<int>() != 1)
    throw Error("model JSON: unsupported format version");
  Mlp mlp;
  for (const auto& l : j.at("layers")) {
    DenseLayer layer;
    const auto in = l.at("in").get<std::size_t>();
    const auto out = l.at("out").get<std::size_t>();
    layer.act = activation_from_name(l.at("activation").get<std::string>());
    layer.W = Matrix(out, in);
    auto w = l.at("W").get<std::vector<double>>();
    if (w.size() != out * in) throw Error("model JSON: weight shape mismatch");
    layer.W.data = std::move(w);
    layer.b = l.at("b").get<std::vector<double>>();
    if (layer.b.size() != out) throw Error("model JSON: bias shape mismatch");
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

}  // namespace biview::nn
