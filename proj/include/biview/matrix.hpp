#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "biview/util.hpp"

namespace biview {

// Dense row-major matrix of doubles. All numeric state in the library lives
// in this type; graph sparsity is handled at the aggregation level.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double l2_norm(std::span<const double> x) {
  return std::sqrt(dot(x, x));
}

inline double l2_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

enum class EmbeddingRole { n2v, sage, fused, enhanced };

inline const char* role_name(EmbeddingRole role) {
  switch (role) {
    case EmbeddingRole::n2v: return "n2v";
    case EmbeddingRole::sage: return "sage";
    case EmbeddingRole::fused: return "fused";
    case EmbeddingRole::enhanced: return "enhanced";
  }
  return "unknown";
}

inline EmbeddingRole role_from_name(std::string_view name) {
  if (name == "n2v") return EmbeddingRole::n2v;
  if (name == "sage") return EmbeddingRole::sage;
  if (name == "fused") return EmbeddingRole::fused;
  if (name == "enhanced") return EmbeddingRole::enhanced;
  throw Error("unknown embedding role '" + std::string(name) + "'");
}

// Node-indexed embedding matrix: row v is the vector of node v.
struct EmbeddingMatrix {
  Matrix values;
  EmbeddingRole role = EmbeddingRole::n2v;

  std::size_t num_nodes() const { return values.rows; }
  std::size_t dim() const { return values.cols; }
};

}  // namespace biview
