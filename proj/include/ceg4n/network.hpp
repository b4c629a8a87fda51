/*
 * Copyright (c) 2026 The ceg4n Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ceg4n/errors.hpp"

namespace ceg4n {

using Vector = std::vector<double>;
using Logits = std::vector<double>;

enum class Activation { ReLU, Identity };

inline const char* to_string(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }

/// Fully connected layer y = act(W x + b), W stored row-major (out x in).
struct Layer {
  std::size_t out = 0;
  std::size_t in = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::ReLU;

  Layer() = default;
  Layer(std::size_t out_dim, std::size_t in_dim, std::vector<double> w, std::vector<double> b,
        Activation act)
      : out(out_dim), in(in_dim), weights(std::move(w)), bias(std::move(b)), activation(act) {}

  /// Builds a layer from nested rows; throws ShapeError if rows are ragged.
  static Layer from_rows(const std::vector<std::vector<double>>& rows, std::vector<double> b,
                         Activation act) {
    Layer l;
    l.out = rows.size();
    l.in = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != l.in) throw ShapeError("ragged weight matrix");
      l.weights.insert(l.weights.end(), r.begin(), r.end());
    }
    l.bias = std::move(b);
    l.activation = act;
    return l;
  }

  double weight(std::size_t r, std::size_t c) const { return weights[r * in + c]; }
  double& weight(std::size_t r, std::size_t c) { return weights[r * in + c]; }
  std::span<const double> row(std::size_t r) const { return {weights.data() + r * in, in}; }

  bool operator==(const Layer&) const = default;
};

/// Applies one layer. The dot product is accumulated in ascending index order
/// and the bias added last; interval propagation relies on this exact order.
inline Vector apply_layer(const Layer& layer, std::span<const double> x) {
  require_dims(x.size(), layer.in, "layer input");
  Vector y(layer.out);
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double* w = layer.weights.data() + r * layer.in;
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.in; ++c) acc += w[c] * x[c];
    acc += layer.bias[r];
    y[r] = (layer.activation == Activation::ReLU && acc < 0.0) ? 0.0 : acc;
  }
  return y;
}

class Network {
 public:
  Network() = default;

  /// Validates layer chaining and finiteness; throws ShapeError naming the
  /// offending layer (1-based).
  Network(std::size_t input_dim, std::vector<Layer> layers)
      : input_dim_(input_dim), layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network has no layers");
    if (input_dim_ == 0) throw ShapeError("input_dim must be positive");
    std::size_t width = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      const std::string name = "layer " + std::to_string(i + 1);
      if (l.in != width) {
        throw ShapeError(name + ": input width " + std::to_string(l.in) +
                         " does not match previous output width " + std::to_string(width));
      }
      if (l.out == 0) throw ShapeError(name + ": zero output width");
      if (l.weights.size() != l.out * l.in) throw ShapeError(name + ": weight count mismatch");
      if (l.bias.size() != l.out) throw ShapeError(name + ": bias length mismatch");
      auto finite = [](double v) { return std::isfinite(v); };
      if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
          !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
        throw ShapeError(name + ": non-finite parameter");
      }
      width = l.out;
    }
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().out; }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_[i]; }

  bool operator==(const Network&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;
};

inline Logits forward(const Network& net, std::span<const double> x) {
  require_dims(x.size(), net.input_dim(), "network input");
  Vector h(x.begin(), x.end());
  for (const Layer& l : net.layers()) h = apply_layer(l, h);
  return h;
}

/// Index of the maximal entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline std::size_t predict(const Network& net, std::span<const double> x) {
  return argmax(forward(net, x));
}

/// Rows of features in [0, 1] with integer labels.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Vector> features, std::vector<std::size_t> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.size() != labels_.size()) throw ParseError("feature/label count mismatch");
    if (!features_.empty()) {
      dim_ = features_.front().size();
      for (const auto& row : features_) {
        if (row.size() != dim_) throw ParseError("ragged feature rows");
        for (double v : row) {
          if (!std::isfinite(v)) throw ParseError("non-finite feature value");
        }
      }
    }
    for (std::size_t y : labels_) num_classes_ = std::max(num_classes_, y + 1);
  }

  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  std::size_t dim() const { return dim_; }
  /// One more than the largest label present.
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<Vector>& features() const { return features_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  const Vector& feature(std::size_t i) const { return features_[i]; }
  std::size_t label(std::size_t i) const { return labels_[i]; }

 private:
  std::vector<Vector> features_;
  std::vector<std::size_t> labels_;
  std::size_t dim_ = 0;
  std::size_t num_classes_ = 0;
};

inline double accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) return 0.0;
  require_dims(data.dim(), net.input_dim(), "dataset features");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) >= net.output_dim()) throw DimensionError("label exceeds output width");
    hits += predict(net, data.feature(i)) == data.label(i) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace ceg4n
