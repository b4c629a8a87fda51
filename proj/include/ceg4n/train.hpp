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
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ceg4n/errors.hpp"
#include "ceg4n/network.hpp"

namespace ceg4n {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 2000;
  std::uint64_t seed = 7;
  /// 0 means one class per distinct label index (max label + 1).
  std::size_t num_classes = 0;
};

struct TrainResult {
  Network network;
  double final_loss = 0.0;
};

/// He-uniform weights and a small positive hidden bias so narrow ReLU layers
/// start alive. Output layer is Identity.
inline Network init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                        std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  std::size_t in = input_dim;
  auto make = [&](std::size_t out, Activation act) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(out * in);
    for (double& v : w) v = dist(rng);
    std::vector<double> b(out, act == Activation::ReLU ? 0.1 : 0.0);
    layers.emplace_back(out, in, std::move(w), std::move(b), act);
    in = out;
  };
  for (std::size_t h : hidden) {
    if (h == 0) throw std::invalid_argument("hidden width must be positive");
    make(h, Activation::ReLU);
  }
  make(classes, Activation::Identity);
  return Network(input_dim, std::move(layers));
}

/// Mean softmax cross-entropy of the network over the dataset.
inline double cross_entropy(const Network& net, const Dataset& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Logits z = forward(net, data.feature(i));
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    loss += std::log(sum) + mx - z[data.label(i)];
  }
  return loss / static_cast<double>(data.size());
}

/// Full-batch gradient descent with heavy-ball momentum on softmax
/// cross-entropy. Deterministic for a given seed.
inline TrainResult train_mlp_detailed(const Dataset& data, const std::vector<std::size_t>& hidden,
                                      const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epoch count");
  const std::size_t classes = cfg.num_classes ? cfg.num_classes : data.num_classes();
  if (classes < 2) throw std::invalid_argument("train: need at least two classes");
  for (std::size_t y : data.labels()) {
    if (y >= classes) throw std::invalid_argument("train: label exceeds class count");
  }

  Network init = init_mlp(data.dim(), hidden, classes, cfg.seed);
  std::vector<Layer> layers = init.layers();
  const std::size_t L = layers.size();
  const double inv_n = 1.0 / static_cast<double>(data.size());

  std::vector<std::vector<double>> vel_w(L), vel_b(L), grad_w(L), grad_b(L);
  for (std::size_t l = 0; l < L; ++l) {
    vel_w[l].assign(layers[l].weights.size(), 0.0);
    vel_b[l].assign(layers[l].out, 0.0);
  }

  std::vector<Vector> acts(L + 1);  // acts[0] = input, acts[l+1] = output of layer l
  std::vector<Vector> pre(L);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t l = 0; l < L; ++l) {
      grad_w[l].assign(layers[l].weights.size(), 0.0);
      grad_b[l].assign(layers[l].out, 0.0);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      acts[0] = data.feature(i);
      for (std::size_t l = 0; l < L; ++l) {
        const Layer& ly = layers[l];
        pre[l].assign(ly.out, 0.0);
        for (std::size_t r = 0; r < ly.out; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < ly.in; ++c) acc += ly.weight(r, c) * acts[l][c];
          pre[l][r] = acc + ly.bias[r];
        }
        acts[l + 1] = pre[l];
        if (ly.activation == Activation::ReLU) {
          for (double& v : acts[l + 1]) v = v < 0.0 ? 0.0 : v;
        }
      }
      const Vector& z = acts[L];
      double mx = z[0];
      for (double v : z) mx = std::max(mx, v);
      Vector delta(z.size());
      double sum = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) sum += (delta[k] = std::exp(z[k] - mx));
      const std::size_t y = data.label(i);
      loss += std::log(sum) + mx - z[y];
      for (double& d : delta) d /= sum;
      delta[y] -= 1.0;

      for (std::size_t l = L; l-- > 0;) {
        const Layer& ly = layers[l];
        if (ly.activation == Activation::ReLU) {
          for (std::size_t r = 0; r < ly.out; ++r) {
            if (pre[l][r] <= 0.0) delta[r] = 0.0;
          }
        }
        for (std::size_t r = 0; r < ly.out; ++r) {
          grad_b[l][r] += delta[r];
          for (std::size_t c = 0; c < ly.in; ++c) grad_w[l][r * ly.in + c] += delta[r] * acts[l][c];
        }
        if (l == 0) break;
        Vector next(ly.in, 0.0);
        for (std::size_t r = 0; r < ly.out; ++r) {
          for (std::size_t c = 0; c < ly.in; ++c) next[c] += ly.weight(r, c) * delta[r];
        }
        delta = std::move(next);
      }
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) {
      throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t j = 0; j < layers[l].weights.size(); ++j) {
        vel_w[l][j] = cfg.momentum * vel_w[l][j] - cfg.learning_rate * grad_w[l][j] * inv_n;
        layers[l].weights[j] += vel_w[l][j];
      }
      for (std::size_t r = 0; r < layers[l].out; ++r) {
        vel_b[l][r] = cfg.momentum * vel_b[l][r] - cfg.learning_rate * grad_b[l][r] * inv_n;
        layers[l].bias[r] += vel_b[l][r];
      }
    }
  }
  for (const Layer& ly : layers) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(ly.weights.begin(), ly.weights.end(), finite) ||
        !std::all_of(ly.bias.begin(), ly.bias.end(), finite)) {
      throw DivergenceError("train: non-finite parameter after update");
    }
  }
  Network trained(data.dim(), std::move(layers));
  const double final_loss = cross_entropy(trained, data);
  if (!std::isfinite(final_loss)) throw DivergenceError("train: non-finite final loss");
  return {std::move(trained), final_loss};
}

inline Network train_mlp(const Dataset& data, const std::vector<std::size_t>& hidden,
                         const TrainConfig& cfg = {}) {
  return train_mlp_detailed(data, hidden, cfg).network;
}

}  // namespace ceg4n
