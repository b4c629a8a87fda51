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

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ceg4n/network.hpp"
#include "ceg4n/quantizer.hpp"

namespace ceg4n {

enum class CoordinateOrder { Ascending, Descending };

struct GpfqStats {
  /// Per layer, sum over neurons of the final residual norm ||u||_2.
  std::vector<double> residual_norms;
};

/// Greedy path-following quantization with a bit width per layer.
///
/// Layer by layer, each neuron's weights are visited one coordinate at a
/// time. A residual u (one entry per calibration sample) carries the gap
/// between the original pre-activation, computed on inputs from the float
/// network, and the quantized one, computed on inputs from the already
/// quantized prefix. Coordinate t picks the grid point nearest to
///   <X~_t, u + w_t X_t> / ||X~_t||^2
/// and updates u += w_t X_t - q_t X~_t. The grid is the same symmetric
/// per-layer grid quantize_network uses; biases are rounded onto it directly.
inline QuantizedNetwork gpfq_quantize(const Network& net, const Dataset& calibration,
                                      const BitAllocation& alloc,
                                      CoordinateOrder order = CoordinateOrder::Ascending,
                                      GpfqStats* stats = nullptr) {
  if (calibration.empty()) throw std::invalid_argument("gpfq: empty calibration set");
  if (alloc.size() != net.num_layers()) {
    throw std::invalid_argument("gpfq: allocation has " + std::to_string(alloc.size()) + " entries for a " +
                                std::to_string(net.num_layers()) + "-layer network");
  }
  require_dims(calibration.dim(), net.input_dim(), "calibration features");

  const std::size_t m = calibration.size();
  std::vector<Vector> analog = calibration.features();
  std::vector<Vector> quant = calibration.features();
  std::vector<QuantizedLayer> qlayers;
  if (stats) stats->residual_norms.clear();

  for (std::size_t li = 0; li < net.num_layers(); ++li) {
    const Layer& layer = net.layer(li);
    const int n = alloc[li];
    QuantizedLayer q;
    q.bits = n;
    q.scale = layer_scale(layer, n);
    q.q_weights.assign(layer.weights.size(), 0);
    q.q_bias = quantize_with_scale(layer.bias, q.scale, n);

    // column norms of the quantized-path inputs do not depend on the neuron
    std::vector<double> col_norm2(layer.in, 0.0);
    for (std::size_t t = 0; t < layer.in; ++t) {
      for (std::size_t k = 0; k < m; ++k) col_norm2[t] += quant[k][t] * quant[k][t];
    }

    double residual_total = 0.0;
    std::vector<double> u(m);
    for (std::size_t r = 0; r < layer.out; ++r) {
      std::fill(u.begin(), u.end(), 0.0);
      for (std::size_t step = 0; step < layer.in; ++step) {
        const std::size_t t = order == CoordinateOrder::Ascending ? step : layer.in - 1 - step;
        const double w = layer.weight(r, t);
        double dot = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          u[k] += w * analog[k][t];
          dot += quant[k][t] * u[k];
        }
        const double target = col_norm2[t] > 0.0 ? dot / col_norm2[t] : w;
        const std::int64_t qt = quantize_value(target, q.scale, n);
        const double wq = q.scale * static_cast<double>(qt);
        for (std::size_t k = 0; k < m; ++k) u[k] -= wq * quant[k][t];
        q.q_weights[r * layer.in + t] = qt;
      }
      double norm2 = 0.0;
      for (double v : u) norm2 += v * v;
      residual_total += std::sqrt(norm2);
    }
    if (stats) stats->residual_norms.push_back(residual_total);

    Layer ql(layer.out, layer.in, dequantize(q.q_weights, q.scale), dequantize(q.q_bias, q.scale),
             layer.activation);
    for (std::size_t k = 0; k < m; ++k) {
      analog[k] = apply_layer(layer, analog[k]);
      quant[k] = apply_layer(ql, quant[k]);
    }
    qlayers.push_back(std::move(q));
  }
  Network real = realize(net, qlayers);
  return {std::move(qlayers), std::move(real)};
}

/// Same bit width for every layer.
inline QuantizedNetwork gpfq_quantize(const Network& net, const Dataset& calibration, int n,
                                      CoordinateOrder order = CoordinateOrder::Ascending,
                                      GpfqStats* stats = nullptr) {
  require_bits(n);
  return gpfq_quantize(net, calibration, BitAllocation::uniform(net.num_layers(), n, kMinBits, kMaxSupportedBits),
                       order, stats);
}

}  // namespace ceg4n
