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
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ceg4n/network.hpp"

namespace ceg4n {

inline constexpr int kMinBits = 2;
/// Widest grid we accept; keeps every integer inside int64 and A/s exact
/// enough for round-to-nearest to be meaningful.
inline constexpr int kMaxSupportedBits = 62;

inline void require_bits(int n) {
  if (n < kMinBits || n > kMaxSupportedBits) {
    throw std::invalid_argument("bit width " + std::to_string(n) + " outside [2, 62]");
  }
}

inline std::int64_t grid_min(int n) { return -(std::int64_t{1} << (n - 1)); }
inline std::int64_t grid_max(int n) { return (std::int64_t{1} << (n - 1)) - 1; }

/// Per-layer bit widths n_1..n_L with their search bounds.
class BitAllocation {
 public:
  BitAllocation() = default;
  BitAllocation(std::vector<int> bits, int n_min = 2, int n_max = 52)
      : bits_(std::move(bits)), n_min_(n_min), n_max_(n_max) {
    if (n_min_ < kMinBits || n_min_ > n_max_ || n_max_ > kMaxSupportedBits) {
      throw std::invalid_argument("invalid bit bounds [" + std::to_string(n_min_) + ", " +
                                  std::to_string(n_max_) + "]");
    }
    for (int b : bits_) {
      if (b < n_min_ || b > n_max_) {
        throw std::invalid_argument("bit width " + std::to_string(b) + " outside bounds");
      }
    }
  }

  static BitAllocation uniform(std::size_t layers, int n, int n_min = 2, int n_max = 52) {
    return BitAllocation(std::vector<int>(layers, n), n_min, n_max);
  }

  const std::vector<int>& bits() const { return bits_; }
  int operator[](std::size_t i) const { return bits_[i]; }
  std::size_t size() const { return bits_.size(); }
  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }
  int total() const { return std::accumulate(bits_.begin(), bits_.end(), 0); }
  bool all_max() const {
    return std::all_of(bits_.begin(), bits_.end(), [&](int b) { return b == n_max_; });
  }

  bool operator==(const BitAllocation&) const = default;

 private:
  std::vector<int> bits_;
  int n_min_ = 2;
  int n_max_ = 52;
};

/// Symmetric clipping bound c = max(|min A|, |max A|); 0 for empty A.
inline double clip_bound(std::span<const double> a) {
  if (a.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  return std::max(std::fabs(*lo), std::fabs(*hi));
}

/// Grid step for a symmetric range [-c, c] split into 2^n - 1 intervals.
inline double scale_from_bound(double c, int n) {
  require_bits(n);
  if (c == 0.0) return 1.0;
  return 2.0 * c / (std::ldexp(1.0, n) - 1.0);
}

inline double scale_factor(std::span<const double> a, int n) {
  return scale_from_bound(clip_bound(a), n);
}

struct QuantizedTensor {
  std::vector<std::int64_t> values;
  double scale = 1.0;
};

/// Round-half-away-from-zero then clip to the signed n-bit range.
inline std::int64_t quantize_value(double v, double s, int n) {
  double r = std::round(v / s);
  if (std::fabs(r) < 0x1p52) {
    // v / s is itself rounded; on wide grids that can land on the wrong side
    // of a half step, so settle the choice on the residual v - r * s
    const double rem = std::fma(-r, s, v);
    const double half = 0.5 * s;
    if (rem > half || (rem == half && r >= 0.0)) {
      r += 1.0;
    } else if (rem < -half || (rem == -half && r <= 0.0)) {
      r -= 1.0;
    }
  }
  const double lo = static_cast<double>(grid_min(n));
  const double hi = static_cast<double>(grid_max(n));
  return static_cast<std::int64_t>(std::clamp(r, lo, hi));
}

inline std::vector<std::int64_t> quantize_with_scale(std::span<const double> a, double s, int n) {
  require_bits(n);
  if (!(s > 0.0)) throw std::invalid_argument("scale must be positive");
  std::vector<std::int64_t> q(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q[i] = quantize_value(a[i], s, n);
  return q;
}

inline QuantizedTensor quantize_tensor(std::span<const double> a, int n) {
  const double s = scale_factor(a, n);
  return {quantize_with_scale(a, s, n), s};
}

inline std::vector<double> dequantize(std::span<const std::int64_t> q, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale must be positive");
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = s * static_cast<double>(q[i]);
  return out;
}

struct QuantizedLayer {
  std::vector<std::int64_t> q_weights;  // row-major, same shape as the source layer
  std::vector<std::int64_t> q_bias;
  double scale = 1.0;
  int bits = 0;
};

/// Integer grids plus the de-quantized float network used for inference.
struct QuantizedNetwork {
  std::vector<QuantizedLayer> layers;
  Network realization;
  std::vector<int> bits() const {
    std::vector<int> b;
    for (const auto& l : layers) b.push_back(l.bits);
    return b;
  }
};

/// Rebuilds the float realization s * q for each layer of `source`.
inline Network realize(const Network& source, const std::vector<QuantizedLayer>& qlayers) {
  require_dims(qlayers.size(), source.num_layers(), "quantized layer count");
  std::vector<Layer> out;
  out.reserve(qlayers.size());
  for (std::size_t i = 0; i < qlayers.size(); ++i) {
    const Layer& src = source.layer(i);
    const QuantizedLayer& q = qlayers[i];
    out.emplace_back(src.out, src.in, dequantize(q.q_weights, q.scale), dequantize(q.q_bias, q.scale),
                     src.activation);
  }
  return Network(source.input_dim(), std::move(out));
}

/// Shared weight/bias grid of a layer: the larger of the two scale factors.
/// The s = 1 sentinel applies only when weights and bias are both all zero.
inline double layer_scale(const Layer& l, int n) {
  return scale_from_bound(std::max(clip_bound(l.weights), clip_bound(l.bias)), n);
}

inline QuantizedNetwork quantize_network(const Network& net, const BitAllocation& alloc) {
  if (alloc.size() != net.num_layers()) {
    throw std::invalid_argument("allocation has " + std::to_string(alloc.size()) +
                                " entries for a " + std::to_string(net.num_layers()) +
                                "-layer network");
  }
  std::vector<QuantizedLayer> qlayers;
  qlayers.reserve(net.num_layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const Layer& l = net.layer(i);
    const int n = alloc[i];
    QuantizedLayer q;
    q.bits = n;
    q.scale = layer_scale(l, n);
    q.q_weights = quantize_with_scale(l.weights, q.scale, n);
    q.q_bias = quantize_with_scale(l.bias, q.scale, n);
    qlayers.push_back(std::move(q));
  }
  Network real = realize(net, qlayers);
  return {std::move(qlayers), std::move(real)};
}

}  // namespace ceg4n
