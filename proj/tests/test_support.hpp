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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <sys/wait.h>
#include <string>
#include <vector>

#include "ceg4n/ceg4n.hpp"

namespace ceg4n::support {

inline std::string source_path(const std::string& rel) { return std::string(CEG4N_SOURCE_DIR) + "/" + rel; }

inline Network fixture(const std::string& name) { return load_network(source_path("data/models/" + name + ".json")); }
inline Dataset dataset(const std::string& name) { return load_dataset(source_path("data/" + name + ".csv")); }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ceg4n_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Dense random ReLU MLP with an Identity output layer.
inline Network random_network(std::mt19937_64& rng, std::size_t input_dim, const std::vector<std::size_t>& hidden,
                              std::size_t outputs, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Layer> layers;
  std::size_t in = input_dim;
  auto add = [&](std::size_t out, Activation act) {
    std::vector<double> w(out * in), b(out);
    for (double& v : w) v = u(rng);
    for (double& v : b) v = 0.5 * u(rng);
    layers.emplace_back(out, in, std::move(w), std::move(b), act);
    in = out;
  };
  for (std::size_t h : hidden) add(h, Activation::ReLU);
  add(outputs, Activation::Identity);
  return Network(input_dim, std::move(layers));
}

inline Vector random_point(std::mt19937_64& rng, std::size_t dim, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector x(dim);
  for (double& v : x) v = u(rng);
  return x;
}

/// Reference-vs-quantized violation of the property, searched on a regular
/// grid over the free features (at most two free features).
inline std::optional<Vector> grid_violation(const Network& ref, const Network& quant, const EquivalenceProperty& p,
                                            double step, VerifyMode mode = VerifyMode::AnchorLabel) {
  const std::size_t d = p.free_mask.size();
  if (d > 2) throw std::invalid_argument("grid oracle supports up to two free features");
  std::vector<std::vector<double>> axes(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double lo = p.free_lower(k), hi = p.free_upper(k);
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) axes[k].push_back(std::min(hi, lo + static_cast<double>(i) * step));
    if (axes[k].back() < hi) axes[k].push_back(hi);
  }
  auto violates = [&](const Vector& x) {
    const std::size_t want = mode == VerifyMode::AnchorLabel ? p.reference_class : predict(ref, x);
    return predict(quant, x) != want;
  };
  if (d == 0) {
    return violates(p.anchor) ? std::optional<Vector>(p.anchor) : std::nullopt;
  }
  Vector free(d);
  if (d == 1) {
    for (double a : axes[0]) {
      free[0] = a;
      Vector x = p.embed(free);
      if (violates(x)) return x;
    }
    return std::nullopt;
  }
  for (double a : axes[0]) {
    for (double b : axes[1]) {
      free[0] = a;
      free[1] = b;
      Vector x = p.embed(free);
      if (violates(x)) return x;
    }
  }
  return std::nullopt;
}

/// Minimum sum of bits over every allocation in [lo, hi]^2 that agrees with
/// the reference on all counter-examples.
inline int brute_force_optimum(const Network& net, const CounterExampleSet& ces, int lo, int hi) {
  int best = 2 * hi;
  for (int a = lo; a <= hi; ++a) {
    for (int b = lo; b <= hi; ++b) {
      if (a + b < best && feasible(net, BitAllocation({a, b}, lo, hi), ces)) best = a + b;
    }
  }
  return best;
}

/// A point on the reference decision boundary between two differently
/// classified samples, found by bisecting the segment joining them.
inline Vector boundary_point(const Network& net, const Vector& a, const Vector& b) {
  Vector lo = a, hi = b;
  const std::size_t ca = predict(net, a);
  for (int it = 0; it < 200; ++it) {
    Vector mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
    if (mid == lo || mid == hi) break;
    (predict(net, mid) == ca ? lo : hi) = mid;
  }
  return lo;
}

/// A small two-layer network plus counter-examples on which 8-bit
/// quantization still agrees with it, so [2, 8]^2 always has a feasible point.
struct ToyProblem {
  Network net;
  CounterExampleSet ces;
};

inline ToyProblem toy_problem(std::uint64_t seed, std::size_t num_ces = 25) {
  std::mt19937_64 rng(seed);
  ToyProblem t{random_network(rng, 4, {6}, 3, 1.5), {}};
  const Network top = quantize_network(t.net, BitAllocation({8, 8}, 2, 8)).realization;
  for (int tries = 0; t.ces.size() < num_ces && tries < 100000; ++tries) {
    Vector x = random_point(rng, 4);
    if (concrete_check(t.net, top, x)) t.ces.insert(std::move(x));
  }
  return t;
}

/// Two-input network symmetric under swapping x0 with x1 (and hidden units 0
/// and 1). Per-layer symmetric quantization keeps that symmetry, so every
/// allocation has the same decision boundary x0 = x1.
inline Network symmetric_boundary_net() {
  return Network(2, {Layer::from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}}, {0.1, 0.1, 0.0}, Activation::ReLU),
                     Layer::from_rows({{2.0, -1.0, 0.3}, {-1.0, 2.0, 0.3}}, {0.0, 0.0}, Activation::Identity)});
}

/// An anchor on that boundary; the ball reaches into both classes.
inline AnchorEntry symmetric_boundary_anchor() { return {{0.4, 0.4}, 0.05, std::nullopt}; }

inline int run_cli(const std::string& args) {
  const std::string cmd = std::string(CEG4N_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace ceg4n::support
