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

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace ceg4n;

TEST(Gpfq, OnGridWeightIsAFixedPoint) {
  // w = 0.5 with bias 0.75: grid step 2 * 0.75 / 15 = 0.1, w sits on it
  const Network net(1, {Layer(1, 1, {0.5}, {0.75}, Activation::Identity)});
  const Dataset calib({{0.8}}, {0});
  GpfqStats stats;
  const QuantizedNetwork q = gpfq_quantize(net, calib, 4, CoordinateOrder::Ascending, &stats);
  const double s = q.layers[0].scale;
  EXPECT_DOUBLE_EQ(s, 0.1);
  EXPECT_EQ(q.layers[0].q_weights[0], quantize_value(0.5, s, 4));
  EXPECT_EQ(q.layers[0].q_weights[0], 5);
  EXPECT_NEAR(stats.residual_norms[0], 0.0, 1e-15);
}

TEST(Gpfq, EmptyCalibrationRejected) {
  EXPECT_THROW(gpfq_quantize(support::fixture("iris_3"), Dataset{}, 4), std::invalid_argument);
  EXPECT_THROW(gpfq_quantize(support::fixture("iris_3"), support::dataset("iris_train"), 1), std::invalid_argument);
}

TEST(Gpfq, SymmetricNeuronIsOrderIndependent) {
  // w = (a, a) with calibration symmetric under swapping the two features
  const double a = 0.37;
  const Network net(2, {Layer(1, 2, {a, a}, {0.0}, Activation::Identity)});
  const Dataset calib({{0.2, 0.9}, {0.9, 0.2}, {0.5, 0.5}, {0.1, 0.4}, {0.4, 0.1}}, {0, 0, 0, 0, 0});
  for (int n : {2, 3, 4, 6}) {
    GpfqStats asc, desc;
    const auto qa = gpfq_quantize(net, calib, n, CoordinateOrder::Ascending, &asc);
    const auto qd = gpfq_quantize(net, calib, n, CoordinateOrder::Descending, &desc);
    // brute force: total error of each realization over the calibration set
    auto err = [&](const Network& q) {
      double e = 0.0;
      for (const auto& x : calib.features()) {
        const double d = forward(net, x)[0] - forward(q, x)[0];
        e += d * d;
      }
      return e;
    };
    EXPECT_NEAR(err(qa.realization), err(qd.realization), 1e-12) << n;
    EXPECT_NEAR(asc.residual_norms[0], desc.residual_norms[0], 1e-12) << n;
  }
}

TEST(Gpfq, FiftyTwoBitsKeepsAccuracy) {
  const Network net = support::fixture("seeds_15");
  const QuantizedNetwork q = gpfq_quantize(net, support::dataset("seeds_train"), 52);
  const Dataset test = support::dataset("seeds_test");
  EXPECT_DOUBLE_EQ(accuracy(q.realization, test), accuracy(net, test));
}

TEST(Gpfq, IntegersInRangeAndDeterministic) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = support::random_network(rng, 4, {7}, 3, 2.0);
    std::vector<Vector> xs;
    for (int i = 0; i < 15; ++i) xs.push_back(support::random_point(rng, 4));
    const Dataset calib(xs, std::vector<std::size_t>(xs.size(), 0));
    const int n = 2 + trial % 8;
    const QuantizedNetwork a = gpfq_quantize(net, calib, n);
    const QuantizedNetwork b = gpfq_quantize(net, calib, n);
    EXPECT_EQ(a.realization, b.realization);
    for (const auto& l : a.layers) {
      EXPECT_EQ(l.bits, n);
      for (auto v : l.q_weights) {
        ASSERT_GE(v, grid_min(n));
        ASSERT_LE(v, grid_max(n));
      }
    }
  }
}

TEST(Gpfq, OrthogonalCalibrationReducesToRounding) {
  // with one-hot calibration inputs every coordinate sees its own sample, the
  // residual never couples coordinates, and each weight is simply rounded
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = support::random_network(rng, 5, {}, 3, 2.0);
    std::vector<Vector> xs;
    for (std::size_t k = 0; k < 5; ++k) {
      Vector e(5, 0.0);
      e[k] = 0.25 + 0.15 * static_cast<double>(k);
      xs.push_back(e);
    }
    const Dataset calib(xs, std::vector<std::size_t>(5, 0));
    const int n = 2 + trial % 6;
    for (auto order : {CoordinateOrder::Ascending, CoordinateOrder::Descending}) {
      const QuantizedNetwork g = gpfq_quantize(net, calib, n, order);
      const QuantizedNetwork r = quantize_network(net, BitAllocation({n}));
      const double s = r.layers[0].scale;
      for (std::size_t i = 0; i < net.layer(0).weights.size(); ++i) {
        const double t = std::fabs(net.layer(0).weights[i] / s);
        const bool half_step = std::fabs(t - std::floor(t) - 0.5) < 1e-9;
        if (half_step) {
          EXPECT_LE(std::llabs(g.layers[0].q_weights[i] - r.layers[0].q_weights[i]), 1);
        } else {
          EXPECT_EQ(g.layers[0].q_weights[i], r.layers[0].q_weights[i]) << "n=" << n << " i=" << i;
        }
      }
    }
  }
}

TEST(Gpfq, PerLayerAllocation) {
  const Network net = support::fixture("iris_3");
  const Dataset calib = support::dataset("iris_train");
  const QuantizedNetwork q = gpfq_quantize(net, calib, BitAllocation({5, 3}));
  EXPECT_EQ(q.bits(), (std::vector<int>{5, 3}));
  EXPECT_EQ(gpfq_quantize(net, calib, BitAllocation({4, 4})).realization, gpfq_quantize(net, calib, 4).realization);
  EXPECT_THROW(gpfq_quantize(net, calib, BitAllocation({4})), std::invalid_argument);
}
