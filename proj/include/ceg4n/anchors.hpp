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

#include <optional>
#include <vector>

#include "ceg4n/network.hpp"
#include "ceg4n/verifier.hpp"

namespace ceg4n {

/// Largest epsilon in [0, max_radius] (to ~2^-iterations relative precision)
/// for which the network is proved to keep its class on the ball around x.
inline double certified_radius(const Network& net, const Vector& x, double max_radius = 0.5,
                               int iterations = 14, std::optional<DomainClip> domain = DomainClip{},
                               VerifierConfig cfg = {}) {
  cfg.mode = VerifyMode::AnchorLabel;
  cfg.max_subproblems = std::min<std::size_t>(cfg.max_subproblems, 20000);
  double lo = 0.0, hi = max_radius;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const EquivalenceProperty p = make_property(net, {x, mid, std::nullopt}, domain);
    if (check_property(net, net, p, cfg).equivalent()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

struct AnchorSelection {
  /// epsilon = fraction * certified radius of the chosen sample
  double radius_fraction = 0.5;
  double max_epsilon = 0.1;
  std::optional<DomainClip> domain = DomainClip{};
};

/// One anchor per class: the correctly classified sample with the largest
/// certified radius, with epsilon a fixed fraction of that radius. Classes
/// with no correctly classified sample are skipped.
inline std::vector<AnchorEntry> select_class_anchors(const Network& net, const Dataset& data,
                                                    const AnchorSelection& sel = {}) {
  require_dims(data.dim(), net.input_dim(), "dataset features");
  std::vector<AnchorEntry> out;
  for (std::size_t c = 0; c < net.output_dim(); ++c) {
    double best_radius = -1.0;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.label(i) != c || predict(net, data.feature(i)) != c) continue;
      const double r = certified_radius(net, data.feature(i), 2.0 * sel.max_epsilon / sel.radius_fraction,
                                        12, sel.domain);
      if (r > best_radius) {
        best_radius = r;
        best = i;
      }
    }
    if (!best) continue;
    const double eps = std::min(sel.max_epsilon, sel.radius_fraction * best_radius);
    out.push_back({data.feature(*best), eps, std::nullopt});
  }
  return out;
}

}  // namespace ceg4n
