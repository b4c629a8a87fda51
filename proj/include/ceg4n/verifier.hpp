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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "ceg4n/errors.hpp"
#include "ceg4n/network.hpp"

namespace ceg4n {

enum class VerifyMode { AnchorLabel, PointwisePair };

inline const char* to_string(VerifyMode m) {
  return m == VerifyMode::AnchorLabel ? "anchor" : "pairwise";
}

/// Global box every input coordinate must stay inside, e.g. [0, 1]^n.
struct DomainClip {
  double lower = 0.0;
  double upper = 1.0;
};

/// psi_x: inputs within epsilon (l-inf) of the anchor on the free features,
/// equal to the anchor elsewhere, and inside the domain clip when present.
/// psi_y: the quantized network predicts reference_class.
struct EquivalenceProperty {
  Vector anchor;
  double epsilon = 0.0;
  std::vector<std::size_t> free_mask;  // sorted, unique
  std::size_t reference_class = 0;
  std::optional<DomainClip> domain;

  double free_lower(std::size_t k) const {
    const double lo = anchor[free_mask[k]] - epsilon;
    return domain ? std::max(lo, domain->lower) : lo;
  }
  double free_upper(std::size_t k) const {
    const double hi = anchor[free_mask[k]] + epsilon;
    return domain ? std::min(hi, domain->upper) : hi;
  }

  /// Full input vector with the free features replaced by `free_values`.
  Vector embed(std::span<const double> free_values) const {
    Vector x = anchor;
    for (std::size_t k = 0; k < free_mask.size(); ++k) x[free_mask[k]] = free_values[k];
    return x;
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != anchor.size()) return false;
    std::size_t k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (k < free_mask.size() && free_mask[k] == i) {
        if (x[i] < free_lower(k) || x[i] > free_upper(k)) return false;
        ++k;
      } else if (x[i] != anchor[i]) {
        return false;
      }
    }
    return true;
  }
};

/// One entry of an anchors file. An empty optional mask means every feature
/// is free.
struct AnchorEntry {
  Vector input;
  double epsilon = 0.0;
  std::optional<std::vector<std::size_t>> free_mask;
};

inline EquivalenceProperty make_property(const Network& reference, const AnchorEntry& entry,
                                         std::optional<DomainClip> domain) {
  require_dims(entry.input.size(), reference.input_dim(), "anchor");
  if (!(entry.epsilon >= 0.0) || !std::isfinite(entry.epsilon)) {
    throw std::invalid_argument("epsilon must be a finite non-negative number");
  }
  for (double v : entry.input) {
    if (!std::isfinite(v)) throw std::invalid_argument("anchor has a non-finite coordinate");
    if (domain && (v < domain->lower || v > domain->upper)) {
      throw std::invalid_argument("anchor lies outside the input domain");
    }
  }
  EquivalenceProperty p;
  p.anchor = entry.input;
  p.epsilon = entry.epsilon;
  p.domain = domain;
  if (entry.free_mask) {
    p.free_mask = *entry.free_mask;
    std::sort(p.free_mask.begin(), p.free_mask.end());
    p.free_mask.erase(std::unique(p.free_mask.begin(), p.free_mask.end()), p.free_mask.end());
    if (!p.free_mask.empty() && p.free_mask.back() >= entry.input.size()) {
      throw std::invalid_argument("free_mask index out of range");
    }
  } else {
    p.free_mask.resize(entry.input.size());
    for (std::size_t i = 0; i < p.free_mask.size(); ++i) p.free_mask[i] = i;
  }
  p.reference_class = predict(reference, p.anchor);
  return p;
}

inline std::vector<EquivalenceProperty> build_properties(
    const Network& reference, std::span<const AnchorEntry> anchors,
    std::optional<DomainClip> domain = DomainClip{}) {
  std::vector<EquivalenceProperty> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back(make_property(reference, a, domain));
  return out;
}

inline std::vector<EquivalenceProperty> build_properties(
    const Network& reference, const std::vector<Vector>& anchors, double epsilon,
    std::optional<std::vector<std::size_t>> free_mask = std::nullopt,
    std::optional<DomainClip> domain = DomainClip{}) {
  std::vector<AnchorEntry> entries;
  for (const auto& a : anchors) entries.push_back({a, epsilon, free_mask});
  return build_properties(reference, entries, domain);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Region over the free features of a property.
struct Box {
  Vector lower;
  Vector upper;

  double width(std::size_t k) const { return upper[k] - lower[k]; }
  std::size_t widest() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < lower.size(); ++k) {
      if (width(k) > width(best)) best = k;
    }
    return best;
  }
  double max_width() const { return lower.empty() ? 0.0 : width(widest()); }
  Vector center() const {
    Vector c(lower.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = lower[k] + 0.5 * (upper[k] - lower[k]);
    return c;
  }
};

inline Box root_box(const EquivalenceProperty& p) {
  Box b;
  for (std::size_t k = 0; k < p.free_mask.size(); ++k) {
    b.lower.push_back(p.free_lower(k));
    b.upper.push_back(p.free_upper(k));
  }
  return b;
}

namespace detail {

inline constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

/// Higham's gamma_k bound on relative error of a k-term float sum, doubled.
inline double rounding_gamma(std::size_t terms) {
  const double k = static_cast<double>(terms + 2);
  return 2.0 * k * kUnitRoundoff / (1.0 - k * kUnitRoundoff);
}

inline double magnitude(const Interval& iv) { return std::max(std::fabs(iv.lo), std::fabs(iv.hi)); }

/// Affine image of a box, widened so that it encloses both the exact value and
/// the value forward() computes in floating point.
inline std::vector<Interval> affine_bounds(const Layer& l, std::span<const Interval> x) {
  std::vector<Interval> out(l.out);
  for (std::size_t r = 0; r < l.out; ++r) {
    double lo = 0.0, hi = 0.0, mag = 0.0;
    for (std::size_t c = 0; c < l.in; ++c) {
      const double w = l.weight(r, c);
      const double a = w * x[c].lo, b = w * x[c].hi;
      lo += std::min(a, b);
      hi += std::max(a, b);
      mag += std::fabs(w) * magnitude(x[c]);
    }
    lo += l.bias[r];
    hi += l.bias[r];
    mag += std::fabs(l.bias[r]);
    const double slack = 2.0 * rounding_gamma(l.in) * mag + std::numeric_limits<double>::denorm_min();
    out[r] = {lo - slack, hi + slack};
  }
  return out;
}

inline void relu_bounds(std::vector<Interval>& v) {
  for (auto& iv : v) {
    iv.lo = std::max(iv.lo, 0.0);
    iv.hi = std::max(iv.hi, 0.0);
  }
}

inline std::vector<Interval> input_intervals(std::span<const double> lower,
                                             std::span<const double> upper) {
  std::vector<Interval> x(lower.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {lower[i], upper[i]};
  return x;
}

}  // namespace detail

/// Interval enclosure of every logit over the input box [lower, upper].
inline std::vector<Interval> propagate_intervals(const Network& net, std::span<const double> lower,
                                                 std::span<const double> upper) {
  require_dims(lower.size(), net.input_dim(), "interval lower bound");
  require_dims(upper.size(), net.input_dim(), "interval upper bound");
  std::vector<Interval> h = detail::input_intervals(lower, upper);
  for (const Layer& l : net.layers()) {
    h = detail::affine_bounds(l, h);
    if (l.activation == Activation::ReLU) detail::relu_bounds(h);
  }
  return h;
}

/// Sound per-class output intervals over the part of the property region
/// described by `box`.
inline std::vector<Interval> interval_bounds(const Network& net, const Box& box,
                                             const EquivalenceProperty& prop) {
  return propagate_intervals(net, prop.embed(box.lower), prop.embed(box.upper));
}

/// Lower bound, over the input box, of how far class `c` leads every other
/// class; positive means `c` is the argmax everywhere in the box (including
/// the lowest-index tie rule). With an Identity output layer the logit
/// differences are bounded directly from the last hidden layer, which is much
/// tighter than subtracting independent output intervals.
inline double class_margin_lower_bound(const Network& net, std::span<const double> lower,
                                       std::span<const double> upper, std::size_t c) {
  require_dims(lower.size(), net.input_dim(), "interval lower bound");
  std::vector<Interval> h = detail::input_intervals(lower, upper);
  const std::size_t L = net.num_layers();
  for (std::size_t i = 0; i + 1 < L; ++i) {
    h = detail::affine_bounds(net.layer(i), h);
    if (net.layer(i).activation == Activation::ReLU) detail::relu_bounds(h);
  }
  const Layer& last = net.layer(L - 1);
  double best = std::numeric_limits<double>::infinity();
  if (last.activation == Activation::Identity) {
    for (std::size_t k = 0; k < last.out; ++k) {
      if (k == c) continue;
      // Rows that agree wherever the input can be nonzero give bit-identical
      // logits, an exact tie the lowest index wins.
      bool tied = last.bias[c] == last.bias[k];
      for (std::size_t j = 0; tied && j < last.in; ++j) {
        tied = last.weight(c, j) == last.weight(k, j) || (h[j].lo == 0.0 && h[j].hi == 0.0);
      }
      if (tied) {
        if (k < c) return -std::numeric_limits<double>::infinity();
        continue;
      }
      double lo = 0.0, mag = 0.0;
      for (std::size_t j = 0; j < last.in; ++j) {
        const double d = last.weight(c, j) - last.weight(k, j);
        lo += std::min(d * h[j].lo, d * h[j].hi);
        mag += (std::fabs(last.weight(c, j)) + std::fabs(last.weight(k, j))) * detail::magnitude(h[j]);
      }
      lo += last.bias[c] - last.bias[k];
      mag += std::fabs(last.bias[c]) + std::fabs(last.bias[k]);
      const double slack =
          4.0 * detail::rounding_gamma(last.in + 1) * mag + std::numeric_limits<double>::denorm_min();
      best = std::min(best, lo - slack);
    }
  } else {
    std::vector<Interval> out = detail::affine_bounds(last, h);
    detail::relu_bounds(out);
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (k != c) best = std::min(best, out[c].lo - out[k].hi);
    }
  }
  return best;
}

enum class VerdictKind { Equivalent, CounterExample, Unknown };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Equivalent: return "equivalent";
    case VerdictKind::CounterExample: return "counterexample";
    case VerdictKind::Unknown: return "unknown";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  /// Counter-example input, or for Unknown the most adversarial sample seen.
  Vector input;
  std::size_t ref_class = 0;
  std::size_t quant_class = 0;
  /// Smallest winning margin observed at a concrete sample.
  double best_margin = std::numeric_limits<double>::infinity();
  std::size_t subproblems = 0;
  std::string reason;

  bool equivalent() const { return kind == VerdictKind::Equivalent; }
  bool counterexample() const { return kind == VerdictKind::CounterExample; }
};

struct VerifierConfig {
  /// Boxes narrower than this are not split further; 0 selects 1e-6 * epsilon.
  double min_box_width = 0.0;
  std::size_t max_subproblems = 200000;
  VerifyMode mode = VerifyMode::AnchorLabel;
  /// All 2^d corners are sampled only when d free features <= this.
  std::size_t max_corner_dims = 8;
};

inline bool concrete_check(const Network& reference, const Network& quantized,
                           std::span<const double> x) {
  require_dims(quantized.input_dim(), reference.input_dim(), "quantized input");
  return predict(reference, x) == predict(quantized, x);
}

namespace detail {

/// Signed lead of class c: positive iff argmax(z) == c.
inline double win_margin(std::span<const double> z, std::size_t c) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k == c) continue;
    const double d = z[c] - z[k];
    // a tie with a lower index loses; push it just below zero
    m = std::min(m, (d == 0.0 && k < c) ? -std::numeric_limits<double>::denorm_min() : d);
  }
  if (m == 0.0) m = std::numeric_limits<double>::denorm_min();
  return m;
}

/// Gradient of z[c] - z[k] w.r.t. the input at x, for the ReLU pattern at x.
inline Vector margin_gradient(const Network& net, std::span<const double> x, std::size_t c,
                              std::size_t k) {
  std::vector<std::vector<bool>> active;
  Vector h(x.begin(), x.end());
  for (const Layer& l : net.layers()) {
    Vector pre(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < l.in; ++j) acc += l.weight(r, j) * h[j];
      pre[r] = acc + l.bias[r];
    }
    std::vector<bool> a(l.out, true);
    if (l.activation == Activation::ReLU) {
      for (std::size_t r = 0; r < l.out; ++r) {
        a[r] = pre[r] > 0.0;
        if (!a[r]) pre[r] = 0.0;
      }
    }
    active.push_back(std::move(a));
    h = std::move(pre);
  }
  Vector g(net.output_dim(), 0.0);
  g[c] = 1.0;
  g[k] = -1.0;
  for (std::size_t li = net.num_layers(); li-- > 0;) {
    const Layer& l = net.layer(li);
    for (std::size_t r = 0; r < l.out; ++r) {
      if (!active[li][r]) g[r] = 0.0;
    }
    Vector prev(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      for (std::size_t j = 0; j < l.in; ++j) prev[j] += l.weight(r, j) * g[r];
    }
    g = std::move(prev);
  }
  return g;
}

struct PendingBox {
  Box box;
  double score;
  std::uint64_t seq;
};

struct PendingOrder {
  bool operator()(const PendingBox& a, const PendingBox& b) const {
    // priority_queue pops the "largest"; we want smallest score first, then
    // lexicographically smallest lower corner, then insertion order
    if (a.score != b.score) return a.score > b.score;
    if (a.box.lower != b.box.lower) return b.box.lower < a.box.lower;
    return a.seq > b.seq;
  }
};

}  // namespace detail

/// Decides psi(f, f^q) over the property region by branch-and-bound on the
/// free input features.
///
/// Each box is first attacked with concrete samples (centre, a
/// gradient-guided corner, and every corner when the box is low-dimensional);
/// any violation is returned as a counter-example. Otherwise interval bounds
/// try to prove that the required class wins throughout the box. Unproved
/// boxes are bisected along their widest free feature. Boxes are explored
/// most-adversarial first (lowest margin bound), ties broken by lower corner,
/// so the verdict is deterministic.
inline Verdict check_property(
    const Network& reference, const Network& quantized, const EquivalenceProperty& prop,
    const VerifierConfig& cfg = {},
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
  require_dims(quantized.input_dim(), reference.input_dim(), "quantized input");
  require_dims(quantized.output_dim(), reference.output_dim(), "quantized output");
  require_dims(prop.anchor.size(), reference.input_dim(), "property anchor");

  const bool pairwise = cfg.mode == VerifyMode::PointwisePair;
  const double min_width = cfg.min_box_width > 0.0 ? cfg.min_box_width : 1e-6 * prop.epsilon;

  Verdict v;
  v.ref_class = prop.reference_class;
  if (pairwise && quantized == reference) {
    // bit-identical networks agree at every input
    v.kind = VerdictKind::Equivalent;
    return v;
  }

  // Returns true if x violates the property; tracks the most adversarial x.
  auto sample = [&](const Vector& x) {
    const Logits zq = forward(quantized, x);
    const std::size_t qc = argmax(zq);
    std::size_t want = prop.reference_class;
    if (pairwise) want = predict(reference, x);
    const double margin = detail::win_margin(zq, want);
    if (qc != want) {
      v.kind = VerdictKind::CounterExample;
      v.input = x;
      v.ref_class = want;
      v.quant_class = qc;
      v.best_margin = margin;
      return true;
    }
    if (margin < v.best_margin) {
      v.best_margin = margin;
      v.input = x;
    }
    return false;
  };

  // Lower bound on the lead of the class that must win on `box`; for pairwise
  // mode both networks must agree on the reference's class at the centre.
  auto bound = [&](const Box& box) {
    const Vector lo = prop.embed(box.lower), hi = prop.embed(box.upper);
    if (!pairwise) {
      return class_margin_lower_bound(quantized, lo, hi, prop.reference_class);
    }
    const std::size_t c = predict(reference, prop.embed(box.center()));
    return std::min(class_margin_lower_bound(reference, lo, hi, c),
                    class_margin_lower_bound(quantized, lo, hi, c));
  };

  // Sample points of a box, returns true on a violation.
  auto attack = [&](const Box& box) {
    const Vector centre = prop.embed(box.center());
    if (sample(centre)) return true;
    const std::size_t d = box.lower.size();
    if (d == 0 || box.max_width() == 0.0) return false;
    // linearised worst corner against the runner-up class at the centre
    const Logits zq = forward(quantized, centre);
    const std::size_t want = pairwise ? predict(reference, centre) : prop.reference_class;
    std::size_t runner = want == 0 ? 1 : 0;
    for (std::size_t k = 0; k < zq.size(); ++k) {
      if (k != want && zq[k] > zq[runner]) runner = k;
    }
    if (zq.size() > 1) {
      const Vector g = detail::margin_gradient(quantized, centre, want, runner);
      Vector corner(d);
      for (std::size_t k = 0; k < d; ++k) {
        corner[k] = g[prop.free_mask[k]] > 0.0 ? box.lower[k] : box.upper[k];
      }
      if (sample(prop.embed(corner))) return true;
    }
    if (d <= cfg.max_corner_dims) {
      Vector corner(d);
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        for (std::size_t k = 0; k < d; ++k) corner[k] = (mask >> k) & 1 ? box.upper[k] : box.lower[k];
        if (sample(prop.embed(corner))) return true;
      }
    }
    return false;
  };

  std::priority_queue<detail::PendingBox, std::vector<detail::PendingBox>, detail::PendingOrder> queue;
  std::uint64_t seq = 0;
  std::size_t unresolved = 0;
  Box root = root_box(prop);
  queue.push({root, bound(root), seq++});

  while (!queue.empty()) {
    detail::PendingBox item = queue.top();
    queue.pop();
    ++v.subproblems;
    if (attack(item.box)) return v;
    if (item.score > 0.0 || item.box.max_width() == 0.0) continue;  // proved (or a single point)
    if (v.subproblems >= cfg.max_subproblems) {
      v.kind = VerdictKind::Unknown;
      v.reason = "subproblem budget exhausted";
      return v;
    }
    if (deadline && (v.subproblems & 255) == 0 && std::chrono::steady_clock::now() > *deadline) {
      v.kind = VerdictKind::Unknown;
      v.reason = "deadline reached";
      return v;
    }
    if (item.box.max_width() < min_width) {
      ++unresolved;
      continue;
    }
    const std::size_t k = item.box.widest();
    const double mid = item.box.lower[k] + 0.5 * (item.box.upper[k] - item.box.lower[k]);
    Box left = item.box, right = item.box;
    left.upper[k] = mid;
    right.lower[k] = mid;
    queue.push({left, bound(left), seq++});
    queue.push({right, bound(right), seq++});
  }

  if (unresolved > 0) {
    v.kind = VerdictKind::Unknown;
    v.reason = std::to_string(unresolved) + " boxes below minimum width left unresolved";
    return v;
  }
  v.kind = VerdictKind::Equivalent;
  v.ref_class = prop.reference_class;
  if (v.input.empty()) v.input = prop.anchor;
  v.quant_class = predict(quantized, v.input);
  return v;
}

}  // namespace ceg4n
