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
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ceg4n/network.hpp"
#include "ceg4n/quantizer.hpp"
#include "ceg4n/search.hpp"
#include "ceg4n/verifier.hpp"

namespace ceg4n {

enum class CegisStatus { Solved, Failed, Timeout };

inline const char* to_string(CegisStatus s) {
  switch (s) {
    case CegisStatus::Solved: return "solved";
    case CegisStatus::Failed: return "failed";
    case CegisStatus::Timeout: return "timeout";
  }
  return "?";
}

struct CegisConfig {
  std::size_t max_iterations = 20;
  /// Wall-time limit in seconds; <= 0 disables it.
  double budget_secs = 0.0;
  /// Verifier worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;
};

struct IterationRecord {
  BitAllocation alloc;
  std::vector<Verdict> verdicts;
  std::size_t added = 0;
  bool forced_max = false;
  std::vector<GenerationStats> ga_trace;
};

struct CegisResult {
  CegisStatus status = CegisStatus::Timeout;
  /// Last allocation handed to the verifier (the solution when Solved).
  std::optional<BitAllocation> allocation;
  std::size_t iterations = 0;
  CounterExampleSet counter_examples;
  std::vector<Verdict> per_property_verdicts;
  std::vector<double> per_property_secs;
  double wall_secs = 0.0;
  /// Set when Solved and a fresh verifier pass over the final allocation
  /// agreed.
  bool reverified = false;
  std::string message;
  std::vector<IterationRecord> history;
};

/// Checks every property, possibly on several threads. Results are indexed by
/// property so scheduling never changes the outcome.
inline std::vector<Verdict> verify_all(
    const Network& reference, const Network& quantized,
    const std::vector<EquivalenceProperty>& props, const VerifierConfig& vc,
    std::size_t threads = 0,
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt,
    std::vector<double>* secs = nullptr) {
  std::vector<Verdict> out(props.size());
  std::vector<double> times(props.size(), 0.0);
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, props.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < props.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      out[i] = check_property(reference, quantized, props[i], vc, deadline);
      times[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (secs) *secs = std::move(times);
  return out;
}

/// k distinct dataset rows chosen by a seeded shuffle. Duplicate rows collapse,
/// so the result can hold fewer than k inputs.
inline CounterExampleSet seed_counter_examples(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k > data.size()) {
    throw std::invalid_argument("cannot draw " + std::to_string(k) + " samples from a dataset of " +
                                std::to_string(data.size()));
  }
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  CounterExampleSet out;
  for (std::size_t i = 0; i < k; ++i) out.insert(data.feature(idx[i]));
  return out;
}

/// Optimise/verify/refine until every property is proved.
///
/// Each iteration asks the GA for the cheapest allocation that agrees with the
/// reference on the current counter-examples, quantizes, and verifies every
/// property. Counter-examples that separate the two networks join the set.
/// A counter-example the reference itself misclassifies relative to the
/// property's class cannot be repaired by any allocation that tracks the
/// reference, so the next candidate is the all-n_max allocation; a
/// counter-example there ends the run as Failed.
inline CegisResult run_ceg4n(const Network& net, const std::vector<EquivalenceProperty>& props,
                             CounterExampleSet initial, const GAConfig& ga, const VerifierConfig& vc,
                             const CegisConfig& cc = {}) {
  if (props.empty()) throw std::invalid_argument("run_ceg4n: no properties");
  for (const auto& p : props) require_dims(p.anchor.size(), net.input_dim(), "property anchor");
  ga.validate();

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  std::optional<clock::time_point> deadline;
  if (cc.budget_secs > 0.0) {
    deadline = start + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>(cc.budget_secs));
  }
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  CegisResult res;
  res.counter_examples = std::move(initial);
  const BitAllocation all_max = BitAllocation::uniform(net.num_layers(), ga.n_max, ga.n_min, ga.n_max);
  bool force_max = false;

  for (std::size_t it = 1; it <= cc.max_iterations; ++it) {
    if (deadline && clock::now() > *deadline) {
      res.message = "wall-time budget exhausted before iteration " + std::to_string(it);
      res.wall_secs = elapsed();
      return res;
    }
    GAConfig gi = ga;
    gi.seed = ga.seed + (it - 1);
    GAResult ga_run;
    if (force_max) {
      ga_run.best = all_max;
    } else {
      ga_run = ga_search(net, res.counter_examples, gi);
    }
    const BitAllocation alloc = ga_run.best;
    const QuantizedNetwork q = quantize_network(net, alloc);
    std::vector<double> secs;
    std::vector<Verdict> verdicts = verify_all(net, q.realization, props, vc, cc.threads, deadline, &secs);

    res.iterations = it;
    res.allocation = alloc;
    res.per_property_verdicts = verdicts;
    res.per_property_secs = secs;
    IterationRecord rec{alloc, verdicts, 0, force_max, std::move(ga_run.trace)};
    force_max = false;

    const bool all_equivalent =
        std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.equivalent(); });
    if (all_equivalent) {
      res.history.push_back(std::move(rec));
      res.status = CegisStatus::Solved;
      const QuantizedNetwork fresh = quantize_network(net, alloc);
      const std::vector<Verdict> again = verify_all(net, fresh.realization, props, vc, 1);
      res.reverified = std::all_of(again.begin(), again.end(), [](const Verdict& v) { return v.equivalent(); });
      if (!res.reverified) {
        throw VerificationError("re-verification of the final allocation disagreed");
      }
      res.wall_secs = elapsed();
      return res;
    }

    bool any_ce = false, reference_violates = false, unusable_unknown = false;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      const Verdict& v = verdicts[i];
      if (v.counterexample()) {
        any_ce = true;
        if (!props[i].contains(v.input) || predict(q.realization, v.input) == v.ref_class) {
          throw VerificationError("property " + std::to_string(i) +
                                  ": counter-example does not re-validate");
        }
        if (concrete_check(net, q.realization, v.input)) {
          reference_violates = true;
          continue;
        }
        if (!res.counter_examples.insert(v.input)) {
          throw VerificationError("property " + std::to_string(i) +
                                  ": verifier returned an already known counter-example");
        }
        ++rec.added;
      } else if (v.kind == VerdictKind::Unknown) {
        if (!v.input.empty() && !concrete_check(net, q.realization, v.input) &&
            res.counter_examples.insert(v.input)) {
          ++rec.added;
        } else {
          unusable_unknown = true;
        }
      }
    }
    res.history.push_back(std::move(rec));
    const std::size_t added = res.history.back().added;

    if (alloc.all_max()) {
      res.status = any_ce ? CegisStatus::Failed : CegisStatus::Timeout;
      res.message = any_ce ? "counter-example remains at the all-n_max allocation"
                           : "verification inconclusive at the all-n_max allocation";
      res.wall_secs = elapsed();
      return res;
    }
    if (added > 0) continue;
    if (reference_violates) {
      force_max = true;
      continue;
    }
    if (unusable_unknown) {
      res.status = CegisStatus::Timeout;
      res.message = "verification inconclusive and no usable witness";
      res.wall_secs = elapsed();
      return res;
    }
  }
  res.status = CegisStatus::Timeout;
  res.message = "iteration cap reached";
  res.wall_secs = elapsed();
  return res;
}

}  // namespace ceg4n
