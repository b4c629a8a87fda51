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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ceg4n/network.hpp"
#include "ceg4n/quantizer.hpp"
#include "ceg4n/verifier.hpp"

namespace ceg4n {

struct GAConfig {
  int population_size = 5;
  int generations_per_layer = 110;
  int n_min = 2;
  int n_max = 52;
  /// Per-gene reset probability; unset means 1/L.
  std::optional<double> mutation_rate;
  double crossover_rate = 0.9;
  /// Probability that a gene not reset moves by +-1 instead.
  double creep_rate = 0.5;
  int tournament_size = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("GA population must be >= 2");
    if (generations_per_layer < 0) throw std::invalid_argument("negative generation count");
    if (n_min < kMinBits || n_min > n_max || n_max > kMaxSupportedBits) {
      throw std::invalid_argument("GA bit bounds must satisfy 2 <= n_min <= n_max <= 62");
    }
    if (mutation_rate && (*mutation_rate < 0.0 || *mutation_rate > 1.0)) {
      throw std::invalid_argument("mutation rate must be a probability");
    }
    if (crossover_rate < 0.0 || crossover_rate > 1.0) {
      throw std::invalid_argument("crossover rate must be a probability");
    }
    if (creep_rate < 0.0 || creep_rate > 1.0) {
      throw std::invalid_argument("creep rate must be a probability");
    }
    if (tournament_size < 1) throw std::invalid_argument("tournament size must be >= 1");
  }
};

/// Deduplicated, insertion-ordered set of concrete inputs.
class CounterExampleSet {
 public:
  CounterExampleSet() = default;

  /// Returns false when x was already present.
  bool insert(Vector x) {
    if (contains(x)) return false;
    inputs_.push_back(std::move(x));
    return true;
  }
  bool contains(const Vector& x) const {
    return std::find(inputs_.begin(), inputs_.end(), x) != inputs_.end();
  }
  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  const std::vector<Vector>& inputs() const { return inputs_; }
  auto begin() const { return inputs_.begin(); }
  auto end() const { return inputs_.end(); }

 private:
  std::vector<Vector> inputs_;
};

/// Number of counter-examples on which the quantized network's class differs
/// from the reference's.
inline std::size_t count_violations(const Network& net, const Network& realization,
                                    const CounterExampleSet& ces) {
  std::size_t bad = 0;
  for (const Vector& x : ces) bad += concrete_check(net, realization, x) ? 0 : 1;
  return bad;
}

inline bool feasible(const Network& net, const BitAllocation& alloc, const CounterExampleSet& ces) {
  if (ces.empty()) return true;
  const QuantizedNetwork q = quantize_network(net, alloc);
  return count_violations(net, q.realization, ces) == 0;
}

struct Candidate {
  BitAllocation alloc;
  int fitness = 0;  // sum of bits
  bool feasible = false;
  std::size_t violations = 0;
};

/// Feasible first, then fewer bits; infeasible ones by fewer violations.
/// Remaining ties fall back to the lexicographic order of the bit vectors.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) {
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
  } else {
    if (a.violations != b.violations) return a.violations < b.violations;
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
  }
  return a.alloc.bits() < b.alloc.bits();
}

struct GenerationStats {
  int generation = 0;
  int best_fitness = 0;
  bool best_feasible = false;
  int feasible_count = 0;
};

struct GAResult {
  BitAllocation best;
  std::size_t evaluations = 0;  // distinct allocations evaluated
  std::vector<GenerationStats> trace;
};

/// Genetic minimisation of sum(n_l) subject to Top-1 agreement on `ces`.
///
/// (mu + lambda) generations: each generation breeds population_size children
/// by binary tournament, uniform crossover and per-gene random reset, then
/// keeps the best population_size of parents and children. The initial
/// population holds the all-n_max allocation, which is assumed feasible, plus
/// random individuals. Runs L * generations_per_layer generations.
inline GAResult ga_search(const Network& net, const CounterExampleSet& ces, const GAConfig& cfg) {
  cfg.validate();
  const std::size_t L = net.num_layers();
  const double p_mut = cfg.mutation_rate.value_or(1.0 / static_cast<double>(L));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> gene(cfg.n_min, cfg.n_max);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::map<std::vector<int>, Candidate> cache;
  auto evaluate = [&](std::vector<int> bits) -> Candidate {
    auto it = cache.find(bits);
    if (it != cache.end()) return it->second;
    Candidate c;
    c.alloc = BitAllocation(bits, cfg.n_min, cfg.n_max);
    c.fitness = c.alloc.total();
    if (!ces.empty()) {
      const QuantizedNetwork q = quantize_network(net, c.alloc);
      c.violations = count_violations(net, q.realization, ces);
    }
    c.feasible = c.violations == 0;
    cache.emplace(std::move(bits), c);
    return c;
  };
  auto random_bits = [&] {
    std::vector<int> b(L);
    for (int& g : b) g = gene(rng);
    return b;
  };

  std::vector<Candidate> pop;
  pop.push_back(evaluate(std::vector<int>(L, cfg.n_max)));
  while (static_cast<int>(pop.size()) < cfg.population_size) pop.push_back(evaluate(random_bits()));
  std::sort(pop.begin(), pop.end(), better);

  auto tournament = [&]() -> const Candidate& {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (int t = 1; t < cfg.tournament_size; ++t) {
      const std::size_t other = pick(rng);
      if (better(pop[other], pop[best])) best = other;
    }
    return pop[best];
  };

  GAResult result;
  const int generations = static_cast<int>(L) * cfg.generations_per_layer;
  for (int g = 0; g < generations; ++g) {
    std::vector<Candidate> next = pop;
    for (int i = 0; i < cfg.population_size; ++i) {
      std::vector<int> child = tournament().alloc.bits();
      const std::vector<int>& mate = tournament().alloc.bits();
      if (coin(rng) < cfg.crossover_rate) {
        for (std::size_t k = 0; k < L; ++k) {
          if (coin(rng) < 0.5) child[k] = mate[k];
        }
      }
      for (int& v : child) {
        if (coin(rng) < p_mut) {
          v = gene(rng);
        } else if (coin(rng) < cfg.creep_rate) {
          v = std::clamp(v + (coin(rng) < 0.5 ? -1 : 1), cfg.n_min, cfg.n_max);
        }
      }
      next.push_back(evaluate(std::move(child)));
    }
    std::sort(next.begin(), next.end(), better);
    // drop duplicate genomes so the population keeps some diversity
    next.erase(std::unique(next.begin(), next.end(),
                           [](const Candidate& a, const Candidate& b) {
                             return a.alloc.bits() == b.alloc.bits();
                           }),
               next.end());
    while (static_cast<int>(next.size()) < cfg.population_size) {
      next.push_back(evaluate(random_bits()));
    }
    std::sort(next.begin(), next.end(), better);
    next.resize(static_cast<std::size_t>(cfg.population_size));
    pop = std::move(next);

    GenerationStats s;
    s.generation = g;
    s.best_fitness = pop.front().fitness;
    s.best_feasible = pop.front().feasible;
    for (const auto& c : pop) s.feasible_count += c.feasible ? 1 : 0;
    result.trace.push_back(s);
  }

  result.best = pop.front().feasible ? pop.front().alloc
                                     : BitAllocation(std::vector<int>(L, cfg.n_max), cfg.n_min, cfg.n_max);
  result.evaluations = cache.size();
  return result;
}

inline BitAllocation ga_minimize(const Network& net, const CounterExampleSet& ces, const GAConfig& cfg) {
  return ga_search(net, ces, cfg).best;
}

}  // namespace ceg4n
