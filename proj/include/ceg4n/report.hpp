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

#include <string>
#include <vector>

#include "ceg4n/cegis.hpp"
#include "ceg4n/io.hpp"
#include "ceg4n/search.hpp"
#include "ceg4n/verifier.hpp"

namespace ceg4n {

/// Doubles are emitted with round-trip precision; infinities (an empty
/// margin) become null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json verdict_to_json(const Verdict& v, double secs) {
  json j = {{"verdict", to_string(v.kind)},
            {"subproblems", v.subproblems},
            {"time", secs},
            {"best_margin", finite_or_null(v.best_margin)}};
  if (v.counterexample()) {
    j["counter_example"] = v.input;
    j["ref_class"] = v.ref_class;
    j["quant_class"] = v.quant_class;
  } else if (v.kind == VerdictKind::Unknown) {
    j["reason"] = v.reason;
    j["best_witness"] = v.input;
  }
  return j;
}

inline json ga_config_to_json(const GAConfig& g) {
  json j = {{"population", g.population_size},
            {"generations_per_layer", g.generations_per_layer},
            {"nmin", g.n_min},
            {"nmax", g.n_max},
            {"crossover_rate", g.crossover_rate},
            {"creep_rate", g.creep_rate},
            {"tournament_size", g.tournament_size},
            {"seed", g.seed}};
  j["mutation_rate"] = g.mutation_rate ? json(*g.mutation_rate) : json("1/L");
  return j;
}

inline json verifier_config_to_json(const VerifierConfig& v) {
  return {{"mode", to_string(v.mode)},
          {"min_box_width", v.min_box_width},
          {"max_subproblems", v.max_subproblems},
          {"max_corner_dims", v.max_corner_dims}};
}

/// Run report; columns follow the usual summary table (model, features,
/// properties, iterations, bits, status). Timing lives only in the "time" and
/// "total_time" fields.
inline json cegis_report(const std::string& model, std::size_t features,
                         const std::vector<EquivalenceProperty>& props, const CegisResult& r,
                         const GAConfig& ga, const VerifierConfig& vc, std::uint64_t seed) {
  json per = json::array();
  for (std::size_t i = 0; i < r.per_property_verdicts.size(); ++i) {
    json e = verdict_to_json(r.per_property_verdicts[i],
                             i < r.per_property_secs.size() ? r.per_property_secs[i] : 0.0);
    e["anchor"] = props[i].anchor;
    e["epsilon"] = props[i].epsilon;
    e["reference_class"] = props[i].reference_class;
    per.push_back(e);
  }
  json history = json::array();
  for (const auto& h : r.history) {
    json verdicts = json::array();
    for (const auto& v : h.verdicts) verdicts.push_back(to_string(v.kind));
    history.push_back({{"bits", h.alloc.bits()},
                       {"added_counter_examples", h.added},
                       {"forced_nmax", h.forced_max},
                       {"verdicts", verdicts}});
  }
  json j = {{"model", model},
            {"features", features},
            {"properties", props.size()},
            {"iterations", r.iterations},
            {"status", to_string(r.status)},
            {"counter_examples", r.counter_examples.inputs()},
            {"per_property", per},
            {"history", history},
            {"reverified", r.reverified},
            {"message", r.message},
            {"seed", seed},
            {"ga", ga_config_to_json(ga)},
            {"verifier", verifier_config_to_json(vc)},
            {"total_time", r.wall_secs}};
  j["bits_per_layer"] = r.allocation ? json(r.allocation->bits()) : json(nullptr);
  return j;
}

/// Copy of a report with every timing field removed, for reproducibility
/// comparisons.
inline json strip_timing(json j) {
  if (j.is_object()) {
    j.erase("time");
    j.erase("total_time");
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

}  // namespace ceg4n
