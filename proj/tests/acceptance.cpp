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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "test_support.hpp"

using namespace ceg4n;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_secs;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ulp_of(double x) { return std::nextafter(std::fabs(x), INFINITY) - std::fabs(x); }

Outcome quantization_math() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  std::uniform_real_distribution<double> log_mag(-4.0, 4.0);
  const int widths[] = {2, 4, 8, 16, 52};
  std::size_t tensors = 0, bound_fail = 0, range_fail = 0;
  double worst_stored = 0.0;
  for (int n : widths) {
    for (int t = 0; t < 2000; ++t, ++tensors) {
      const double c = std::pow(10.0, log_mag(rng));
      Vector a = support::random_point(rng, len(rng), -c, c);
      const QuantizedTensor q = quantize_tensor(a, n);
      const Vector back = dequantize(q.values, q.scale);
      for (std::size_t i = 0; i < a.size(); ++i) {
        // s * q - a with one rounding; the stored double s * q is reported apart.
        // The scale is a rounded quotient, which moves the outermost grid point
        // by at most c * 2^-53, hence the one-ulp allowance.
        const double exact = std::fma(q.scale, static_cast<double>(q.values[i]), -a[i]);
        if (std::fabs(exact) > 0.5 * q.scale + ulp_of(clip_bound(a))) ++bound_fail;
        worst_stored = std::max(worst_stored, std::fabs(back[i] - a[i]) / q.scale);
        if (q.values[i] < grid_min(n) || q.values[i] > grid_max(n)) ++range_fail;
      }
      // range safety also under a grid far too fine for the data
      for (auto v : quantize_with_scale(a, q.scale * 1e-3, n)) {
        if (v < grid_min(n) || v > grid_max(n)) ++range_fail;
      }
    }
  }
  return {bound_fail == 0 && range_fail == 0,
          std::to_string(tensors) + " tensors, round-trip violations " + std::to_string(bound_fail) +
              ", range violations " + std::to_string(range_fail) + ", worst stored-double error " +
              fmt(worst_stored, 4) + " steps"};
}

Outcome verifier_vs_grid() {
  std::mt19937_64 rng(202);
  std::size_t contradictions = 0, bad_ce = 0, eq = 0, ce = 0, unknown = 0, cases = 0;
  for (int net_i = 0; net_i < 200; ++net_i) {
    const std::size_t outputs = 2 + net_i % 2;
    const bool two_layers = net_i % 4 != 0;
    const std::size_t hidden = 2 + static_cast<std::size_t>(net_i) % (7 - outputs);
    Network ref = two_layers ? support::random_network(rng, 2, {hidden}, outputs)
                             : support::random_network(rng, 2, {}, outputs);
    const Network quant = quantize_network(ref, BitAllocation::uniform(ref.num_layers(), 3)).realization;
    for (double eps : {0.01, 0.1}) {
      ++cases;
      const auto p = make_property(ref, AnchorEntry{support::random_point(rng, 2), eps, std::nullopt}, DomainClip{});
      const Verdict v = check_property(ref, quant, p);
      const auto grid = support::grid_violation(ref, quant, p, 1e-3);
      if (v.equivalent()) {
        ++eq;
        if (grid) ++contradictions;
      } else if (v.counterexample()) {
        ++ce;
        if (!p.contains(v.input) || predict(quant, v.input) == p.reference_class) ++bad_ce;
      } else {
        ++unknown;
      }
    }
  }
  return {contradictions == 0 && bad_ce == 0,
          std::to_string(cases) + " cases (" + std::to_string(eq) + " equivalent, " + std::to_string(ce) +
              " counter-example, " + std::to_string(unknown) + " unknown), contradictions " +
              std::to_string(contradictions) + ", invalid counter-examples " + std::to_string(bad_ce)};
}

Outcome ga_vs_brute_force() {
  int within = 0, exact = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    const auto toy = support::toy_problem(5000 + r);
    const int opt = support::brute_force_optimum(toy.net, toy.ces, 2, 8);
    GAConfig cfg;
    cfg.n_min = 2;
    cfg.n_max = 8;
    cfg.seed = static_cast<std::uint64_t>(r);
    const BitAllocation got = ga_minimize(toy.net, toy.ces, cfg);
    const bool ok = feasible(toy.net, got, toy.ces) && got.total() <= opt + 1;
    within += ok ? 1 : 0;
    exact += feasible(toy.net, got, toy.ces) && got.total() == opt ? 1 : 0;
  }
  return {within * 10 >= runs * 9, std::to_string(within) + "/" + std::to_string(runs) + " within optimum+1 (" +
                                       std::to_string(exact) + " exact)"};
}

struct EndToEnd {
  std::string model;
  std::string dataset;
  CegisResult result;
  double secs = 0.0;
};

const std::vector<std::pair<std::string, std::string>> kFixtures{
    {"iris_3", "iris"}, {"seeds_2", "seeds"}, {"seeds_15", "seeds"}};

const std::vector<EndToEnd>& end_to_end_runs() {
  static const std::vector<EndToEnd> runs = [] {
    std::vector<EndToEnd> out;
    for (const auto& [model, data] : kFixtures) {
      const Network net = support::fixture(model);
      const auto props = build_properties(net, load_anchors(support::source_path("data/anchors/" + model + ".json")));
      CounterExampleSet initial;
      for (const auto& p : props) initial.insert(p.anchor);
      GAConfig ga;
      ga.seed = 2022;
      const auto t0 = std::chrono::steady_clock::now();
      CegisResult r = run_ceg4n(net, props, initial, ga, {});
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.push_back({model, data, std::move(r), secs});
    }
    return out;
  }();
  return runs;
}

std::string bits_text(const std::optional<BitAllocation>& a) {
  if (!a) return "-";
  std::string s;
  for (int b : a->bits()) s += (s.empty() ? "" : ",") + std::to_string(b);
  return "(" + s + ")";
}

Outcome end_to_end() {
  bool pass = true;
  std::ostringstream d;
  for (const auto& e : end_to_end_runs()) {
    const bool small = e.result.allocation &&
                       std::all_of(e.result.allocation->bits().begin(), e.result.allocation->bits().end(),
                                   [](int b) { return b <= 16; });
    const bool ok = e.result.status == CegisStatus::Solved && e.result.reverified && small && e.secs < 600.0;
    pass = pass && ok;
    d << e.model << ' ' << to_string(e.result.status) << " bits " << bits_text(e.result.allocation) << " iters "
      << e.result.iterations << ' ' << fmt(e.secs, 1) << "s" << (ok ? "" : " <- fails") << "; ";
  }
  return {pass, d.str()};
}

Outcome accuracy_pattern() {
  bool pass = true;
  std::ostringstream d;
  for (const auto& e : end_to_end_runs()) {
    if (!e.result.allocation) {
      d << e.model << " no allocation; ";
      pass = false;
      continue;
    }
    const Network net = support::fixture(e.model);
    const Dataset test = support::dataset(e.dataset + "_test");
    const Dataset calib = support::dataset(e.dataset + "_train");
    const double ref = accuracy(net, test);
    const double ceg = accuracy(quantize_network(net, *e.result.allocation).realization, test);
    const double gp = accuracy(gpfq_quantize(net, calib, *e.result.allocation).realization, test);
    const double ceg_drop = 100.0 * (ref - ceg), gp_drop = 100.0 * (ref - gp);
    const bool ok = ceg_drop <= 15.0 && ceg_drop < gp_drop;
    pass = pass && ok;
    d << e.model << " bits " << bits_text(e.result.allocation) << " drop ceg4n " << fmt(ceg_drop) << " gpfq "
      << fmt(gp_drop) << (ok ? "" : " <- fails") << "; ";
  }
  return {pass, d.str()};
}

Outcome failure_semantics() {
  // the anchor sits on a boundary every allocation shares, so no quantization
  // can make the ball a single class
  const Network net = support::symmetric_boundary_net();
  const auto prop = make_property(net, support::symmetric_boundary_anchor(), DomainClip{});
  GAConfig ga;
  ga.seed = 2022;
  const CegisResult r = run_ceg4n(net, {prop}, {}, ga, {});
  bool ok = r.status == CegisStatus::Failed && r.allocation && r.allocation->all_max() &&
            r.per_property_verdicts.size() == 1 && r.per_property_verdicts[0].counterexample();
  if (ok) {
    const Vector& x = r.per_property_verdicts[0].input;
    const Network top = quantize_network(net, *r.allocation).realization;
    ok = prop.contains(x) && predict(top, x) != prop.reference_class;
  }
  return {ok, std::string("status ") + to_string(r.status) + " at " + bits_text(r.allocation) + " after " +
                  std::to_string(r.iterations) + " iterations"};
}

Outcome determinism() {
  const fs::path out = support::scratch_dir("acceptance_determinism");
  bool pass = true;
  std::ostringstream d;
  for (const auto& [model, data] : kFixtures) {
    const std::string args = "quantize --model " + support::source_path("data/models/" + model + ".json") +
                             " --anchors " + support::source_path("data/anchors/" + model + ".json") +
                             " --seed 2022 --out ";
    const fs::path a = out / (model + "_a"), b = out / (model + "_b");
    const int ra = support::run_cli(args + a.string());
    const int rb = support::run_cli(args + b.string());
    const json ja = strip_timing(read_json_file((a / "report.json").string()));
    const json jb = strip_timing(read_json_file((b / "report.json").string()));
    const bool same = ra == rb && ja["bits_per_layer"] == jb["bits_per_layer"] &&
                      ja["counter_examples"] == jb["counter_examples"] && ja["per_property"] == jb["per_property"] &&
                      ja == jb;
    pass = pass && same;
    d << model << (same ? " identical" : " differs") << "; ";
  }
  return {pass, d.str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "quantization math", 5.0, quantization_math},
      {2, "verifier soundness vs grid oracle", 600.0, verifier_vs_grid},
      {3, "GA quality vs brute force", 300.0, ga_vs_brute_force},
      {4, "end-to-end on iris_3, seeds_2, seeds_15", 1800.0, end_to_end},
      {5, "accuracy drop vs GPFQ at matched bits", 1800.0, accuracy_pattern},
      {6, "failure semantics at a boundary anchor", 60.0, failure_semantics},
      {7, "determinism of repeated quantize runs", 1800.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_secs) {
      o.pass = false;
      o.detail += " over the " + fmt(c.limit_secs, 0) + "s limit";
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.id << ": " << c.name << " -- " << o.detail
              << " (" << fmt(secs, 1) << "s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
