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

// ceg4n: command-line driver for training fixtures, bit-width search with
// equivalence proofs, verification of stored models, GPFQ and accuracy tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ceg4n/ceg4n.hpp"

namespace fs = std::filesystem;
using namespace ceg4n;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFailed = 2;
constexpr int kExitTimeout = 3;

/// Expands `--config file.json` into command-line flags. Keys mirror the long
/// flag names; anything also given on the command line wins.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> out;
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!config) return out;
  const json j = read_json_file(*config);
  if (!j.is_object()) throw ParseError("config file must be a JSON object");
  auto given = [&](const std::string& flag) {
    for (const auto& a : out) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      extra.push_back(flag);
      for (const auto& v : value) extra.push_back(text(v));
    } else {
      extra.push_back(flag);
      extra.push_back(text(value));
    }
  }
  // subcommand first, then config-derived flags, then the rest
  if (!out.empty()) out.insert(out.begin() + 1, extra.begin(), extra.end());
  return out;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw Error(std::string(what) + " file not found: " + path);
}

VerifyMode parse_mode(const std::string& s) {
  if (s == "anchor") return VerifyMode::AnchorLabel;
  if (s == "pairwise") return VerifyMode::PointwisePair;
  throw Error("unknown --mode '" + s + "' (expected anchor|pairwise)");
}

std::string format_pct(double fraction) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << 100.0 * fraction;
  return ss.str();
}

struct TrainArgs {
  std::string dataset, out;
  std::vector<std::size_t> hidden{3};
  TrainConfig cfg;
  bool no_header = false;
};

int cmd_train(const TrainArgs& a) {
  require_file(a.dataset, "dataset");
  const Dataset data = load_dataset(a.dataset, !a.no_header);
  const TrainResult r = train_mlp_detailed(data, a.hidden, a.cfg);
  save_network(a.out, r.network);
  std::cout << "loss " << r.final_loss << "  train accuracy " << format_pct(accuracy(r.network, data))
            << "%\n";
  return kExitOk;
}

struct AnchorArgs {
  std::string model, dataset, out;
  AnchorSelection sel;
  bool no_header = false;
};

int cmd_anchors(const AnchorArgs& a) {
  require_file(a.model, "model");
  require_file(a.dataset, "dataset");
  const Network net = load_network(a.model);
  const Dataset data = load_dataset(a.dataset, !a.no_header);
  const auto anchors = select_class_anchors(net, data, a.sel);
  write_json_file(a.out, anchors_to_json(anchors));
  for (const auto& s : anchors) {
    std::cout << "class " << predict(net, s.input) << "  epsilon " << s.epsilon << '\n';
  }
  return kExitOk;
}

struct QuantizeArgs {
  std::string model, anchors, dataset, out = "ceg4n_out";
  std::optional<double> eps;
  std::size_t init_ces = 0;
  std::string mode = "anchor";
  GAConfig ga;
  VerifierConfig vc;
  CegisConfig cc;
  std::uint64_t seed = 0;
  bool no_header = false;
};

int cmd_quantize(QuantizeArgs a) {
  require_file(a.model, "model");
  require_file(a.anchors, "anchors");
  if (a.init_ces > 0) require_file(a.dataset, "dataset");
  a.vc.mode = parse_mode(a.mode);
  a.ga.seed = a.seed;

  const Network net = load_network(a.model);
  const auto entries = load_anchors(a.anchors, a.eps);
  const auto props = build_properties(net, entries);
  CounterExampleSet initial;
  if (a.init_ces > 0) {
    const Dataset data = load_dataset(a.dataset, !a.no_header);
    initial = seed_counter_examples(data, a.init_ces, a.seed);
    if (initial.size() < a.init_ces) {
      std::cerr << "note: " << a.init_ces - initial.size() << " duplicate samples dropped\n";
    }
  } else {
    for (const auto& p : props) initial.insert(p.anchor);
  }

  const CegisResult r = run_ceg4n(net, props, initial, a.ga, a.vc, a.cc);

  fs::create_directories(a.out);
  json report = cegis_report(a.model, net.input_dim(), props, r, a.ga, a.vc, a.seed);
  report["anchors"] = a.anchors;
  write_json_file((fs::path(a.out) / "report.json").string(), report);
  if (r.allocation) {
    json q = quantized_to_json(quantize_network(net, *r.allocation));
    q["seed"] = a.seed;
    write_json_file((fs::path(a.out) / "quantized.json").string(), q);
  }
  std::ofstream trace(fs::path(a.out) / "ga_trace.csv");
  trace << "iteration,generation,best_fitness,best_feasible,feasible_count\n";
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    for (const auto& g : r.history[i].ga_trace) {
      trace << i + 1 << ',' << g.generation << ',' << g.best_fitness << ',' << (g.best_feasible ? 1 : 0)
            << ',' << g.feasible_count << '\n';
    }
  }

  std::cout << "status " << to_string(r.status) << "  iterations " << r.iterations << "  bits";
  if (r.allocation) {
    for (int b : r.allocation->bits()) std::cout << ' ' << b;
  }
  std::cout << "  counter-examples " << r.counter_examples.size() << '\n';
  if (!r.message.empty()) std::cout << r.message << '\n';
  switch (r.status) {
    case CegisStatus::Solved: return kExitOk;
    case CegisStatus::Failed: return kExitFailed;
    case CegisStatus::Timeout: return kExitTimeout;
  }
  return kExitError;
}

struct VerifyArgs {
  std::string model, quantized, anchors, out;
  std::optional<double> eps;
  std::string mode = "anchor";
  VerifierConfig vc;
  std::size_t threads = 0;
};

int cmd_verify(VerifyArgs a) {
  require_file(a.model, "model");
  require_file(a.quantized, "quantized model");
  require_file(a.anchors, "anchors");
  a.vc.mode = parse_mode(a.mode);
  const Network ref = load_network(a.model);
  const QuantizedNetwork q = quantized_from_json(read_json_file(a.quantized));
  if (q.realization.input_dim() != ref.input_dim() || q.realization.output_dim() != ref.output_dim() ||
      q.realization.num_layers() != ref.num_layers()) {
    throw ParseError("quantized model shape does not match the reference");
  }
  const auto props = build_properties(ref, load_anchors(a.anchors, a.eps));
  std::vector<double> secs;
  const auto verdicts = verify_all(ref, q.realization, props, a.vc, a.threads, std::nullopt, &secs);

  json per = json::array();
  bool all_eq = true, any_ce = false;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    per.push_back(verdict_to_json(verdicts[i], secs[i]));
    all_eq = all_eq && verdicts[i].equivalent();
    any_ce = any_ce || verdicts[i].counterexample();
    std::cout << "property " << i << ": " << to_string(verdicts[i].kind);
    if (verdicts[i].counterexample()) {
      std::cout << " at";
      for (double v : verdicts[i].input) std::cout << ' ' << std::setprecision(17) << v;
    }
    std::cout << '\n';
  }
  json report = {{"model", a.model},
                 {"quantized", a.quantized},
                 {"bits_per_layer", q.bits()},
                 {"verifier", verifier_config_to_json(a.vc)},
                 {"per_property", per}};
  if (!a.out.empty()) write_json_file(a.out, report);
  if (all_eq) return kExitOk;
  return any_ce ? kExitFailed : kExitTimeout;
}

struct EvalArgs {
  std::string model, dataset, out;
  std::vector<std::string> quantized;
  bool no_header = false;
};

int cmd_eval(const EvalArgs& a) {
  require_file(a.model, "model");
  require_file(a.dataset, "dataset");
  const Network ref = load_network(a.model);
  const Dataset data = load_dataset(a.dataset, !a.no_header);
  const double ref_acc = accuracy(ref, data);
  json rows = json::array();
  std::cout << std::left << std::setw(40) << "Model" << std::setw(14) << "Ref Acc (%)" << std::setw(16)
            << "Quant Acc (%)" << "Acc Drop (%)\n";
  auto emit = [&](const std::string& name, const Network& net) {
    const double acc = accuracy(net, data);
    const double drop = 100.0 * ref_acc - 100.0 * acc;
    std::cout << std::setw(40) << name << std::setw(14) << format_pct(ref_acc) << std::setw(16)
              << format_pct(acc) << std::fixed << std::setprecision(2) << drop << '\n';
    rows.push_back({{"model", name}, {"ref_acc", 100.0 * ref_acc}, {"quant_acc", 100.0 * acc}, {"acc_drop", drop}});
  };
  if (a.quantized.empty()) emit(a.model, ref);
  for (const auto& path : a.quantized) {
    require_file(path, "model");
    const Network q = load_network(path);
    require_dims(q.input_dim(), ref.input_dim(), path.c_str());
    emit(path, q);
  }
  if (!a.out.empty()) write_json_file(a.out, {{"dataset", a.dataset}, {"rows", rows}});
  return kExitOk;
}

struct GpfqArgs {
  std::string model, dataset, out;
  std::vector<int> bits{4};
  bool no_header = false;
};

int cmd_gpfq(const GpfqArgs& a) {
  require_file(a.model, "model");
  require_file(a.dataset, "dataset");
  const Network net = load_network(a.model);
  const Dataset calib = load_dataset(a.dataset, !a.no_header);
  const QuantizedNetwork q =
      a.bits.size() == 1 ? gpfq_quantize(net, calib, a.bits[0])
                         : gpfq_quantize(net, calib, BitAllocation(a.bits, kMinBits, kMaxSupportedBits));
  write_json_file(a.out, quantized_to_json(q));
  std::cout << "gpfq bits";
  for (int b : q.bits()) std::cout << ' ' << b;
  std::cout << ": calibration accuracy " << format_pct(accuracy(q.realization, calib))
            << "% (reference " << format_pct(accuracy(net, calib)) << "%)\n";
  return kExitOk;
}

void add_ga_flags(CLI::App* c, GAConfig& ga) {
  c->add_option("--nmin", ga.n_min, "Lowest bit width")->capture_default_str();
  c->add_option("--nmax", ga.n_max, "Highest bit width")->capture_default_str();
  c->add_option("--generations-per-layer", ga.generations_per_layer)->capture_default_str();
  c->add_option("--population", ga.population_size)->capture_default_str();
  c->add_option("--crossover-rate", ga.crossover_rate)->capture_default_str();
  c->add_option("--creep-rate", ga.creep_rate, "Probability of a +-1 step on genes not reset")
      ->capture_default_str();
  c->add_option("--mutation-rate", ga.mutation_rate, "Per-gene reset probability (default 1/L)");
}

void add_verifier_flags(CLI::App* c, VerifierConfig& vc, std::string& mode) {
  c->add_option("--mode", mode, "anchor|pairwise")->capture_default_str();
  c->add_option("--min-box-width", vc.min_box_width, "0 selects 1e-6 * epsilon")->capture_default_str();
  c->add_option("--max-subproblems", vc.max_subproblems)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-width minimisation with Top-1 equivalence proofs for ReLU classifiers"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a ReLU MLP fixture on a CSV dataset");
  c_train->add_option("--dataset", train.dataset)->required();
  c_train->add_option("--hidden", train.hidden, "Hidden layer widths")->capture_default_str();
  c_train->add_option("--epochs", train.cfg.epochs)->capture_default_str();
  c_train->add_option("--lr", train.cfg.learning_rate)->capture_default_str();
  c_train->add_option("--momentum", train.cfg.momentum)->capture_default_str();
  c_train->add_option("--seed", train.cfg.seed)->capture_default_str();
  c_train->add_option("--out", train.out)->required();
  c_train->add_flag("--no-header", train.no_header, "CSV has no header row");

  AnchorArgs anchors;
  auto* c_anchors = app.add_subcommand("anchors", "Pick one robust anchor per class");
  c_anchors->add_option("--model", anchors.model)->required();
  c_anchors->add_option("--dataset", anchors.dataset)->required();
  c_anchors->add_option("--fraction", anchors.sel.radius_fraction, "epsilon / certified radius")
      ->capture_default_str();
  c_anchors->add_option("--max-eps", anchors.sel.max_epsilon)->capture_default_str();
  c_anchors->add_option("--out", anchors.out)->required();
  c_anchors->add_flag("--no-header", anchors.no_header);

  QuantizeArgs quant;
  auto* c_quant = app.add_subcommand("quantize", "Search minimal per-layer bits with equivalence proofs");
  c_quant->add_option("--model", quant.model)->required();
  c_quant->add_option("--anchors", quant.anchors)->required();
  c_quant->add_option("--dataset", quant.dataset, "Source of initial counter-examples");
  c_quant->add_option("--init-ces", quant.init_ces, "Draw this many initial counter-examples from --dataset "
                                                    "(0: use the anchors)")
      ->capture_default_str();
  c_quant->add_option("--eps", quant.eps, "Override every anchor's epsilon");
  c_quant->add_option("--seed", quant.seed)->capture_default_str();
  c_quant->add_option("--budget-secs", quant.cc.budget_secs, "Wall-time budget (0: none)")->capture_default_str();
  c_quant->add_option("--max-iterations", quant.cc.max_iterations)->capture_default_str();
  c_quant->add_option("--threads", quant.cc.threads, "Verifier threads (0: all cores)")->capture_default_str();
  c_quant->add_option("--out", quant.out, "Output directory")->capture_default_str();
  c_quant->add_flag("--no-header", quant.no_header);
  add_ga_flags(c_quant, quant.ga);
  add_verifier_flags(c_quant, quant.vc, quant.mode);

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "Check stored networks against anchor properties");
  c_verify->add_option("--model", verify.model)->required();
  c_verify->add_option("--quantized", verify.quantized)->required();
  c_verify->add_option("--anchors", verify.anchors)->required();
  c_verify->add_option("--eps", verify.eps);
  c_verify->add_option("--threads", verify.threads)->capture_default_str();
  c_verify->add_option("--out", verify.out, "Verdict report JSON");
  add_verifier_flags(c_verify, verify.vc, verify.mode);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Top-1 accuracy table of quantized models");
  c_eval->add_option("--model", eval.model, "Reference model")->required();
  c_eval->add_option("--quantized", eval.quantized, "Models to compare")->expected(0, -1);
  c_eval->add_option("--dataset", eval.dataset)->required();
  c_eval->add_option("--out", eval.out, "Table JSON");
  c_eval->add_flag("--no-header", eval.no_header);

  GpfqArgs gpfq;
  auto* c_gpfq = app.add_subcommand("gpfq", "Greedy path-following quantization baseline");
  c_gpfq->add_option("--model", gpfq.model)->required();
  c_gpfq->add_option("--dataset", gpfq.dataset, "Calibration CSV")->required();
  c_gpfq->add_option("--bits", gpfq.bits, "One width for every layer, or one per layer")->capture_default_str();
  c_gpfq->add_option("--out", gpfq.out)->required();
  c_gpfq->add_flag("--no-header", gpfq.no_header);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (*c_train) return cmd_train(train);
    if (*c_anchors) return cmd_anchors(anchors);
    if (*c_quant) return cmd_quantize(quant);
    if (*c_verify) return cmd_verify(verify);
    if (*c_eval) return cmd_eval(eval);
    if (*c_gpfq) return cmd_gpfq(gpfq);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
