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
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ceg4n/errors.hpp"
#include "ceg4n/network.hpp"
#include "ceg4n/quantizer.hpp"
#include "ceg4n/verifier.hpp"

namespace ceg4n {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline Activation parse_activation(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw ParseError("unknown activation '" + s + "'");
}

/// Model schema: {"input_dim", "layers": [{"weights", "bias", "activation"}]}.
/// Unknown keys (e.g. the quantization extras) are ignored.
inline Network network_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ParseError("model must be a JSON object");
    if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty()) {
      throw ParseError("model needs a non-empty \"layers\" list");
    }
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    std::vector<Layer> layers;
    for (const json& lj : j.at("layers")) {
      const auto rows = lj.at("weights").get<std::vector<std::vector<double>>>();
      auto bias = lj.at("bias").get<std::vector<double>>();
      const Activation act = lj.contains("activation") ? parse_activation(lj.at("activation"))
                                                        : Activation::ReLU;
      try {
        layers.push_back(Layer::from_rows(rows, std::move(bias), act));
      } catch (const ShapeError& e) {
        throw ShapeError("layer " + std::to_string(layers.size() + 1) + ": " + e.what());
      }
    }
    return Network(input_dim, std::move(layers));
  } catch (const json::exception& e) {
    throw ParseError(std::string("model schema: ") + e.what());
  }
}

inline json network_to_json(const Network& net) {
  json layers = json::array();
  for (const Layer& l : net.layers()) {
    json rows = json::array();
    for (std::size_t r = 0; r < l.out; ++r) {
      auto row = l.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    layers.push_back({{"weights", rows}, {"bias", l.bias}, {"activation", to_string(l.activation)}});
  }
  return {{"input_dim", net.input_dim()}, {"layers", layers}};
}

inline Network load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

inline void save_network(const std::string& path, const Network& net) {
  write_json_file(path, network_to_json(net));
}

/// Model schema plus top-level "bits" and "scales" and per-layer "q_weights"
/// and "q_bias". The float "weights"/"bias" hold the realization exactly.
inline json quantized_to_json(const QuantizedNetwork& q) {
  json j = network_to_json(q.realization);
  json scales = json::array();
  for (std::size_t i = 0; i < q.layers.size(); ++i) {
    const QuantizedLayer& ql = q.layers[i];
    const Layer& l = q.realization.layer(i);
    json rows = json::array();
    for (std::size_t r = 0; r < l.out; ++r) {
      rows.push_back(std::vector<std::int64_t>(ql.q_weights.begin() + static_cast<std::ptrdiff_t>(r * l.in),
                                               ql.q_weights.begin() + static_cast<std::ptrdiff_t>((r + 1) * l.in)));
    }
    j["layers"][i]["q_weights"] = rows;
    j["layers"][i]["q_bias"] = ql.q_bias;
    scales.push_back(ql.scale);
  }
  j["bits"] = q.bits();
  j["scales"] = scales;
  return j;
}

/// Reads a quantized model and checks that the float weights equal
/// scale * integer grid and that every integer fits its bit width.
inline QuantizedNetwork quantized_from_json(const json& j) {
  Network real = network_from_json(j);
  try {
    const auto bits = j.at("bits").get<std::vector<int>>();
    const auto scales = j.at("scales").get<std::vector<double>>();
    require_dims(bits.size(), real.num_layers(), "bits");
    require_dims(scales.size(), real.num_layers(), "scales");
    QuantizedNetwork q;
    for (std::size_t i = 0; i < real.num_layers(); ++i) {
      const json& lj = j.at("layers").at(i);
      QuantizedLayer ql;
      ql.bits = bits[i];
      ql.scale = scales[i];
      require_bits(ql.bits);
      for (const auto& row : lj.at("q_weights").get<std::vector<std::vector<std::int64_t>>>()) {
        ql.q_weights.insert(ql.q_weights.end(), row.begin(), row.end());
      }
      ql.q_bias = lj.at("q_bias").get<std::vector<std::int64_t>>();
      const Layer& l = real.layer(i);
      require_dims(ql.q_weights.size(), l.weights.size(), "q_weights");
      require_dims(ql.q_bias.size(), l.bias.size(), "q_bias");
      auto in_range = [&](std::int64_t v) { return v >= grid_min(ql.bits) && v <= grid_max(ql.bits); };
      auto exact = [&](double w, std::int64_t v) { return w == ql.scale * static_cast<double>(v); };
      for (std::size_t k = 0; k < l.weights.size(); ++k) {
        if (!in_range(ql.q_weights[k]) || !exact(l.weights[k], ql.q_weights[k])) {
          throw ParseError("layer " + std::to_string(i + 1) + ": weights are not scale * q_weights");
        }
      }
      for (std::size_t k = 0; k < l.bias.size(); ++k) {
        if (!in_range(ql.q_bias[k]) || !exact(l.bias[k], ql.q_bias[k])) {
          throw ParseError("layer " + std::to_string(i + 1) + ": bias is not scale * q_bias");
        }
      }
      q.layers.push_back(std::move(ql));
    }
    q.realization = std::move(real);
    return q;
  } catch (const json::exception& e) {
    throw ParseError(std::string("quantized model schema: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("quantized model: ") + e.what());
  }
}

/// CSV with features followed by an integer label in the last column.
inline Dataset parse_dataset(std::istream& in, bool has_header, const std::string& name = "dataset") {
  std::vector<Vector> features;
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t lineno = 0;
  bool skip = has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (skip) {
      skip = false;
      continue;
    }
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(name + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (cells.size() < 2) throw ParseError(name + ":" + std::to_string(lineno) + ": need features and a label");
    const double label = cells.back();
    if (label < 0 || label != static_cast<double>(static_cast<std::size_t>(label))) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": label must be a non-negative integer");
    }
    cells.pop_back();
    features.push_back(std::move(cells));
    labels.push_back(static_cast<std::size_t>(label));
  }
  return Dataset(std::move(features), std::move(labels));
}

inline Dataset load_dataset(const std::string& path, bool has_header = true) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_dataset(in, has_header, path);
}

/// Anchors file: [{"input": [...], "epsilon": e, "free_mask": [...] | "all"}].
/// `epsilon_override`, when set, replaces every entry's epsilon (and supplies
/// it where the entry has none).
inline std::vector<AnchorEntry> anchors_from_json(const json& j,
                                                 std::optional<double> epsilon_override = std::nullopt) {
  try {
    if (!j.is_array()) throw ParseError("anchors file must be a JSON list");
    std::vector<AnchorEntry> out;
    for (const json& a : j) {
      AnchorEntry s;
      s.input = a.at("input").get<Vector>();
      if (epsilon_override) {
        s.epsilon = *epsilon_override;
      } else if (a.contains("epsilon")) {
        s.epsilon = a.at("epsilon").get<double>();
      } else {
        throw ParseError("anchor without epsilon and no --eps given");
      }
      if (a.contains("free_mask") && !(a.at("free_mask").is_string() && a.at("free_mask") == "all")) {
        s.free_mask = a.at("free_mask").get<std::vector<std::size_t>>();
      }
      out.push_back(std::move(s));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("anchors schema: ") + e.what());
  }
}

inline json anchors_to_json(const std::vector<AnchorEntry>& anchors) {
  json arr = json::array();
  for (const auto& a : anchors) {
    json e = {{"input", a.input}, {"epsilon", a.epsilon}};
    if (a.free_mask) {
      e["free_mask"] = *a.free_mask;
    } else {
      e["free_mask"] = "all";
    }
    arr.push_back(e);
  }
  return arr;
}

inline std::vector<AnchorEntry> load_anchors(const std::string& path,
                                            std::optional<double> epsilon_override = std::nullopt) {
  return anchors_from_json(read_json_file(path), epsilon_override);
}

}  // namespace ceg4n
