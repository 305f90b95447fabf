// Copyright 2026 The HiRoPE Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hirope/code_hierarchy.hpp"
#include "hirope/config_io.hpp"
#include "hirope/dim_analyzer.hpp"
#include "hirope/hier.hpp"
#include "hirope/metrics.hpp"
#include "hirope/rope.hpp"

namespace py = pybind11;
using namespace hirope;

namespace {

HierPos make_pos(const std::vector<Position>& levels, Position global) { return HierPos{levels, global}; }

}  // namespace

PYBIND11_MODULE(_hirope, m) {
  m.doc() = "Hierarchical rotary position embeddings for source code";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def(
      "thetas", [](std::size_t head_dim, double base) {
        const RotaryConfig cfg(head_dim, base);
        return std::vector<double>(cfg.thetas().begin(), cfg.thetas().end());
      },
      py::arg("head_dim"), py::arg("base") = kDefaultRopeBase, "Per-pair angular frequencies base^(-2k/d).");

  m.def(
      "rope_score",
      [](const std::vector<double>& q, const std::vector<double>& k, Position pos_q, Position pos_k, double base) {
        return rope_score(q, k, pos_q, pos_k, RotaryConfig(q.size(), base));
      },
      py::arg("q"), py::arg("k"), py::arg("pos_q"), py::arg("pos_k"), py::arg("base") = kDefaultRopeBase,
      "Rotary attention score of q at pos_q against k at pos_k.");

  m.def(
      "hirope_score",
      [](const std::vector<double>& q, const std::vector<double>& k, const std::vector<Position>& levels_q,
         const std::vector<Position>& levels_k, const std::vector<std::size_t>& pair_counts, double base) {
        return hirope_score(q, k, make_pos(levels_q, levels_q.front()), make_pos(levels_k, levels_k.front()),
                            DimSplit(pair_counts), RotaryConfig(q.size(), base));
      },
      py::arg("q"), py::arg("k"), py::arg("levels_q"), py::arg("levels_k"), py::arg("pair_counts"),
      py::arg("base") = kDefaultRopeBase,
      "Hierarchical score; levels run coarse to fine and pair_counts gives the pairs owned by each level.");

  m.def(
      "windowed_score",
      [](const std::vector<double>& q, const std::vector<double>& k, const std::vector<Position>& levels_q,
         Position global_q, const std::vector<Position>& levels_k, Position global_k,
         const std::vector<std::size_t>& pair_counts, Position window, double base) {
        return windowed_score(q, k, make_pos(levels_q, global_q), make_pos(levels_k, global_k), DimSplit(pair_counts),
                              WindowConfig{window}, RotaryConfig(q.size(), base));
      },
      py::arg("q"), py::arg("k"), py::arg("levels_q"), py::arg("global_q"), py::arg("levels_k"), py::arg("global_k"),
      py::arg("pair_counts"), py::arg("window"), py::arg("base") = kDefaultRopeBase,
      "Hierarchical score with the window rule.");

  m.def(
      "reliable_split",
      [](double pretrain_len, std::size_t head_dim, double base) {
        const SplitReport r = reliable_split(pretrain_len, RotaryConfig(head_dim, base));
        py::dict d;
        d["pretrain_len"] = r.pretrain_len;
        d["head_dim"] = r.head_dim;
        d["base"] = r.base;
        d["fraction"] = r.fraction;
        d["split_dim"] = r.split_dim;
        d["reliable_pairs"] = r.reliable_pairs;
        return d;
      },
      py::arg("pretrain_len"), py::arg("head_dim"), py::arg("base") = kDefaultRopeBase,
      "Fraction and count of rotary components whose period fits in pretrain_len.");

  m.def(
      "segments",
      [](const std::string& source, const std::string& strategy) {
        const auto spans = simple_tokenize(source);
        const auto result = parse_segments(source, parse_segmentation_strategy(strategy), spans);
        py::list out;
        for (const auto& s : result.segments) {
          out.append(py::make_tuple(to_string(s.kind), s.start_byte, s.end_byte, s.ordinal));
        }
        return py::make_tuple(out, result.fallback);
      },
      py::arg("source"), py::arg("strategy") = "function",
      "Segments as (kind, start_byte, end_byte, ordinal) plus the fallback flag.");

  m.def(
      "hier_positions",
      [](const std::string& source, const std::string& strategy) {
        const auto spans = simple_tokenize(source);
        const auto segs = parse_segments(source, parse_segmentation_strategy(strategy), spans).segments;
        py::list out;
        for (const auto& p : assign_hier_positions(spans, segs)) out.append(py::make_tuple(p.levels[0], p.levels[1], p.global));
        return out;
      },
      py::arg("source"), py::arg("strategy") = "function",
      "Per-token (segment, token_in_segment, global) positions.");

  m.def(
      "extract_symbols",
      [](const std::string& source) {
        const SymbolSet s = extract_symbols(source);
        return py::make_tuple(s.names, s.locations);
      },
      py::arg("source"), "Defined function and class names with the byte offset of each first definition.");

  m.def("edit_similarity", &edit_similarity, py::arg("pred"), py::arg("gold"));
  m.def(
      "recall",
      [](const std::vector<std::string>& pred, const std::vector<std::string>& gold) { return recall(pred, gold); },
      py::arg("pred"), py::arg("gold"));
  m.def(
      "parse_model_output_symbols", [](const std::string& raw) { return parse_model_output_symbols(raw); },
      py::arg("raw"));
}
