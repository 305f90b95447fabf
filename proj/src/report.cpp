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

#include "hirope/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace hirope {

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string ReportTable::to_tsv() const {
  std::ostringstream out;
  for (const auto& n : notes) out << "# " << n << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string ReportTable::to_aligned() const {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size() && i < width.size(); ++i) width[i] = std::max(width[i], cells[i].size());
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  std::ostringstream out;
  for (const auto& n : notes) out << "# " << n << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    std::string text;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += "  ";
      text += cells[i];
      if (i + 1 < cells.size() && i < width.size()) text.append(width[i] - cells[i].size(), ' ');
    }
    out << text << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

ReportTable split_report_table(const SplitReport& r, int decimals) {
  ReportTable t;
  t.notes.push_back("reliable pairs have period < pretrain_len; split_dim counts real components");
  t.header = {"pretrain_len", "head_dim", "base", "fraction", "split_dim", "reliable_pairs"};
  char len[64], base[64], frac[64], dim[64];
  std::snprintf(len, sizeof len, "%.17g", r.pretrain_len);
  std::snprintf(base, sizeof base, "%.17g", r.base);
  std::snprintf(frac, sizeof frac, "%.*f", decimals, r.fraction);
  std::snprintf(dim, sizeof dim, "%.*f", decimals, r.split_dim);
  t.rows.push_back({len, std::to_string(r.head_dim), base, frac, dim, std::to_string(r.reliable_pairs)});
  return t;
}

ReportTable period_table(const SplitReport& r) {
  ReportTable t;
  t.header = {"pair", "period", "reliable"};
  for (std::size_t k = 0; k < r.periods.size(); ++k) {
    char p[64];
    std::snprintf(p, sizeof p, "%.6g", r.periods[k]);
    t.rows.push_back({std::to_string(k), p, r.periods[k] < r.pretrain_len ? "yes" : "no"});
  }
  return t;
}

ReportTable lm_table(std::span<const LmGroup> groups) {
  ReportTable t;
  t.notes.push_back("loss = mean next-token NLL (nats); ppl = exp(loss); acc = greedy top-1 next-token accuracy");
  t.header = {"group", "scope", "tokens", "loss", "ppl", "acc", "flagged"};
  for (const auto& g : groups) {
    for (const LmRow* row : {&g.report.all, &g.report.last}) {
      t.rows.push_back({g.group, row->scope, std::to_string(row->tokens), format_metric(row->loss),
                        format_metric(row->ppl), format_metric(row->acc), row->flagged ? "1" : "0"});
    }
  }
  return t;
}

Predictions read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions " + path);
  Predictions preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("id")) throw InvalidArgument(path + ":" + std::to_string(line_no) + ": missing id");
    std::string output;
    if (j.contains("output")) {
      output = j.at("output").get<std::string>();
    } else if (j.contains("symbols")) {
      for (const auto& s : j.at("symbols")) output += s.get<std::string>() + "\n";
    } else {
      throw InvalidArgument(path + ":" + std::to_string(line_no) + ": needs output or symbols");
    }
    preds[j.at("id").get<std::string>()] = std::move(output);
  }
  return preds;
}

namespace {

std::vector<ScoreGroup> bucketed_means(std::span<const TaskRecord> tasks, std::span<const double> scores,
                                       std::span<const std::size_t> edges) {
  std::vector<ScoreGroup> out;
  auto summarize = [&](std::string name, const std::vector<std::size_t>& members, bool flagged) {
    ScoreGroup g;
    g.group = std::move(name);
    g.records = members.size();
    g.flagged = flagged;
    double sum = 0.0;
    for (std::size_t i : members) sum += scores[i];
    g.mean = members.empty() ? std::nan("") : sum / static_cast<double>(members.size());
    out.push_back(g);
  };
  std::vector<std::size_t> all(tasks.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Buckets b = bucket_by_length(tasks, edges);
  summarize("all", all, false);
  for (const auto& bucket : b.buckets) summarize(bucket.label(), bucket.members, false);
  if (!b.underflow.empty()) summarize("underflow", b.underflow, true);
  if (!b.overflow.empty()) summarize("overflow", b.overflow, true);
  return out;
}

const std::string& prediction_for(const TaskRecord& r, const Predictions& preds) {
  auto it = preds.find(r.id);
  if (it == preds.end()) throw InvalidArgument("no prediction for task " + r.id);
  return it->second;
}

std::vector<ScoreGroup> evaluate_with(std::span<const TaskRecord> tasks, TaskKind kind, const Predictions& preds,
                                      std::span<const std::size_t> edges,
                                      const std::function<double(const TaskRecord&, const std::string&)>& score) {
  std::vector<double> scores;
  scores.reserve(tasks.size());
  for (const auto& r : tasks) {
    if (r.kind != kind) throw InvalidArgument("task " + r.id + " has kind " + to_string(r.kind) + ", expected " + to_string(kind));
    scores.push_back(score(r, prediction_for(r, preds)));
  }
  return bucketed_means(tasks, scores, edges);
}

}  // namespace

std::vector<ScoreGroup> evaluate_symbol_task(std::span<const TaskRecord> tasks, const Predictions& preds,
                                             std::span<const std::size_t> edges) {
  return evaluate_with(tasks, TaskKind::Symbol, preds, edges, [](const TaskRecord& r, const std::string& out) {
    return recall(parse_model_output_symbols(out), r.gold_symbols);
  });
}

std::vector<ScoreGroup> evaluate_completion_task(std::span<const TaskRecord> tasks, const Predictions& preds,
                                                 std::span<const std::size_t> edges) {
  return evaluate_with(tasks, TaskKind::Completion, preds, edges, [](const TaskRecord& r, const std::string& out) {
    return edit_similarity(first_line(out), r.gold_line);
  });
}

ReportTable score_table(std::span<const ScoreGroup> groups, const std::string& metric) {
  ReportTable t;
  if (metric == "edit_sim") {
    t.notes.push_back("edit_sim = 1 - levenshtein(pred, gold) / max(|pred|, |gold|) on the first predicted line");
  } else if (metric == "recall") {
    t.notes.push_back("recall = |pred & gold| / |gold|, exact case-sensitive match");
  }
  t.header = {"bucket", "records", metric, "flagged"};
  for (const auto& g : groups) {
    t.rows.push_back({g.group, std::to_string(g.records), format_metric(g.mean), g.flagged ? "1" : "0"});
  }
  return t;
}

}  // namespace hirope
