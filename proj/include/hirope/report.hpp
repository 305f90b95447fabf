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

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hirope/dim_analyzer.hpp"
#include "hirope/metrics.hpp"
#include "hirope/records.hpp"

namespace hirope {

/// A delimiter-separated report: '#' note lines, a header row, data rows.
struct ReportTable {
  std::vector<std::string> notes;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_tsv() const;
  /// Space-padded columns for terminals.
  std::string to_aligned() const;
};

/// Fixed "%.6f"; non-finite values print as "nan" / "inf" / "-inf".
std::string format_metric(double v);

/// `decimals` applies to fraction and split_dim.
ReportTable split_report_table(const SplitReport& r, int decimals = 4);
ReportTable period_table(const SplitReport& r);

/// One LM report per group label (a length or bucket).
struct LmGroup {
  std::string group;
  LmReport report;
};

ReportTable lm_table(std::span<const LmGroup> groups);

/// Per-bucket mean of a per-record score, with an "all" row first.
struct ScoreGroup {
  std::string group;
  std::size_t records = 0;
  double mean = 0.0;
  bool flagged = false;
};

/// Predictions keyed by record id: raw model output text.
using Predictions = std::map<std::string, std::string>;

/// Reads {"id": ..., "output": "..."} lines; a "symbols" array is accepted
/// in place of "output" and joined by newlines.
Predictions read_predictions_file(const std::string& path);

/// Recall of parsed output symbols against each record's gold set.
std::vector<ScoreGroup> evaluate_symbol_task(std::span<const TaskRecord> tasks, const Predictions& preds,
                                             std::span<const std::size_t> edges);

/// Edit similarity of the first output line against each record's gold line.
std::vector<ScoreGroup> evaluate_completion_task(std::span<const TaskRecord> tasks, const Predictions& preds,
                                                 std::span<const std::size_t> edges);

ReportTable score_table(std::span<const ScoreGroup> groups, const std::string& metric);

}  // namespace hirope
