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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hirope/report.hpp"

using namespace hirope;

namespace {

TaskRecord symbol_task(const std::string& id, std::size_t len, std::vector<std::string> gold) {
  TaskRecord r;
  r.id = id;
  r.kind = TaskKind::Symbol;
  r.gold_symbols = std::move(gold);
  r.token_length = len;
  return r;
}

TaskRecord completion_task(const std::string& id, std::size_t len, std::string gold) {
  TaskRecord r;
  r.id = id;
  r.kind = TaskKind::Completion;
  r.gold_line = std::move(gold);
  r.token_length = len;
  return r;
}

}  // namespace

TEST(Report, FormatMetric) {
  EXPECT_EQ(format_metric(0.5), "0.500000");
  EXPECT_EQ(format_metric(std::nan("")), "nan");
  EXPECT_EQ(format_metric(-INFINITY), "-inf");
}

TEST(Report, TsvAndAlignedLayouts) {
  ReportTable t;
  t.notes = {"note"};
  t.header = {"a", "bbb"};
  t.rows = {{"xx", "1"}};
  EXPECT_EQ(t.to_tsv(), "# note\na\tbbb\nxx\t1\n");
  EXPECT_EQ(t.to_aligned(), "# note\na   bbb\nxx  1\n");
}

TEST(Report, LmTableKeepsPplEqualExpLoss) {
  LmGroup g;
  g.group = "128";
  g.report.all = LmRow{"all", 10, 1.25, std::exp(1.25), 0.4, false};
  g.report.last = LmRow{"last_4", 4, 0.5, std::exp(0.5), 0.5, false};
  const ReportTable t = lm_table(std::vector<LmGroup>{g});
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) EXPECT_NEAR(std::stod(row[4]), std::exp(std::stod(row[3])), 1e-5);
}

TEST(Report, SymbolTaskScoresByBucket) {
  const std::vector<TaskRecord> tasks = {symbol_task("a", 100, {"foo", "Bar"}), symbol_task("b", 3000, {"x"}),
                                         symbol_task("c", 20000, {"y"})};
  const Predictions preds = {{"a", "1. foo\n2. baz"}, {"b", "x"}, {"c", "nothing"}};
  const auto groups = evaluate_symbol_task(tasks, preds, default_bucket_edges());
  ASSERT_EQ(groups.front().group, "all");
  EXPECT_NEAR(groups.front().mean, 0.5, 1e-12);
  EXPECT_EQ(groups[1].group, "0-2048");
  EXPECT_EQ(groups[1].mean, 0.5);
  EXPECT_EQ(groups[2].mean, 1.0);
  EXPECT_TRUE(std::isnan(groups[3].mean));
  EXPECT_EQ(groups.back().group, "overflow");
  EXPECT_TRUE(groups.back().flagged);
  EXPECT_THROW(evaluate_symbol_task(tasks, Predictions{}, default_bucket_edges()), InvalidArgument);
}

TEST(Report, CompletionTaskUsesFirstLine) {
  const std::vector<TaskRecord> tasks = {completion_task("a", 10, "abc"), completion_task("b", 10, "return x")};
  const Predictions preds = {{"a", "axc\nignored"}, {"b", "  return x"}};
  const auto groups = evaluate_completion_task(tasks, preds, default_bucket_edges());
  EXPECT_NEAR(groups.front().mean, (2.0 / 3.0 + 1.0) / 2.0, 1e-12);
  EXPECT_THROW(evaluate_symbol_task(tasks, preds, default_bucket_edges()), InvalidArgument);
}

TEST(Report, PredictionsFile) {
  const auto path = (std::filesystem::temp_directory_path() / "hirope_preds.jsonl").string();
  std::ofstream(path) << R"({"id":"a","output":"foo"})" << "\n\n" << R"({"id":"b","symbols":["x","y"]})" << "\n";
  const Predictions p = read_predictions_file(path);
  EXPECT_EQ(p.at("a"), "foo");
  EXPECT_EQ(p.at("b"), "x\ny\n");
  std::ofstream(path) << R"({"output":"foo"})" << "\n";
  EXPECT_THROW(read_predictions_file(path), InvalidArgument);
  std::filesystem::remove(path);
}
