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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hirope/records.hpp"

namespace hirope {

// ---------------------------------------------------------------------------
// Length buckets.

/// Half-open bucket [lo, hi) holding indices into the bucketed input.
struct LengthBucket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::vector<std::size_t> members;

  std::string label() const;
};

struct Buckets {
  std::vector<LengthBucket> buckets;
  std::vector<std::size_t> underflow;  ///< length < edges.front()
  std::vector<std::size_t> overflow;   ///< length >= edges.back()

  bool flagged() const { return !underflow.empty() || !overflow.empty(); }
};

/// Default buckets: 0-2048 / 2048-4096 / 4096-8192 / 8192-16384.
std::vector<std::size_t> default_bucket_edges();

Buckets bucket_by_length(std::span<const std::size_t> lengths, std::span<const std::size_t> edges);
Buckets bucket_by_length(std::span<const TaskRecord> records, std::span<const std::size_t> edges);

// ---------------------------------------------------------------------------
// Language-modeling metrics.

struct LmRow {
  std::string scope;  ///< "all" or "last_<K>"
  std::size_t tokens = 0;
  double loss = 0.0;  ///< mean NLL (nats)
  double ppl = 0.0;   ///< exp(loss)
  double acc = 0.0;   ///< greedy top-1 next-token accuracy
  bool flagged = false;
};

struct LmReport {
  LmRow all;
  LmRow last;
};

LmRow lm_row(std::string scope, std::span<const double> nlls, std::span<const bool> correct);

/// All-token and last-K rows; when fewer than K tokens are available the
/// last-K row covers the whole sequence and is flagged.
LmReport lm_metrics(std::span<const double> nlls, std::span<const bool> correct, std::size_t last_k);

// ---------------------------------------------------------------------------
// Task metrics.

/// |pred ∩ gold| / |gold| with exact, case-sensitive matching; duplicates on
/// either side count once. Throws on an empty gold set.
double recall(std::span<const std::string> predicted, std::span<const std::string> gold);

/// Levenshtein distance over Unicode code points (invalid UTF-8 bytes count
/// as one unit each).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(pred, gold) / max(|pred|, |gold|); 1 when both are empty.
double edit_similarity(std::string_view pred, std::string_view gold);

/// Candidate identifiers from free-form model output (numbered or bulleted
/// lists, one name per line, comma separated...). Keywords def/class/async
/// are dropped; order of first appearance, de-duplicated.
std::vector<std::string> parse_model_output_symbols(std::string_view raw);

/// First line of a completion (text up to the first newline), trimmed of
/// surrounding whitespace.
std::string first_line(std::string_view text);

}  // namespace hirope
