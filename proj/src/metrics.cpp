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

#include "hirope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hirope/rope.hpp"

namespace hirope {

std::string LengthBucket::label() const { return std::to_string(lo) + "-" + std::to_string(hi); }

std::vector<std::size_t> default_bucket_edges() { return {0, 2048, 4096, 8192, 16384}; }

Buckets bucket_by_length(std::span<const std::size_t> lengths, std::span<const std::size_t> edges) {
  if (edges.size() < 2) throw InvalidArgument("bucket edges need at least two values");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw InvalidArgument("bucket edges must be strictly increasing");
  }
  Buckets out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) out.buckets.push_back({edges[i], edges[i + 1], {}});
  for (std::size_t r = 0; r < lengths.size(); ++r) {
    const std::size_t len = lengths[r];
    if (len < edges.front()) {
      out.underflow.push_back(r);
    } else if (len >= edges.back()) {
      out.overflow.push_back(r);
    } else {
      const auto it = std::upper_bound(edges.begin(), edges.end(), len);
      out.buckets[static_cast<std::size_t>(it - edges.begin()) - 1].members.push_back(r);
    }
  }
  return out;
}

Buckets bucket_by_length(std::span<const TaskRecord> records, std::span<const std::size_t> edges) {
  std::vector<std::size_t> lengths;
  lengths.reserve(records.size());
  for (const auto& r : records) lengths.push_back(r.token_length);
  return bucket_by_length(lengths, edges);
}

LmRow lm_row(std::string scope, std::span<const double> nlls, std::span<const bool> correct) {
  if (nlls.size() != correct.size()) throw InvalidArgument("lm metrics: NLL and flag counts differ");
  LmRow row;
  row.scope = std::move(scope);
  row.tokens = nlls.size();
  if (nlls.empty()) {
    row.loss = row.ppl = row.acc = std::nan("");
    row.flagged = true;
    return row;
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < nlls.size(); ++i) {
    sum += nlls[i];
    hits += correct[i] ? 1 : 0;
  }
  row.loss = sum / static_cast<double>(nlls.size());
  row.ppl = std::exp(row.loss);
  row.acc = static_cast<double>(hits) / static_cast<double>(nlls.size());
  row.flagged = !std::isfinite(row.loss) || !std::isfinite(row.ppl);
  return row;
}

LmReport lm_metrics(std::span<const double> nlls, std::span<const bool> correct, std::size_t last_k) {
  if (last_k == 0) throw InvalidArgument("last_K must be >= 1");
  LmReport report;
  report.all = lm_row("all", nlls, correct);
  const std::size_t take = std::min(last_k, nlls.size());
  report.last = lm_row("last_" + std::to_string(last_k), nlls.last(take), correct.last(take));
  if (nlls.size() < last_k) report.last.flagged = true;
  return report;
}

double recall(std::span<const std::string> predicted, std::span<const std::string> gold) {
  const std::set<std::string> gold_set(gold.begin(), gold.end());
  if (gold_set.empty()) throw InvalidArgument("recall needs a non-empty gold set");
  const std::set<std::string> pred_set(predicted.begin(), predicted.end());
  std::size_t hit = 0;
  for (const auto& g : gold_set) hit += pred_set.count(g);
  return static_cast<double>(hit) / static_cast<double>(gold_set.size());
}

namespace {

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    }
    if (!ok) {
      out.push_back(0x110000u + c);  // outside the Unicode range: never equals a real code point
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

// Bytes >= 0x80 belong to non-ASCII identifier characters.
bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto s = code_points(a);
  const auto t = code_points(b);
  std::vector<std::size_t> row(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (s[i - 1] == t[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[t.size()];
}

double edit_similarity(std::string_view pred, std::string_view gold) {
  const std::size_t longest = std::max(code_points(pred).size(), code_points(gold).size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(pred, gold)) / static_cast<double>(longest);
}

std::vector<std::string> parse_model_output_symbols(std::string_view raw) {
  static const std::set<std::string, std::less<>> kDropped{"def", "class", "async"};
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!ident_start(raw[i])) {
      // Skip digit runs whole so "2nd" or "1a" never yields a fragment.
      if (raw[i] >= '0' && raw[i] <= '9') {
        while (i < raw.size() && ident_char(raw[i])) ++i;
      } else {
        ++i;
      }
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && ident_char(raw[j])) ++j;
    const std::string_view word = raw.substr(i, j - i);
    if (!kDropped.contains(word) && seen.insert(std::string(word)).second) out.emplace_back(word);
    i = j;
  }
  return out;
}

std::string first_line(std::string_view text) {
  const std::size_t nl = text.find('\n');
  std::string_view line = text.substr(0, nl);
  const auto b = line.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = line.find_last_not_of(" \t\r");
  return std::string(line.substr(b, e - b + 1));
}

}  // namespace hirope
