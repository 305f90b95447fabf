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
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hirope/hier.hpp"

namespace hirope {

using TokenId = std::int32_t;

/// Token-id layout of the synthetic hierarchical language.
///
///   0                 BOS
///   1                 DEF   opens a segment: DEF <ident> <value>
///   2                 REF   recall query:    REF <ident> -> <value bound to ident>
///   [3, 3+I)          identifiers
///   [3+I, 3+I+V)      values
///   [3+I+V, vocab)    body symbols
namespace synth {
inline constexpr TokenId kBos = 0;
inline constexpr TokenId kDef = 1;
inline constexpr TokenId kRef = 2;
inline constexpr TokenId kFirstIdent = 3;
}  // namespace synth

/// Generator settings. Each segment is a header binding a fresh identifier to
/// a value, a body that repeats a short random motif, and (with probability
/// `query_rate`, when at least one earlier binding is live) a recall query
/// on an identifier bound by a uniformly chosen earlier segment.
struct SyntheticTaskConfig {
  std::size_t min_segment_len = 8;
  std::size_t max_segment_len = 24;
  /// 0 fills every sequence with segments up to `seq_len`; otherwise a cap.
  std::size_t segments_per_sequence = 0;
  std::size_t ident_vocab = 192;
  std::size_t value_vocab = 64;
  std::size_t body_vocab = 253;
  std::size_t min_motif = 2;
  std::size_t max_motif = 4;
  double query_rate = 0.5;
  std::size_t seq_len = 128;
  std::size_t num_sequences = 16000;  ///< one pass for 1000 steps of 16

  std::size_t vocab_size() const { return 3 + ident_vocab + value_vocab + body_vocab; }
  TokenId first_value() const { return static_cast<TokenId>(3 + ident_vocab); }
  TokenId first_body() const { return static_cast<TokenId>(3 + ident_vocab + value_vocab); }
};

void validate(const SyntheticTaskConfig& cfg);

/// One token sequence with its two-level positions (segment, token in
/// segment). The BOS token forms segment 0 on its own.
struct Sequence {
  std::vector<TokenId> tokens;
  std::vector<HierPos> positions;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sequence&) const = default;
};

/// Deterministic in (cfg, seed).
std::vector<Sequence> generate_corpus(const SyntheticTaskConfig& cfg, std::uint64_t seed);

/// A single sequence of exactly `length` tokens (the final segment may be cut).
Sequence generate_sequence(const SyntheticTaskConfig& cfg, std::size_t length, std::uint64_t seed);

/// Truncates a sequence to its first `length` tokens.
Sequence truncate(const Sequence& s, std::size_t length);

/// Corpus file: one JSON object per line, {"tokens":[...],"segments":[...]},
/// where "segments" lists the token count of each segment in order.
void write_corpus(std::ostream& out, std::span<const Sequence> corpus);
std::vector<Sequence> read_corpus(std::istream& in);
void write_corpus_file(const std::string& path, std::span<const Sequence> corpus);
std::vector<Sequence> read_corpus_file(const std::string& path);

}  // namespace hirope
