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

#include <map>
#include <sstream>

#include "hirope/synthetic.hpp"

using namespace hirope;

namespace {

// Replays a sequence and checks every binding and recall query against a
// symbol table rebuilt from the tokens alone.
void check_bindings(const Sequence& s, const SyntheticTaskConfig& cfg) {
  std::map<TokenId, TokenId> table;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.tokens[i] == synth::kDef && i + 2 < s.size()) {
      const TokenId ident = s.tokens[i + 1];
      ASSERT_GE(ident, synth::kFirstIdent);
      ASSERT_LT(ident, cfg.first_value());
      table[ident] = s.tokens[i + 2];
    }
    if (s.tokens[i] == synth::kRef && i + 2 < s.size()) {
      const TokenId ident = s.tokens[i + 1];
      ASSERT_TRUE(table.count(ident)) << "query on unbound identifier at " << i;
      EXPECT_EQ(s.tokens[i + 2], table[ident]) << "wrong recalled value at " << i;
    }
  }
}

}  // namespace

TEST(Synthetic, SequenceShapeAndPositions) {
  SyntheticTaskConfig cfg;
  const Sequence s = generate_sequence(cfg, 300, 7);
  ASSERT_EQ(s.size(), 300u);
  EXPECT_EQ(s.tokens[0], synth::kBos);
  EXPECT_EQ(s.positions[0], (HierPos{{0, 0}, 0}));
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto& p = s.positions[i];
    const auto& prev = s.positions[i - 1];
    EXPECT_EQ(p.global, static_cast<Position>(i));
    ASSERT_EQ(p.depth(), 2u);
    if (p.levels[0] == prev.levels[0]) {
      EXPECT_EQ(p.levels[1], prev.levels[1] + 1);
    } else {
      EXPECT_EQ(p.levels[0], prev.levels[0] + 1);
      EXPECT_EQ(p.levels[1], 0);
      EXPECT_EQ(s.tokens[i], synth::kDef);
    }
  }
  for (TokenId t : s.tokens) {
    EXPECT_GE(t, 0);
    EXPECT_LT(static_cast<std::size_t>(t), cfg.vocab_size());
  }
}

TEST(Synthetic, SegmentLengthsWithinRange) {
  SyntheticTaskConfig cfg;
  cfg.min_segment_len = 5;
  cfg.max_segment_len = 9;
  const Sequence s = generate_sequence(cfg, 2000, 8);
  std::map<Position, std::size_t> counts;
  for (const auto& p : s.positions) ++counts[p.levels[0]];
  const Position last = s.positions.back().levels[0];
  for (const auto& [seg, n] : counts) {
    if (seg == 0 || seg == last) continue;
    EXPECT_GE(n, 5u);
    EXPECT_LE(n, 9u);
  }
}

TEST(Synthetic, RecallQueriesAreAnswerable) {
  SyntheticTaskConfig cfg;
  cfg.ident_vocab = 6;  // forces identifier rebinding
  cfg.query_rate = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) check_bindings(generate_sequence(cfg, 800, seed), cfg);
  SyntheticTaskConfig dflt;
  std::size_t queries = 0;
  const Sequence s = generate_sequence(dflt, 4000, 99);
  check_bindings(s, dflt);
  for (TokenId t : s.tokens) queries += t == synth::kRef;
  EXPECT_GT(queries, 20u);
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
  SyntheticTaskConfig cfg;
  cfg.num_sequences = 5;
  EXPECT_EQ(generate_corpus(cfg, 3), generate_corpus(cfg, 3));
  EXPECT_NE(generate_corpus(cfg, 3), generate_corpus(cfg, 4));
  EXPECT_EQ(generate_corpus(cfg, 3).size(), 5u);
}

TEST(Synthetic, SegmentCapStopsEarly) {
  SyntheticTaskConfig cfg;
  cfg.segments_per_sequence = 2;
  const Sequence s = generate_sequence(cfg, 500, 1);
  EXPECT_EQ(s.positions.back().levels[0], 2);
  EXPECT_LT(s.size(), 500u);
}

TEST(Synthetic, TruncateKeepsPrefix) {
  const Sequence s = generate_sequence(SyntheticTaskConfig{}, 50, 2);
  const Sequence t = truncate(s, 20);
  ASSERT_EQ(t.size(), 20u);
  EXPECT_TRUE(std::equal(t.tokens.begin(), t.tokens.end(), s.tokens.begin()));
  EXPECT_EQ(truncate(s, 80), s);
}

TEST(Synthetic, CorpusFileRoundTrip) {
  SyntheticTaskConfig cfg;
  cfg.num_sequences = 4;
  cfg.seq_len = 60;
  const auto corpus = generate_corpus(cfg, 9);
  std::stringstream ss;
  write_corpus(ss, corpus);
  EXPECT_EQ(read_corpus(ss), corpus);
  std::stringstream bad(R"({"tokens":[0,1,2],"segments":[2]})");
  EXPECT_THROW(read_corpus(bad), InvalidArgument);
}

TEST(Synthetic, RejectsBadConfig) {
  SyntheticTaskConfig cfg;
  cfg.min_segment_len = 1;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.max_segment_len = 4;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.query_rate = 1.5;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.ident_vocab = 1;
  EXPECT_THROW(validate(cfg), InvalidArgument);
}
