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

#include <fstream>
#include <random>
#include <sstream>

#include "hirope/code_hierarchy.hpp"

using namespace hirope;

namespace {

std::string read_fixture(const std::string& rel) {
  std::ifstream in(std::string(HIROPE_FIXTURES) + "/" + rel, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> token_texts(const std::string& src) {
  std::vector<std::string> out;
  for (const auto& s : simple_tokenize(src)) out.push_back(src.substr(s.start_byte, s.end_byte - s.start_byte));
  return out;
}

void expect_partition(const std::vector<Segment>& segs, std::size_t len) {
  ASSERT_FALSE(segs.empty());
  EXPECT_EQ(segs.front().start_byte, 0u);
  EXPECT_EQ(segs.back().end_byte, len);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    EXPECT_EQ(segs[i].ordinal, i);
    EXPECT_LT(segs[i].start_byte, segs[i].end_byte);
    if (i > 0) EXPECT_EQ(segs[i].start_byte, segs[i - 1].end_byte);
  }
}

}  // namespace

// Hand-derived segmentation of the two-function fixture:
//   bytes  0..12  "import os\n\n\n"                  preamble
//   bytes 12..45  "def alpha(x): ... \n\n\n"          function
//   bytes 45..82  "def beta(y): ..."                  function
TEST(Golden, TwoFunctionFileSegments) {
  const std::string src = read_fixture("two_functions.py");
  ASSERT_EQ(src.size(), 82u);
  const auto spans = simple_tokenize(src);
  ASSERT_EQ(spans.size(), 25u);
  const auto r = parse_segments(src, segmentation::FunctionLevel{}, spans);
  EXPECT_FALSE(r.fallback);
  const std::vector<Segment> expected = {{SegmentKind::Preamble, 0, 12, 0},
                                         {SegmentKind::Function, 12, 45, 1},
                                         {SegmentKind::Function, 45, 82, 2}};
  EXPECT_EQ(r.segments, expected);
}

TEST(Golden, TwoFunctionFilePositions) {
  const std::string src = read_fixture("two_functions.py");
  const auto spans = simple_tokenize(src);
  const auto pos = assign_hier_positions(spans, parse_segments(src, segmentation::FunctionLevel{}, spans).segments);
  std::vector<HierPos> expected;
  const std::vector<std::size_t> per_segment = {2, 10, 13};
  Position g = 0;
  for (std::size_t s = 0; s < per_segment.size(); ++s) {
    for (std::size_t t = 0; t < per_segment[s]; ++t) {
      expected.push_back(HierPos{{static_cast<Position>(s), static_cast<Position>(t)}, g++});
    }
  }
  EXPECT_EQ(pos, expected);
  const auto texts = token_texts(src);
  EXPECT_EQ(texts[2], "def");
  EXPECT_EQ(texts[12], "def");
  EXPECT_EQ(texts[13], "beta");
}

TEST(Golden, TwoFunctionFileStatementsAndSymbols) {
  const std::string src = read_fixture("two_functions.py");
  const auto spans = simple_tokenize(src);
  const auto r = parse_segments(src, segmentation::StatementLevel{}, spans);
  std::vector<std::size_t> starts;
  for (const auto& s : r.segments) starts.push_back(s.start_byte);
  EXPECT_EQ(starts, (std::vector<std::size_t>{0, 12, 26, 45, 58}));
  const SymbolSet sym = extract_symbols(src);
  EXPECT_EQ(sym.names, (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_EQ(sym.locations, (std::vector<std::size_t>{16, 49}));
}

TEST(Tokenize, SplitsIdentifiersAndPunctuation) {
  EXPECT_EQ(token_texts("x1 = f(a_b, 2.5)  # hi"),
            (std::vector<std::string>{"x1", "=", "f", "(", "a_b", ",", "2", ".", "5", ")", "#", "hi"}));
  EXPECT_EQ(token_texts("caf\xc3\xa9+1"), (std::vector<std::string>{"caf\xc3\xa9", "+", "1"}));
  EXPECT_TRUE(simple_tokenize(" \n\t").empty());
}

TEST(Grammar, OutlineOfNestedDefinitions) {
  const std::string src = read_fixture("corpus/repo_b/models.py");
  const SyntaxOutline o = PythonGrammar{}.parse(src);
  std::vector<std::string> names;
  std::vector<std::size_t> depths;
  for (const auto& d : o.definitions) {
    names.push_back(d.name);
    depths.push_back(d.depth);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"Point", "__init__", "norm", "Segment", "__init__", "Meta", "fetch"}));
  EXPECT_EQ(depths, (std::vector<std::size_t>{0, 1, 1, 0, 1, 1, 0}));
  // Decorated definitions start at the decorator line.
  EXPECT_EQ(src.substr(o.definitions[0].start_byte, 1), "@");
  EXPECT_EQ(src.substr(o.definitions[6].start_byte, 1), "@");
}

TEST(Grammar, FunctionSegmentsForDecoratorsAndTrailingCode) {
  const std::string src = read_fixture("corpus/repo_b/models.py");
  const auto r = parse_segments(src, segmentation::FunctionLevel{}, simple_tokenize(src));
  std::vector<SegmentKind> kinds;
  for (const auto& s : r.segments) kinds.push_back(s.kind);
  EXPECT_EQ(kinds, (std::vector<SegmentKind>{SegmentKind::Preamble, SegmentKind::Class, SegmentKind::Class,
                                             SegmentKind::Function, SegmentKind::Statement}));
  expect_partition(r.segments, src.size());
}

TEST(Grammar, StringsAndCommentsHideDefinitions) {
  const std::string src = read_fixture("corpus/repo_a/pkg/util.py");
  EXPECT_EQ(extract_symbols(src).names, (std::vector<std::string>{"tokenize", "count"}));
  EXPECT_TRUE(extract_symbols(read_fixture("corpus/repo_b/constants.py")).empty());
}

TEST(Grammar, NestedDefinitionsCountOnce) {
  const SymbolSet s = extract_symbols(read_fixture("corpus/repo_a/main.py"));
  EXPECT_EQ(s.names, (std::vector<std::string>{"Runner", "__init__", "run", "report"}));
}

TEST(Grammar, CrlfAndTabs) {
  const std::string crlf = read_fixture("corpus/repo_c/crlf.py");
  EXPECT_EQ(extract_symbols(crlf).names, (std::vector<std::string>{"windows_line_endings"}));
  const std::string uni = read_fixture("corpus/repo_c/unicode_names.py");
  EXPECT_EQ(extract_symbols(uni).names, (std::vector<std::string>{"caf\xc3\xa9", "\xc3\x9c" "ber"}));
}

TEST(Grammar, RejectsMalformedSource) {
  const PythonGrammar g;
  EXPECT_THROW(g.parse("def f(:\n  pass\n"), ParseError);
  EXPECT_THROW(g.parse("x = 'unterminated\n"), ParseError);
  EXPECT_THROW(g.parse("s = '''never closed\n"), ParseError);
  EXPECT_THROW(g.parse("def f():\nreturn 1\n"), ParseError);
  EXPECT_THROW(g.parse("x = 1\n    y = 2\n"), ParseError);
  EXPECT_THROW(g.parse("if x:\n        a\n    b\n"), ParseError);
  EXPECT_THROW(g.parse("def f():\n"), ParseError);
  EXPECT_THROW(g.parse("x = (1,\n"), ParseError);
  EXPECT_THROW(g.parse("x = 1)\n"), ParseError);
  EXPECT_NO_THROW(g.parse("x = (1,\n  2)\ny = [\n]\n"));
}

TEST(Segments, UnparseableSourceFallsBack) {
  const std::string src = "def broken(:\n    return 1\n";
  const auto r = parse_segments(src, segmentation::FunctionLevel{}, simple_tokenize(src));
  EXPECT_TRUE(r.fallback);
  EXPECT_FALSE(r.warning.empty());
  ASSERT_EQ(r.segments.size(), 1u);
  EXPECT_EQ(r.segments[0], (Segment{SegmentKind::Preamble, 0, src.size(), 0}));
}

TEST(Segments, FixedBlocksHoldNTokens) {
  std::mt19937_64 rng(501);
  const std::string alphabet = "ab (=)\n\t1";
  for (int trial = 0; trial < 100; ++trial) {
    std::string src;
    for (std::size_t i = rng() % 200; i > 0; --i) src += alphabet[rng() % alphabet.size()];
    const auto spans = simple_tokenize(src);
    const std::size_t n = 1 + rng() % 7;
    const auto r = parse_segments(src, segmentation::FixedTokens{n}, spans);
    EXPECT_FALSE(r.fallback);
    if (src.empty()) {
      EXPECT_TRUE(r.segments.empty());
      continue;
    }
    expect_partition(r.segments, src.size());
    const auto pos = assign_hier_positions(spans, r.segments);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      EXPECT_EQ(pos[i].levels[0], static_cast<Position>(i / n));
      EXPECT_EQ(pos[i].levels[1], static_cast<Position>(i % n));
    }
  }
}

TEST(Segments, RandomSourcesAlwaysPartition) {
  // Arbitrary byte soup: either parses or falls back, and positions stay well-formed.
  std::mt19937_64 rng(502);
  const std::vector<std::string> pieces = {"def f():\n", "    x = 1\n", "class C:\n", "\n", "y = (\n", ")\n",
                                           "'s'\n", "# c\n", "@d\n", "  \n", "\"\"\"doc\n", "z\n"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string src;
    for (std::size_t i = rng() % 12; i > 0; --i) src += pieces[rng() % pieces.size()];
    const auto spans = simple_tokenize(src);
    for (const SegmentationStrategy s : {SegmentationStrategy{segmentation::FunctionLevel{}},
                                         SegmentationStrategy{segmentation::StatementLevel{}}}) {
      const auto r = parse_segments(src, s, spans);
      if (src.empty()) continue;
      expect_partition(r.segments, src.size());
      const auto pos = assign_hier_positions(spans, r.segments);
      ASSERT_EQ(pos.size(), spans.size());
      for (std::size_t i = 1; i < pos.size(); ++i) {
        EXPECT_EQ(pos[i].global, static_cast<Position>(i));
        if (pos[i].levels[0] == pos[i - 1].levels[0]) {
          EXPECT_EQ(pos[i].levels[1], pos[i - 1].levels[1] + 1);
        } else {
          EXPECT_GT(pos[i].levels[0], pos[i - 1].levels[0]);
          EXPECT_EQ(pos[i].levels[1], 0);
        }
      }
    }
  }
}

TEST(Segments, StrategyNames) {
  EXPECT_EQ(to_string(parse_segmentation_strategy("fixed:64")), "fixed:64");
  EXPECT_EQ(to_string(parse_segmentation_strategy("statement")), "statement");
  EXPECT_THROW(parse_segmentation_strategy("fixed:0"), InvalidArgument);
  EXPECT_THROW(parse_segmentation_strategy("fixed:x"), InvalidArgument);
  EXPECT_THROW(parse_segmentation_strategy("token"), InvalidArgument);
}

TEST(Positions, RejectGapsAndStrayTokens) {
  const std::string src = "a b c";
  const auto spans = simple_tokenize(src);
  const std::vector<Segment> gap = {{SegmentKind::Statement, 0, 2, 0}, {SegmentKind::Statement, 3, 5, 1}};
  EXPECT_THROW(assign_hier_positions(spans, gap), InvalidArgument);
  const std::vector<Segment> short_cover = {{SegmentKind::Statement, 0, 3, 0}};
  EXPECT_THROW(assign_hier_positions(spans, short_cover), InvalidArgument);
}

TEST(SymbolTask, PromptAndGold) {
  const std::string src = read_fixture("two_functions.py");
  const TaskRecord r = build_symbol_task(src, "List names:\n{input_code}\nAnswer:", SourceMeta{"t1", "r", "p.py"});
  EXPECT_EQ(r.prompt, "List names:\n" + src + "\nAnswer:");
  EXPECT_EQ(r.gold_symbols, (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_EQ(r.token_length, 25u);
  EXPECT_EQ(r.kind, TaskKind::Symbol);
  EXPECT_FALSE(r.template_note.empty());
  EXPECT_NE(default_symbol_template().find(kInputCodeSlot), std::string::npos);
  EXPECT_THROW(build_symbol_task(src, "no slot", SourceMeta{"t", "r", "p"}), InvalidArgument);
}

TEST(CorpusStats, LoaderAndAggregates) {
  const auto files = load_corpus(std::string(HIROPE_FIXTURES) + "/corpus");
  ASSERT_EQ(files.size(), 6u);
  EXPECT_EQ(files.front().path, "repo_a/main.py");
  EXPECT_EQ(files.front().repo, "repo_a");
  const CorpusStats stats = corpus_stats(files);
  ASSERT_EQ(stats.repos.size(), 3u);
  EXPECT_EQ(stats.total.files, 6u);
  EXPECT_DOUBLE_EQ(stats.repos[1].mean_symbols, 3.0);
  const std::string tsv = format_corpus_stats(stats);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "repo\tfiles\tmean_length_tokens\tmean_symbols\tmin_symbol_loc_bytes\tmax_symbol_loc_bytes");
  EXPECT_THROW(load_corpus("/nonexistent/dir"), InvalidArgument);
}
