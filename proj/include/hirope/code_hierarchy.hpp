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
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hirope/hier.hpp"
#include "hirope/records.hpp"

namespace hirope {

/// Source text the grammar could not make sense of.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SegmentKind { Function, Class, Statement, FixedBlock, Preamble };

std::string to_string(SegmentKind kind);

/// Half-open byte range [start_byte, end_byte) of one code region.
struct Segment {
  SegmentKind kind = SegmentKind::Preamble;
  std::size_t start_byte = 0;
  std::size_t end_byte = 0;
  std::size_t ordinal = 0;

  bool operator==(const Segment&) const = default;
};

namespace segmentation {
/// One segment per top-level function or class definition.
struct FunctionLevel {};
/// One segment per logical line (simple statement or compound header).
struct StatementLevel {};
/// One segment per run of `n` tokens, ignoring syntax.
struct FixedTokens {
  std::size_t n = 512;
};
}  // namespace segmentation

using SegmentationStrategy = std::variant<segmentation::FunctionLevel,
                                          segmentation::StatementLevel, segmentation::FixedTokens>;

std::string to_string(const SegmentationStrategy& s);

/// Parses "function", "statement" or "fixed:<n>".
SegmentationStrategy parse_segmentation_strategy(std::string_view text);

struct TokenSpan {
  std::size_t index = 0;
  std::size_t start_byte = 0;
  std::size_t end_byte = 0;

  bool operator==(const TokenSpan&) const = default;
};

/// Fixture tokenizer: maximal runs of identifier bytes ([A-Za-z0-9_] and any
/// byte >= 0x80) form one token, every other non-space byte is its own token.
std::vector<TokenSpan> simple_tokenize(std::string_view source);

/// Throws unless spans are indexed 0..n-1, ordered, non-overlapping and end
/// inside a source of `source_len` bytes.
void validate_spans(std::span<const TokenSpan> spans, std::size_t source_len);

// ---------------------------------------------------------------------------
// Grammar interface.

struct Definition {
  enum class Kind { Function, Class };
  Kind kind = Kind::Function;
  std::string name;
  std::size_t name_byte = 0;   ///< offset of the name identifier
  std::size_t start_byte = 0;  ///< start of the first decorator line, or the header line
  std::size_t end_byte = 0;    ///< one past the last line of the body
  std::size_t depth = 0;       ///< 0 for top-level definitions
};

/// One logical line: a simple statement or the header of a compound one.
struct LogicalLine {
  std::size_t line_start = 0;   ///< start of the physical line holding the first byte
  std::size_t first_byte = 0;   ///< first non-blank byte
  std::size_t end_byte = 0;     ///< one past the terminating newline (or EOF)
  std::size_t indent = 0;
};

struct SyntaxOutline {
  std::vector<LogicalLine> lines;
  std::vector<Definition> definitions;  ///< file order of their header lines
};

/// A language front end producing the structural outline the segmenter and
/// symbol extractor consume.
class Grammar {
 public:
  virtual ~Grammar() = default;
  virtual std::string name() const = 0;
  /// Throws ParseError on malformed input.
  virtual SyntaxOutline parse(std::string_view source) const = 0;
};

/// Indentation-structured grammar for Python sources.
class PythonGrammar final : public Grammar {
 public:
  std::string name() const override { return "python"; }
  SyntaxOutline parse(std::string_view source) const override;
};

const Grammar& default_grammar();

// ---------------------------------------------------------------------------
// Segmentation, positions, symbols.

struct SegmentationResult {
  std::vector<Segment> segments;
  bool fallback = false;  ///< the grammar rejected the source; one segment covers it
  std::string warning;
};

SegmentationResult parse_segments(std::string_view source, const SegmentationStrategy& strategy,
                                  std::span<const TokenSpan> token_spans,
                                  const Grammar& grammar = default_grammar());

/// Two-level positions (segment ordinal, token ordinal within segment). A
/// token belongs to the segment containing its first byte.
std::vector<HierPos> assign_hier_positions(std::span<const TokenSpan> token_spans,
                                           std::span<const Segment> segments);

/// Defined function and class names at any nesting depth, in file order,
/// de-duplicated (first occurrence kept).
struct SymbolSet {
  std::vector<std::string> names;
  std::vector<std::size_t> locations;  ///< byte offset of each name's first definition

  std::size_t size() const { return names.size(); }
  bool empty() const { return names.empty(); }
};

/// Throws ParseError when the grammar rejects the source.
SymbolSet extract_symbols(std::string_view source, const Grammar& grammar = default_grammar());

inline constexpr std::string_view kInputCodeSlot = "{input_code}";

/// Paraphrased instruction for the symbol-listing task.
std::string default_symbol_template();

struct SourceMeta {
  std::string id;
  std::string repo;
  std::string path;
};

/// Fills the template's {input_code} slot and attaches the gold symbols.
TaskRecord build_symbol_task(std::string_view source, std::string_view instruction_template,
                             const SourceMeta& meta, const Grammar& grammar = default_grammar());

// ---------------------------------------------------------------------------
// Corpus statistics.

struct SourceFile {
  std::string repo;
  std::string path;
  std::string content;
};

/// Per-repository row of file count, mean token length, mean symbol count and
/// the extreme symbol byte locations.
struct CorpusStatsRow {
  std::string repo;
  std::size_t files = 0;
  double mean_length = 0.0;
  double mean_symbols = 0.0;
  std::size_t min_symbol_loc = 0;
  std::size_t max_symbol_loc = 0;
  bool has_symbols = false;
};

struct CorpusStats {
  std::vector<CorpusStatsRow> repos;  ///< sorted by repo name
  CorpusStatsRow total;
};

CorpusStats corpus_stats(std::span<const SourceFile> files,
                         const Grammar& grammar = default_grammar());

/// Tab-separated table with a header line; the last row is "TOTAL".
std::string format_corpus_stats(const CorpusStats& stats);

/// Reads every regular file below `root` whose extension is in `extensions`;
/// the repository is the first path component under `root`. Sorted by path.
std::vector<SourceFile> load_corpus(const std::string& root,
                                    const std::vector<std::string>& extensions = {".py"});

}  // namespace hirope
