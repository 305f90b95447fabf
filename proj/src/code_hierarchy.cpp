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

#include "hirope/code_hierarchy.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hirope {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ident_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(static_cast<unsigned char>(c)); });
}

struct Boundary {
  std::size_t start;
  SegmentKind kind;
};

// Turns ordered segment starts into a covering segment list. Text before the
// first boundary becomes a preamble segment when it holds anything but
// whitespace, otherwise it is absorbed by the first segment.
std::vector<Segment> close_boundaries(std::vector<Boundary> bounds, std::size_t source_len,
                                      std::string_view source) {
  std::vector<Segment> out;
  if (source_len == 0) return out;
  if (bounds.empty()) {
    out.push_back({SegmentKind::Preamble, 0, source_len, 0});
    return out;
  }
  if (bounds.front().start > 0) {
    if (bounds.front().kind != SegmentKind::Preamble &&
        !all_space(source.substr(0, bounds.front().start))) {
      bounds.insert(bounds.begin(), Boundary{0, SegmentKind::Preamble});
    } else {
      bounds.front().start = 0;
    }
  }
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const std::size_t end = i + 1 < bounds.size() ? bounds[i + 1].start : source_len;
    out.push_back({bounds[i].kind, bounds[i].start, end, i});
  }
  return out;
}

std::vector<Segment> function_level(std::string_view source, const SyntaxOutline& outline) {
  std::vector<const Definition*> top;
  for (const auto& d : outline.definitions) {
    if (d.depth == 0) top.push_back(&d);
  }
  std::vector<Boundary> bounds;
  std::size_t next_def = 0;
  bool seen_definition = false;
  bool in_statement_run = false;
  for (const auto& line : outline.lines) {
    if (line.indent != 0) continue;
    // Skip lines of top-level definitions that began already.
    while (next_def < top.size() && top[next_def]->end_byte <= line.first_byte) ++next_def;
    if (next_def < top.size() && line.line_start >= top[next_def]->start_byte) {
      if (line.line_start == top[next_def]->start_byte) {
        const auto kind = top[next_def]->kind == Definition::Kind::Class ? SegmentKind::Class
                                                                         : SegmentKind::Function;
        bounds.push_back({line.line_start, kind});
        seen_definition = true;
        in_statement_run = false;
      }
      continue;
    }
    if (!in_statement_run) {
      bounds.push_back(
          {line.line_start, seen_definition ? SegmentKind::Statement : SegmentKind::Preamble});
      in_statement_run = true;
    }
  }
  return close_boundaries(std::move(bounds), source.size(), source);
}

std::vector<Segment> statement_level(std::string_view source, const SyntaxOutline& outline) {
  std::vector<Boundary> bounds;
  bounds.reserve(outline.lines.size());
  for (const auto& line : outline.lines) bounds.push_back({line.line_start, SegmentKind::Statement});
  return close_boundaries(std::move(bounds), source.size(), source);
}

std::vector<Segment> fixed_tokens(std::string_view source, std::size_t n,
                                  std::span<const TokenSpan> spans) {
  if (n == 0) throw InvalidArgument("fixed-token segments need n >= 1");
  std::vector<Boundary> bounds;
  for (std::size_t t = 0; t < spans.size(); t += n) {
    bounds.push_back({t == 0 ? 0 : spans[t].start_byte, SegmentKind::FixedBlock});
  }
  if (bounds.empty() && !source.empty()) bounds.push_back({0, SegmentKind::FixedBlock});
  return close_boundaries(std::move(bounds), source.size(), source);
}

}  // namespace

std::string to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Function: return "function";
    case SegmentKind::Class: return "class";
    case SegmentKind::Statement: return "statement";
    case SegmentKind::FixedBlock: return "fixed_block";
    case SegmentKind::Preamble: return "preamble";
  }
  return "unknown";
}

std::string to_string(const SegmentationStrategy& s) {
  return std::visit(Overloaded{
                        [](const segmentation::FunctionLevel&) { return std::string("function"); },
                        [](const segmentation::StatementLevel&) { return std::string("statement"); },
                        [](const segmentation::FixedTokens& f) {
                          return "fixed:" + std::to_string(f.n);
                        },
                    },
                    s);
}

SegmentationStrategy parse_segmentation_strategy(std::string_view text) {
  if (text == "function") return segmentation::FunctionLevel{};
  if (text == "statement") return segmentation::StatementLevel{};
  if (text.starts_with("fixed:")) {
    const std::string_view digits = text.substr(6);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || n == 0) {
      throw InvalidArgument("fixed segment size must be a positive integer: '" +
                            std::string(text) + "'");
    }
    return segmentation::FixedTokens{n};
  }
  throw InvalidArgument("unknown segmentation strategy '" + std::string(text) +
                        "' (expected function, statement or fixed:<n>)");
}

std::vector<TokenSpan> simple_tokenize(std::string_view source) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < source.size()) {
    const auto c = static_cast<unsigned char>(source[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_ident_byte(c)) {
      while (j < source.size() && is_ident_byte(static_cast<unsigned char>(source[j]))) ++j;
    }
    spans.push_back({spans.size(), i, j});
    i = j;
  }
  return spans;
}

void validate_spans(std::span<const TokenSpan> spans, std::size_t source_len) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.index != i) throw InvalidArgument("token spans must be indexed 0..n-1 in order");
    if (s.start_byte >= s.end_byte || s.end_byte > source_len) {
      throw InvalidArgument("token " + std::to_string(i) + " has an empty or out-of-range span");
    }
    if (i > 0 && s.start_byte < spans[i - 1].end_byte) {
      throw InvalidArgument("token spans overlap or are out of order at token " +
                            std::to_string(i));
    }
  }
}

SegmentationResult parse_segments(std::string_view source, const SegmentationStrategy& strategy,
                                  std::span<const TokenSpan> token_spans, const Grammar& grammar) {
  validate_spans(token_spans, source.size());
  SegmentationResult result;
  if (const auto* fixed = std::get_if<segmentation::FixedTokens>(&strategy)) {
    result.segments = fixed_tokens(source, fixed->n, token_spans);
    return result;
  }
  try {
    const SyntaxOutline outline = grammar.parse(source);
    result.segments = std::holds_alternative<segmentation::FunctionLevel>(strategy)
                          ? function_level(source, outline)
                          : statement_level(source, outline);
  } catch (const ParseError& e) {
    result.fallback = true;
    result.warning = grammar.name() + " grammar rejected the source (" + e.what() +
                     "); using a single segment";
    result.segments.clear();
    if (!source.empty()) result.segments.push_back({SegmentKind::Preamble, 0, source.size(), 0});
  }
  return result;
}

std::vector<HierPos> assign_hier_positions(std::span<const TokenSpan> token_spans,
                                           std::span<const Segment> segments) {
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].ordinal != s) throw InvalidArgument("segment ordinals must run 0..n-1");
    if (s > 0 && segments[s].start_byte != segments[s - 1].end_byte) {
      throw InvalidArgument("segments must be contiguous and ordered");
    }
  }
  std::vector<HierPos> out;
  out.reserve(token_spans.size());
  std::vector<Position> within(segments.size(), 0);
  for (std::size_t i = 0; i < token_spans.size(); ++i) {
    const std::size_t start = token_spans[i].start_byte;
    auto it = std::upper_bound(segments.begin(), segments.end(), start,
                               [](std::size_t b, const Segment& seg) { return b < seg.start_byte; });
    if (it == segments.begin() || start >= std::prev(it)->end_byte) {
      throw InvalidArgument("token " + std::to_string(i) + " at byte " + std::to_string(start) +
                            " lies outside every segment");
    }
    const std::size_t seg = static_cast<std::size_t>(std::distance(segments.begin(), it)) - 1;
    out.push_back(HierPos{{static_cast<Position>(seg), within[seg]++}, static_cast<Position>(i)});
  }
  return out;
}

SymbolSet extract_symbols(std::string_view source, const Grammar& grammar) {
  const SyntaxOutline outline = grammar.parse(source);
  SymbolSet set;
  std::set<std::string> seen;
  for (const auto& d : outline.definitions) {
    if (seen.insert(d.name).second) {
      set.names.push_back(d.name);
      set.locations.push_back(d.name_byte);
    }
  }
  return set;
}

std::string default_symbol_template() {
  return "Below is a source code file. Read it and list the name of every function and "
         "every class that the file defines, one name per line.\n\n"
         "{input_code}\n\n"
         "Defined function and class names:\n";
}

TaskRecord build_symbol_task(std::string_view source, std::string_view instruction_template,
                             const SourceMeta& meta, const Grammar& grammar) {
  const std::size_t slot = instruction_template.find(kInputCodeSlot);
  if (slot == std::string_view::npos) {
    throw InvalidArgument("instruction template has no " + std::string(kInputCodeSlot) + " slot");
  }
  const SymbolSet symbols = extract_symbols(source, grammar);
  TaskRecord r;
  r.id = meta.id;
  r.kind = TaskKind::Symbol;
  r.prompt.reserve(instruction_template.size() + source.size());
  r.prompt.append(instruction_template.substr(0, slot));
  r.prompt.append(source);
  r.prompt.append(instruction_template.substr(slot + kInputCodeSlot.size()));
  r.gold_symbols = symbols.names;
  r.token_length = simple_tokenize(source).size();
  r.repo = meta.repo;
  r.path = meta.path;
  r.template_note = "instruction text is a paraphrase of the published task prompt";
  return r;
}

CorpusStats corpus_stats(std::span<const SourceFile> files, const Grammar& grammar) {
  struct Acc {
    std::size_t files = 0;
    std::size_t tokens = 0;
    std::size_t symbols = 0;
    std::size_t min_loc = 0;
    std::size_t max_loc = 0;
    bool has_symbols = false;

    void add(std::size_t n_tokens, const SymbolSet& s) {
      ++files;
      tokens += n_tokens;
      symbols += s.size();
      for (std::size_t loc : s.locations) {
        if (!has_symbols || loc < min_loc) min_loc = loc;
        if (!has_symbols || loc > max_loc) max_loc = loc;
        has_symbols = true;
      }
    }
    CorpusStatsRow row(std::string name) const {
      CorpusStatsRow r;
      r.repo = std::move(name);
      r.files = files;
      if (files > 0) {
        r.mean_length = static_cast<double>(tokens) / static_cast<double>(files);
        r.mean_symbols = static_cast<double>(symbols) / static_cast<double>(files);
      }
      r.min_symbol_loc = min_loc;
      r.max_symbol_loc = max_loc;
      r.has_symbols = has_symbols;
      return r;
    }
  };

  std::map<std::string, Acc> per_repo;
  Acc total;
  for (const auto& f : files) {
    const SymbolSet symbols = extract_symbols(f.content, grammar);
    const std::size_t n_tokens = simple_tokenize(f.content).size();
    per_repo[f.repo].add(n_tokens, symbols);
    total.add(n_tokens, symbols);
  }
  CorpusStats stats;
  for (const auto& [name, acc] : per_repo) stats.repos.push_back(acc.row(name));
  stats.total = total.row("TOTAL");
  return stats;
}

std::string format_corpus_stats(const CorpusStats& stats) {
  std::ostringstream out;
  out << "repo\tfiles\tmean_length_tokens\tmean_symbols\tmin_symbol_loc_bytes\tmax_symbol_loc_bytes\n";
  auto row = [&](const CorpusStatsRow& r) {
    char buf[256];
    if (r.has_symbols) {
      std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%.4f\t%zu\t%zu", r.files, r.mean_length,
                    r.mean_symbols, r.min_symbol_loc, r.max_symbol_loc);
    } else {
      std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%.4f\t-\t-", r.files, r.mean_length,
                    r.mean_symbols);
    }
    out << r.repo << '\t' << buf << '\n';
  };
  for (const auto& r : stats.repos) row(r);
  row(stats.total);
  return out.str();
}

std::vector<SourceFile> load_corpus(const std::string& root, const std::vector<std::string>& extensions) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw InvalidArgument("corpus root is not a directory: " + root);
  std::vector<SourceFile> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (std::find(extensions.begin(), extensions.end(), ext) == extensions.end()) continue;
    const fs::path rel = fs::relative(entry.path(), root);
    SourceFile f;
    f.path = rel.generic_string();
    f.repo = std::distance(rel.begin(), rel.end()) > 1 ? rel.begin()->string() : std::string(".");
    std::ifstream in(entry.path(), std::ios::binary);
    f.content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return files;
}

}  // namespace hirope
