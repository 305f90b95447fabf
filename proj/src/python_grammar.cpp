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

#include <cstddef>
#include <string>
#include <vector>

#include "hirope/code_hierarchy.hpp"

namespace hirope {

namespace {

bool is_ident_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\f'; }

struct RawLine {
  LogicalLine line;
  char last_significant = 0;
};

class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  std::vector<RawLine> run() {
    std::size_t i = 0;
    while (i < src_.size()) {
      // At the start of a physical line, outside any logical line.
      const std::size_t phys = i;
      std::size_t col = 0;
      while (i < src_.size() && is_blank(src_[i])) {
        col = src_[i] == '\t' ? (col / 8 + 1) * 8 : col + 1;
        ++i;
      }
      if (i >= src_.size()) break;
      if (src_[i] == '\r' || src_[i] == '\n' || src_[i] == '#') {
        i = skip_to_line_end(i);
        continue;
      }
      i = scan_logical_line(phys, i, col);
    }
    return std::move(lines_);
  }

 private:
  std::size_t line_no(std::size_t pos) const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < pos && k < src_.size(); ++k) n += src_[k] == '\n';
    return n;
  }

  [[noreturn]] void fail(std::size_t pos, const std::string& what) const {
    throw ParseError("line " + std::to_string(line_no(pos)) + ": " + what);
  }

  // Returns the index just past the next newline (or EOF).
  std::size_t skip_to_line_end(std::size_t i) const {
    while (i < src_.size() && src_[i] != '\n') ++i;
    return i < src_.size() ? i + 1 : i;
  }

  std::size_t scan_string(std::size_t i) const {
    const char quote = src_[i];
    const bool triple = i + 2 < src_.size() && src_[i + 1] == quote && src_[i + 2] == quote;
    const std::size_t open = i;
    i += triple ? 3 : 1;
    while (i < src_.size()) {
      const char c = src_[i];
      if (c == '\\') {
        i += (i + 2 < src_.size() && src_[i + 1] == '\r' && src_[i + 2] == '\n') ? 3 : 2;
        continue;
      }
      if (triple) {
        if (c == quote && i + 2 < src_.size() && src_[i + 1] == quote && src_[i + 2] == quote) {
          return i + 3;
        }
      } else {
        if (c == quote) return i + 1;
        if (c == '\n') fail(open, "unterminated string literal");
      }
      ++i;
    }
    fail(open, triple ? "unterminated triple-quoted string" : "unterminated string literal");
  }

  std::size_t scan_logical_line(std::size_t phys, std::size_t first, std::size_t indent) {
    RawLine raw;
    raw.line.line_start = phys;
    raw.line.first_byte = first;
    raw.line.indent = indent;
    std::vector<std::pair<char, std::size_t>> brackets;
    std::size_t i = first;
    while (i < src_.size()) {
      const char c = src_[i];
      if (c == '#') {
        while (i < src_.size() && src_[i] != '\n') ++i;
        continue;
      }
      if (c == '"' || c == '\'') {
        i = scan_string(i);
        raw.last_significant = c;
        continue;
      }
      if (c == '\\') {
        std::size_t j = i + 1;
        if (j < src_.size() && src_[j] == '\r') ++j;
        if (j < src_.size() && src_[j] == '\n') {
          i = j + 1;
          continue;
        }
        if (j >= src_.size()) fail(i, "line continuation at end of file");
        fail(i, "unexpected character after line continuation");
      }
      if (c == '(' || c == '[' || c == '{') {
        brackets.emplace_back(c, i);
      } else if (c == ')' || c == ']' || c == '}') {
        const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
        if (brackets.empty() || brackets.back().first != want) {
          fail(i, std::string("unmatched '") + c + "'");
        }
        brackets.pop_back();
      } else if (c == '\n') {
        if (brackets.empty()) {
          raw.line.end_byte = i + 1;
          lines_.push_back(raw);
          return i + 1;
        }
        ++i;
        continue;
      }
      if (!is_blank(c) && c != '\r') raw.last_significant = c;
      ++i;
    }
    if (!brackets.empty()) fail(brackets.back().second, "bracket never closed");
    raw.line.end_byte = src_.size();
    lines_.push_back(raw);
    return src_.size();
  }

  std::string_view src_;
  std::vector<RawLine> lines_;
};

std::string_view word_at(std::string_view src, std::size_t pos, std::size_t* end) {
  std::size_t j = pos;
  while (j < src.size() && is_ident_byte(static_cast<unsigned char>(src[j]))) ++j;
  *end = j;
  return src.substr(pos, j - pos);
}

std::size_t skip_blanks(std::string_view src, std::size_t pos) {
  while (pos < src.size() && is_blank(src[pos])) ++pos;
  return pos;
}

}  // namespace

SyntaxOutline PythonGrammar::parse(std::string_view source) const {
  std::vector<RawLine> raw = Scanner(source).run();

  SyntaxOutline outline;
  outline.lines.reserve(raw.size());
  for (const auto& r : raw) outline.lines.push_back(r.line);

  // Indentation structure.
  std::vector<std::size_t> indents{0};
  bool expect_block = false;
  for (std::size_t li = 0; li < raw.size(); ++li) {
    const auto& line = raw[li].line;
    if (expect_block) {
      if (line.indent <= indents.back()) {
        throw ParseError("byte " + std::to_string(line.first_byte) +
                         ": expected an indented block");
      }
      indents.push_back(line.indent);
    } else if (line.indent > indents.back()) {
      throw ParseError("byte " + std::to_string(line.first_byte) + ": unexpected indent");
    } else {
      while (line.indent < indents.back()) indents.pop_back();
      if (line.indent != indents.back()) {
        throw ParseError("byte " + std::to_string(line.first_byte) +
                         ": unindent does not match any outer indentation level");
      }
    }
    expect_block = raw[li].last_significant == ':';
  }
  if (expect_block) throw ParseError("end of file: expected an indented block");

  // Definitions.
  std::vector<std::size_t> open_ends;  // end bytes of enclosing definitions
  for (std::size_t li = 0; li < raw.size(); ++li) {
    const auto& line = raw[li].line;
    std::size_t end = 0;
    std::string_view word = word_at(source, line.first_byte, &end);
    if (word == "async") {
      std::size_t next = skip_blanks(source, end);
      word = word_at(source, next, &end);
      if (word != "def") continue;
    }
    if (word != "def" && word != "class") continue;
    const std::size_t name_pos = skip_blanks(source, end);
    std::size_t name_end = 0;
    const std::string_view name = word_at(source, name_pos, &name_end);
    if (name.empty() || (name[0] >= '0' && name[0] <= '9')) {
      throw ParseError("byte " + std::to_string(line.first_byte) + ": " + std::string(word) +
                       " without a name");
    }

    Definition def;
    def.kind = word == "class" ? Definition::Kind::Class : Definition::Kind::Function;
    def.name = std::string(name);
    def.name_byte = name_pos;

    std::size_t first = li;
    while (first > 0 && raw[first - 1].line.indent == line.indent &&
           source[raw[first - 1].line.first_byte] == '@') {
      --first;
    }
    def.start_byte = raw[first].line.line_start;

    std::size_t last = li;
    while (last + 1 < raw.size() && raw[last + 1].line.indent > line.indent) ++last;
    def.end_byte = raw[last].line.end_byte;

    while (!open_ends.empty() && open_ends.back() <= line.first_byte) open_ends.pop_back();
    def.depth = open_ends.size();
    open_ends.push_back(def.end_byte);
    outline.definitions.push_back(std::move(def));
  }
  return outline;
}

const Grammar& default_grammar() {
  static const PythonGrammar grammar;
  return grammar;
}

}  // namespace hirope
