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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hirope {

enum class TaskKind { Symbol, Completion, LM };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// One evaluation item. The gold payload depends on `kind`: a symbol list
/// for Symbol, the next source line for Completion, nothing for LM.
struct TaskRecord {
  std::string id;
  TaskKind kind = TaskKind::Symbol;
  std::string prompt;
  std::vector<std::string> gold_symbols;
  std::string gold_line;
  std::size_t token_length = 0;
  std::string repo;
  std::string path;
  std::string template_note;

  bool operator==(const TaskRecord&) const = default;
};

/// Throws InvalidArgument if the gold payload does not fit the kind.
void validate(const TaskRecord& r);

/// JSONL: one object per line with fields id, kind, prompt, gold_symbols,
/// gold_line, token_length, repo, path, template_note.
std::string to_json_line(const TaskRecord& r);
TaskRecord task_from_json_line(std::string_view line);

void write_jsonl(std::ostream& out, const std::vector<TaskRecord>& records);
std::vector<TaskRecord> read_jsonl(std::istream& in);

void write_jsonl_file(const std::string& path, const std::vector<TaskRecord>& records);
std::vector<TaskRecord> read_jsonl_file(const std::string& path);

}  // namespace hirope
