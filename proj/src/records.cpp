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

#include "hirope/records.hpp"

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "hirope/rope.hpp"
#include "json.hpp"

namespace hirope {

using nlohmann::json;

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Symbol: return "symbol";
    case TaskKind::Completion: return "completion";
    case TaskKind::LM: return "lm";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "symbol") return TaskKind::Symbol;
  if (text == "completion") return TaskKind::Completion;
  if (text == "lm") return TaskKind::LM;
  throw InvalidArgument("unknown task kind '" + std::string(text) + "'");
}

void validate(const TaskRecord& r) {
  if (r.id.empty()) throw InvalidArgument("task record without id");
  switch (r.kind) {
    case TaskKind::Symbol:
      if (!r.gold_line.empty()) throw InvalidArgument(r.id + ": symbol task carries a gold line");
      break;
    case TaskKind::Completion:
      if (!r.gold_symbols.empty()) {
        throw InvalidArgument(r.id + ": completion task carries gold symbols");
      }
      break;
    case TaskKind::LM:
      if (!r.gold_symbols.empty() || !r.gold_line.empty()) {
        throw InvalidArgument(r.id + ": lm task carries a gold payload");
      }
      break;
  }
}

std::string to_json_line(const TaskRecord& r) {
  validate(r);
  json j = {
      {"id", r.id},
      {"kind", to_string(r.kind)},
      {"prompt", r.prompt},
      {"gold_symbols", r.gold_symbols},
      {"gold_line", r.gold_line},
      {"token_length", r.token_length},
      {"repo", r.repo},
      {"path", r.path},
      {"template_note", r.template_note},
  };
  return j.dump();
}

TaskRecord task_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed task record: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("task record must be a JSON object");
  TaskRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.kind = parse_task_kind(j.value("kind", std::string("symbol")));
    r.prompt = j.value("prompt", std::string());
    r.gold_symbols = j.value("gold_symbols", std::vector<std::string>{});
    r.gold_line = j.value("gold_line", std::string());
    const auto len = j.value("token_length", std::int64_t{0});
    if (len < 0) throw InvalidArgument(r.id + ": negative token_length");
    r.token_length = static_cast<std::size_t>(len);
    r.repo = j.value("repo", std::string());
    r.path = j.value("path", std::string());
    r.template_note = j.value("template_note", std::string());
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed task record: ") + e.what());
  }
  validate(r);
  return r;
}

void write_jsonl(std::ostream& out, const std::vector<TaskRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<TaskRecord> read_jsonl(std::istream& in) {
  std::vector<TaskRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(task_from_json_line(line));
  }
  return records;
}

void write_jsonl_file(const std::string& path, const std::vector<TaskRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_jsonl(out, records);
}

std::vector<TaskRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_jsonl(in);
}

}  // namespace hirope
