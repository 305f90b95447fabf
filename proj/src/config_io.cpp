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

#include "hirope/config_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hirope {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin) {
  KeyValueConfig kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": empty key");
    kv.entries_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<std::size_t>(key, it->second);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

PositionStrategy strategy_from_config(const KeyValueConfig& kv, std::size_t head_dim) {
  const std::string name = kv.get_string("strategy", "origin");
  PositionStrategy s;
  if (name == "origin") {
    s = strategy::Origin{};
  } else if (name == "hirope") {
    std::string pairs = kv.get_string("split_pairs", "");
    DimSplit split = DimSplit::half(head_dim);
    if (!pairs.empty()) {
      std::vector<std::size_t> counts;
      std::stringstream ss(pairs);
      std::string item;
      while (std::getline(ss, item, ',')) counts.push_back(parse_number<std::size_t>("split_pairs", std::string(trim(item))));
      split = DimSplit(counts);
    } else {
      split = DimSplit::from_ratio(head_dim, kv.get_double("split_ratio", 0.5));
    }
    s = strategy::HiRoPE{split, WindowConfig{kv.get_int("window", kDefaultWindow)}};
  } else if (name == "rerope") {
    s = strategy::ReRoPE{kv.get_int("rerope_window", kv.get_int("window", kDefaultWindow))};
  } else if (name == "selfextend") {
    s = strategy::SelfExtend{kv.get_int("group", 4), kv.get_int("neighbor_window", kDefaultWindow)};
  } else if (name == "ntk") {
    s = strategy::NTK{kv.get_double("ntk_scale", 1.0)};
  } else {
    throw InvalidArgument("unknown strategy '" + name + "' (expected origin, hirope, rerope, selfextend or ntk)");
  }
  return s;
}

ModelConfig model_config_from(const KeyValueConfig& kv) {
  ModelConfig cfg;
  cfg.layers = kv.get_size("layers", cfg.layers);
  cfg.heads = kv.get_size("heads", cfg.heads);
  cfg.head_dim = kv.get_size("head_dim", cfg.head_dim);
  cfg.vocab = kv.get_size("vocab", cfg.vocab);
  cfg.ff = kv.get_size("ff", cfg.ff);
  cfg.rope_base = kv.get_double("rope_base", cfg.rope_base);
  cfg.seed = kv.get_u64("model_seed", cfg.seed);
  cfg.position_scale = kv.get_int("position_scale", cfg.position_scale);
  if (cfg.head_dim < 2 || cfg.head_dim % 2 != 0) throw InvalidArgument("head_dim must be even and >= 2");
  cfg.strategy = strategy_from_config(kv, cfg.head_dim);
  validate(cfg);
  return cfg;
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
  TrainConfig cfg;
  cfg.train_len = kv.get_size("train_len", cfg.train_len);
  cfg.steps = kv.get_size("steps", cfg.steps);
  cfg.batch_size = kv.get_size("batch_size", cfg.batch_size);
  cfg.learning_rate = kv.get_double("lr", cfg.learning_rate);
  cfg.warmup_steps = kv.get_size("warmup_steps", cfg.warmup_steps);
  cfg.min_lr_ratio = kv.get_double("min_lr_ratio", cfg.min_lr_ratio);
  cfg.grad_clip = kv.get_double("grad_clip", cfg.grad_clip);
  cfg.optimizer = parse_optimizer(kv.get_string("optimizer", to_string(cfg.optimizer)));
  cfg.beta1 = kv.get_double("beta1", cfg.beta1);
  cfg.beta2 = kv.get_double("beta2", cfg.beta2);
  cfg.eps = kv.get_double("eps", cfg.eps);
  cfg.data_seed = kv.get_u64("data_seed", cfg.data_seed);
  cfg.position_scale = kv.get_int("position_scale", cfg.position_scale);
  validate(cfg);
  return cfg;
}

SyntheticTaskConfig task_config_from(const KeyValueConfig& kv) {
  SyntheticTaskConfig cfg;
  cfg.min_segment_len = kv.get_size("min_segment_len", cfg.min_segment_len);
  cfg.max_segment_len = kv.get_size("max_segment_len", cfg.max_segment_len);
  cfg.segments_per_sequence = kv.get_size("segments_per_sequence", cfg.segments_per_sequence);
  cfg.ident_vocab = kv.get_size("ident_vocab", cfg.ident_vocab);
  cfg.value_vocab = kv.get_size("value_vocab", cfg.value_vocab);
  cfg.body_vocab = kv.get_size("body_vocab", cfg.body_vocab);
  cfg.min_motif = kv.get_size("min_motif", cfg.min_motif);
  cfg.max_motif = kv.get_size("max_motif", cfg.max_motif);
  cfg.query_rate = kv.get_double("query_rate", cfg.query_rate);
  cfg.seq_len = kv.get_size("seq_len", cfg.seq_len);
  cfg.num_sequences = kv.get_size("num_sequences", cfg.num_sequences);
  validate(cfg);
  return cfg;
}

nlohmann::json to_json(const PositionStrategy& s) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, strategy::Origin>) {
          return {{"name", "origin"}};
        } else if constexpr (std::is_same_v<T, strategy::HiRoPE>) {
          return {{"name", "hirope"},
                  {"split_pairs", std::vector<std::size_t>(v.split.pair_counts().begin(), v.split.pair_counts().end())},
                  {"window", v.window.length}};
        } else if constexpr (std::is_same_v<T, strategy::ReRoPE>) {
          return {{"name", "rerope"}, {"window", v.window}};
        } else if constexpr (std::is_same_v<T, strategy::SelfExtend>) {
          return {{"name", "selfextend"}, {"group", v.group}, {"neighbor_window", v.neighbor_window}};
        } else {
          return {{"name", "ntk"}, {"scale", v.scale}};
        }
      },
      s);
}

PositionStrategy strategy_from_json(const nlohmann::json& j) {
  const std::string name = j.at("name").get<std::string>();
  if (name == "origin") return strategy::Origin{};
  if (name == "hirope") {
    return strategy::HiRoPE{DimSplit(j.at("split_pairs").get<std::vector<std::size_t>>()),
                            WindowConfig{j.at("window").get<Position>()}};
  }
  if (name == "rerope") return strategy::ReRoPE{j.at("window").get<Position>()};
  if (name == "selfextend") {
    return strategy::SelfExtend{j.at("group").get<Position>(), j.at("neighbor_window").get<Position>()};
  }
  if (name == "ntk") return strategy::NTK{j.at("scale").get<double>()};
  throw InvalidArgument("unknown strategy '" + name + "'");
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"layers", cfg.layers},     {"heads", cfg.heads},
          {"head_dim", cfg.head_dim}, {"vocab", cfg.vocab},
          {"ff", cfg.ff},             {"rope_base", cfg.rope_base},
          {"strategy", to_json(cfg.strategy)}, {"position_scale", cfg.position_scale},
          {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.head_dim = j.at("head_dim").get<std::size_t>();
  cfg.vocab = j.at("vocab").get<std::size_t>();
  cfg.ff = j.at("ff").get<std::size_t>();
  cfg.rope_base = j.at("rope_base").get<double>();
  cfg.strategy = strategy_from_json(j.at("strategy"));
  cfg.position_scale = j.at("position_scale").get<Position>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  validate(cfg);
  return cfg;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"train_len", cfg.train_len},       {"steps", cfg.steps},
          {"batch_size", cfg.batch_size},     {"lr", cfg.learning_rate},
          {"warmup_steps", cfg.warmup_steps}, {"min_lr_ratio", cfg.min_lr_ratio},
          {"grad_clip", cfg.grad_clip},       {"optimizer", to_string(cfg.optimizer)},
          {"beta1", cfg.beta1},               {"beta2", cfg.beta2},
          {"eps", cfg.eps},                   {"data_seed", cfg.data_seed},
          {"position_scale", cfg.position_scale}};
}

nlohmann::json to_json(const SyntheticTaskConfig& cfg) {
  return {{"min_segment_len", cfg.min_segment_len},
          {"max_segment_len", cfg.max_segment_len},
          {"segments_per_sequence", cfg.segments_per_sequence},
          {"ident_vocab", cfg.ident_vocab},
          {"value_vocab", cfg.value_vocab},
          {"body_vocab", cfg.body_vocab},
          {"min_motif", cfg.min_motif},
          {"max_motif", cfg.max_motif},
          {"query_rate", cfg.query_rate},
          {"seq_len", cfg.seq_len},
          {"num_sequences", cfg.num_sequences}};
}

}  // namespace hirope
