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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "hirope/hier.hpp"
#include "hirope/synthetic.hpp"
#include "hirope/tinylm.hpp"
#include "json.hpp"

namespace hirope {

inline constexpr const char* kVersion = "0.1.0";

/// Flat "key = value" settings. Blank lines and lines starting with '#' are
/// ignored; later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<config>");
  static KeyValueConfig from_file(const std::string& path);

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Keys: strategy (origin|hirope|rerope|selfextend|ntk), split_ratio or
/// split_pairs (comma list, coarse to fine), window, rerope_window, group,
/// neighbor_window, ntk_scale.
PositionStrategy strategy_from_config(const KeyValueConfig& kv, std::size_t head_dim);

/// Keys: layers, heads, head_dim, vocab, ff, rope_base, model_seed,
/// position_scale, plus the strategy keys.
ModelConfig model_config_from(const KeyValueConfig& kv);

/// Keys: train_len, steps, batch_size, lr, warmup_steps, min_lr_ratio,
/// grad_clip, optimizer, beta1, beta2, eps, data_seed, position_scale.
TrainConfig train_config_from(const KeyValueConfig& kv);

/// Keys: min_segment_len, max_segment_len, segments_per_sequence,
/// ident_vocab, value_vocab, body_vocab, min_motif, max_motif, query_rate,
/// seq_len, num_sequences.
SyntheticTaskConfig task_config_from(const KeyValueConfig& kv);

nlohmann::json to_json(const PositionStrategy& s);
PositionStrategy strategy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const SyntheticTaskConfig& cfg);

}  // namespace hirope
