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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hirope/rope.hpp"

namespace hirope {

/// Hierarchical position of one token. `levels` runs coarse to fine: levels[0]
/// is the top segment ordinal, levels.back() the token ordinal inside its
/// innermost segment. `global` is the flat token index.
struct HierPos {
  std::vector<Position> levels;
  Position global = 0;

  std::size_t depth() const { return levels.size(); }
  bool operator==(const HierPos&) const = default;

  /// Flat position (h = 1, levels[0] == global).
  static HierPos flat(Position global) { return HierPos{{global}, global}; }
};

/// Throws unless every level is non-negative, depth >= 1 and h = 1 positions
/// carry levels[0] == global.
void validate(const HierPos& p);

/// Throws unless every position is valid, all share one depth, and `global`
/// is strictly increasing.
void validate_sequence(std::span<const HierPos> positions);

/// Allocation of rotary pairs to hierarchy levels.
///
/// pair_counts[l] is the number of pairs owned by level l (coarse to fine).
/// The finest level owns the lowest pair indices (highest frequencies); each
/// coarser level owns the next block upward.
class DimSplit {
 public:
  explicit DimSplit(std::vector<std::size_t> pair_counts);

  /// Two-level split with round(ratio * d/2) token-level pairs. A ratio of
  /// exactly 1 yields the single-level split, which scores by global index
  /// and so reproduces plain RoPE.
  static DimSplit from_ratio(std::size_t head_dim, double ratio);

  /// Default split: half of the pairs on the token level.
  static DimSplit half(std::size_t head_dim) { return from_ratio(head_dim, 0.5); }

  std::size_t levels() const { return pair_counts_.size(); }
  std::size_t total_pairs() const { return total_; }
  std::size_t token_pairs() const { return pair_counts_.back(); }
  std::span<const std::size_t> pair_counts() const { return pair_counts_; }

  /// Level index (0 = coarsest) owning rotary pair `pair`.
  std::size_t level_of_pair(std::size_t pair) const { return pair_level_.at(pair); }

  bool operator==(const DimSplit& o) const { return pair_counts_ == o.pair_counts_; }

 private:
  std::vector<std::size_t> pair_counts_;
  std::vector<std::size_t> pair_level_;
  std::size_t total_ = 0;
};

inline constexpr Position kDefaultWindow = 512;

struct WindowConfig {
  Position length = kDefaultWindow;
};

namespace strategy {

/// Plain RoPE on the global index.
struct Origin {};

/// Hierarchical RoPE: plain RoPE inside the window, hierarchical positions
/// with every coarse-level distance offset by (window - 1) outside it.
struct HiRoPE {
  DimSplit split;
  WindowConfig window;
};

/// Relative distances beyond `window` are clipped to `window`.
struct ReRoPE {
  Position window = kDefaultWindow;
};

/// Distances inside `neighbor_window` are exact; beyond it both indices are
/// floor-divided by `group` and re-aligned by neighbor_window - floor(neighbor_window / group).
struct SelfExtend {
  Position group = 4;
  Position neighbor_window = kDefaultWindow;
};

/// NTK-aware base rescaling by `scale`.
struct NTK {
  double scale = 1.0;
};

}  // namespace strategy

using PositionStrategy = std::variant<strategy::Origin, strategy::HiRoPE, strategy::ReRoPE,
                                      strategy::SelfExtend, strategy::NTK>;

std::string strategy_name(const PositionStrategy& s);

/// Throws if any strategy parameter is out of range for `cfg`.
void validate(const PositionStrategy& s, const RotaryConfig& cfg);

// ---------------------------------------------------------------------------
// Per-token encodings and per-pair scores.

/// Angles level(k) * theta_k for each pair. A single-level split uses the
/// global index whatever the depth of `p`.
std::vector<double> hirope_angles(const HierPos& p, const DimSplit& split, const RotaryConfig& cfg);

EmbeddingVector apply_hirope(std::span<const double> x, const HierPos& p, const DimSplit& split,
                             const RotaryConfig& cfg);

/// Hierarchical attention score; depends only on the per-level differences.
double hirope_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                    const HierPos& pk, const DimSplit& split, const RotaryConfig& cfg);

/// HiRoPE score with the window rule; requires pq.global >= pk.global.
double windowed_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                      const HierPos& pk, const DimSplit& split, const WindowConfig& window,
                      const RotaryConfig& cfg);

double rerope_score(std::span<const double> q, std::span<const double> k, Position m, Position n,
                    Position window, const RotaryConfig& cfg);

double selfextend_score(std::span<const double> q, std::span<const double> k, Position m,
                        Position n, Position group, Position neighbor_window,
                        const RotaryConfig& cfg);

/// base' = base * scale^(d / (d - 2)).
RotaryConfig ntk_config(const RotaryConfig& cfg, double scale);

/// Per-pair score under any strategy (causal: pq.global >= pk.global).
double pair_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                  const HierPos& pk, const PositionStrategy& s, const RotaryConfig& cfg);

// ---------------------------------------------------------------------------
// Batched evaluation.

/// Precomputed cos/sin per token and pair.
struct RotaryTable {
  std::size_t tokens = 0;
  std::size_t pairs = 0;
  std::vector<double> cos;
  std::vector<double> sin;

  static RotaryTable from_angles(std::size_t pairs, std::span<const std::vector<double>> angles);

  /// Rotates `x` (length 2*pairs) by the angles of token `t`; `inverse`
  /// applies the transpose rotation.
  void rotate(std::size_t t, std::span<double> x, bool inverse = false) const;
};

/// Any of the supported strategies reduces to at most two rotate-once
/// encodings plus a mask. A causal pair (i, j) uses the "far" encoding when
/// global_i - global_j >= far_threshold, otherwise the "near" one.
struct RotaryPlan {
  RotaryTable query_near;
  RotaryTable key_near;
  bool has_far = false;
  RotaryTable query_far;
  RotaryTable key_far;
  Position far_threshold = 0;
  std::vector<Position> global;

  std::size_t tokens() const { return global.size(); }
  bool use_far(std::size_t i, std::size_t j) const {
    return has_far && global[i] - global[j] >= far_threshold;
  }
};

RotaryPlan build_rotary_plan(std::span<const HierPos> positions, const PositionStrategy& s,
                             const RotaryConfig& cfg);

/// Row i holds the scores against keys 0..i.
class LowerTriangular {
 public:
  explicit LowerTriangular(std::size_t n) : n_(n), data_(n * (n + 1) / 2, 0.0) {}
  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * (i + 1) / 2 + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * (i + 1) / 2 + j]; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// Causal score matrix for a whole sequence, computed by rotating every query
/// and key once per encoding and merging the encodings by the plan's mask.
LowerTriangular attention_scores(std::span<const EmbeddingVector> queries,
                                 std::span<const EmbeddingVector> keys,
                                 std::span<const HierPos> positions, const PositionStrategy& s,
                                 const RotaryConfig& cfg);

}  // namespace hirope
