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

#include "hirope/hier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hirope {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_causal(Position m, Position n, const char* what) {
  if (m < 0 || n < 0) throw InvalidArgument(std::string(what) + ": negative position");
  if (m < n) {
    throw InvalidArgument(std::string(what) + ": non-causal pair (query " + std::to_string(m) +
                          " precedes key " + std::to_string(n) + ")");
  }
}

void require_arity(const HierPos& p, const DimSplit& split) {
  if (split.levels() != 1 && p.depth() != split.levels()) {
    throw InvalidArgument("hierarchical position has " + std::to_string(p.depth()) +
                          " levels but the dimension split has " +
                          std::to_string(split.levels()));
  }
}

void require_split(const DimSplit& split, const RotaryConfig& cfg) {
  if (split.total_pairs() != cfg.num_pairs()) {
    throw InvalidArgument("dimension split covers " + std::to_string(split.total_pairs()) +
                          " pairs but head_dim " + std::to_string(cfg.head_dim()) + " has " +
                          std::to_string(cfg.num_pairs()));
  }
}

// Per-pair angles for a vector of per-level indices (or deltas).
std::vector<double> level_angles(std::span<const Position> per_level, Position global,
                                 const DimSplit& split, const RotaryConfig& cfg) {
  std::vector<double> angles(cfg.num_pairs());
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const Position idx = split.levels() == 1 ? global : per_level[split.level_of_pair(k)];
    angles[k] = static_cast<double>(idx) * cfg.theta(k);
  }
  return angles;
}

// Query position with every coarse level moved forward by window - 1.
HierPos shift_coarse_levels(const HierPos& p, Position offset) {
  HierPos shifted = p;
  for (std::size_t l = 0; l + 1 < shifted.levels.size(); ++l) shifted.levels[l] += offset;
  return shifted;
}

}  // namespace

void validate(const HierPos& p) {
  if (p.levels.empty()) throw InvalidArgument("hierarchical position needs at least one level");
  if (p.global < 0) throw InvalidArgument("global position must be non-negative");
  for (Position v : p.levels) {
    if (v < 0) throw InvalidArgument("hierarchical level indices must be non-negative");
  }
  if (p.levels.size() == 1 && p.levels[0] != p.global) {
    throw InvalidArgument("single-level position must equal its global index");
  }
}

void validate_sequence(std::span<const HierPos> positions) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    validate(positions[i]);
    if (i == 0) continue;
    if (positions[i].depth() != positions[0].depth()) {
      throw InvalidArgument("positions in one sequence must share a depth");
    }
    if (positions[i].global <= positions[i - 1].global) {
      throw InvalidArgument("global positions must be strictly increasing");
    }
  }
}

DimSplit::DimSplit(std::vector<std::size_t> pair_counts) : pair_counts_(std::move(pair_counts)) {
  if (pair_counts_.empty()) throw InvalidArgument("dimension split needs at least one level");
  for (std::size_t c : pair_counts_) {
    if (c == 0) throw InvalidArgument("every level needs at least one rotary pair");
  }
  total_ = std::accumulate(pair_counts_.begin(), pair_counts_.end(), std::size_t{0});
  pair_level_.reserve(total_);
  for (std::size_t l = pair_counts_.size(); l-- > 0;) {
    pair_level_.insert(pair_level_.end(), pair_counts_[l], l);
  }
}

DimSplit DimSplit::from_ratio(std::size_t head_dim, double ratio) {
  if (head_dim < 2 || head_dim % 2 != 0) throw InvalidArgument("head_dim must be even and >= 2");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("split ratio must lie in (0, 1]");
  const std::size_t pairs = head_dim / 2;
  if (ratio == 1.0) return DimSplit({pairs});
  if (pairs < 2) throw InvalidArgument("a two-level split needs head_dim >= 4");
  auto token = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pairs)));
  token = std::clamp<std::size_t>(token, 1, pairs - 1);
  return DimSplit({pairs - token, token});
}

std::string strategy_name(const PositionStrategy& s) {
  return std::visit(Overloaded{
                        [](const strategy::Origin&) { return std::string("origin"); },
                        [](const strategy::HiRoPE&) { return std::string("hirope"); },
                        [](const strategy::ReRoPE&) { return std::string("rerope"); },
                        [](const strategy::SelfExtend&) { return std::string("selfextend"); },
                        [](const strategy::NTK&) { return std::string("ntk"); },
                    },
                    s);
}

void validate(const PositionStrategy& s, const RotaryConfig& cfg) {
  std::visit(Overloaded{
                 [](const strategy::Origin&) {},
                 [&](const strategy::HiRoPE& h) {
                   require_split(h.split, cfg);
                   if (h.window.length < 1) throw InvalidArgument("window length must be >= 1");
                 },
                 [](const strategy::ReRoPE& r) {
                   if (r.window < 1) throw InvalidArgument("ReRoPE window must be >= 1");
                 },
                 [](const strategy::SelfExtend& e) {
                   if (e.group < 1) throw InvalidArgument("Self-Extend group size must be >= 1");
                   if (e.neighbor_window < 0) {
                     throw InvalidArgument("Self-Extend neighbor window must be >= 0");
                   }
                 },
                 [&](const strategy::NTK& n) { (void)ntk_config(cfg, n.scale); },
             },
             s);
}

std::vector<double> hirope_angles(const HierPos& p, const DimSplit& split, const RotaryConfig& cfg) {
  validate(p);
  require_split(split, cfg);
  require_arity(p, split);
  return level_angles(p.levels, p.global, split, cfg);
}

EmbeddingVector apply_hirope(std::span<const double> x, const HierPos& p, const DimSplit& split,
                             const RotaryConfig& cfg) {
  check_dim(x, cfg, "apply_hirope");
  return rotate_pairs(x, hirope_angles(p, split, cfg));
}

double hirope_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                    const HierPos& pk, const DimSplit& split, const RotaryConfig& cfg) {
  check_dim(q, cfg, "hirope_score(q)");
  check_dim(k, cfg, "hirope_score(k)");
  validate(pq);
  validate(pk);
  require_split(split, cfg);
  require_arity(pq, split);
  require_arity(pk, split);
  if (pq.depth() != pk.depth()) throw InvalidArgument("query and key depths differ");
  std::vector<Position> deltas(pq.depth());
  for (std::size_t l = 0; l < deltas.size(); ++l) deltas[l] = pq.levels[l] - pk.levels[l];
  const auto angles = level_angles(deltas, pq.global - pk.global, split, cfg);
  return dot(rotate_pairs(q, angles), k);
}

double windowed_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                      const HierPos& pk, const DimSplit& split, const WindowConfig& window,
                      const RotaryConfig& cfg) {
  require_causal(pq.global, pk.global, "windowed_score");
  if (window.length < 1) throw InvalidArgument("window length must be >= 1");
  const Position distance = pq.global - pk.global;
  if (distance < window.length) return rope_score_at(q, k, distance, cfg);
  return hirope_score(q, k, shift_coarse_levels(pq, window.length - 1), pk, split, cfg);
}

double rerope_score(std::span<const double> q, std::span<const double> k, Position m, Position n,
                    Position window, const RotaryConfig& cfg) {
  require_causal(m, n, "rerope_score");
  if (window < 1) throw InvalidArgument("ReRoPE window must be >= 1");
  return rope_score_at(q, k, std::min(m - n, window), cfg);
}

double selfextend_score(std::span<const double> q, std::span<const double> k, Position m,
                        Position n, Position group, Position neighbor_window,
                        const RotaryConfig& cfg) {
  require_causal(m, n, "selfextend_score");
  if (group < 1) throw InvalidArgument("Self-Extend group size must be >= 1");
  if (neighbor_window < 0) throw InvalidArgument("Self-Extend neighbor window must be >= 0");
  if (m - n < neighbor_window) return rope_score_at(q, k, m - n, cfg);
  const Position grouped = m / group - n / group + neighbor_window - neighbor_window / group;
  return rope_score_at(q, k, grouped, cfg);
}

RotaryConfig ntk_config(const RotaryConfig& cfg, double scale) {
  if (!(scale >= 1.0) || !std::isfinite(scale)) {
    throw InvalidArgument("NTK scale must be finite and >= 1");
  }
  if (scale == 1.0) return cfg;
  if (cfg.head_dim() == 2) throw InvalidArgument("NTK scaling needs head_dim > 2");
  const double d = static_cast<double>(cfg.head_dim());
  return RotaryConfig(cfg.head_dim(), cfg.base() * std::pow(scale, d / (d - 2.0)));
}

double pair_score(std::span<const double> q, std::span<const double> k, const HierPos& pq,
                  const HierPos& pk, const PositionStrategy& s, const RotaryConfig& cfg) {
  require_causal(pq.global, pk.global, "pair_score");
  return std::visit(
      Overloaded{
          [&](const strategy::Origin&) { return rope_score(q, k, pq.global, pk.global, cfg); },
          [&](const strategy::HiRoPE& h) {
            return windowed_score(q, k, pq, pk, h.split, h.window, cfg);
          },
          [&](const strategy::ReRoPE& r) {
            return rerope_score(q, k, pq.global, pk.global, r.window, cfg);
          },
          [&](const strategy::SelfExtend& e) {
            return selfextend_score(q, k, pq.global, pk.global, e.group, e.neighbor_window, cfg);
          },
          [&](const strategy::NTK& n) {
            return rope_score(q, k, pq.global, pk.global, ntk_config(cfg, n.scale));
          },
      },
      s);
}

RotaryTable RotaryTable::from_angles(std::size_t pairs, std::span<const std::vector<double>> angles) {
  RotaryTable t;
  t.tokens = angles.size();
  t.pairs = pairs;
  t.cos.resize(t.tokens * pairs);
  t.sin.resize(t.tokens * pairs);
  for (std::size_t i = 0; i < t.tokens; ++i) {
    for (std::size_t k = 0; k < pairs; ++k) {
      t.cos[i * pairs + k] = std::cos(angles[i][k]);
      t.sin[i * pairs + k] = std::sin(angles[i][k]);
    }
  }
  return t;
}

void RotaryTable::rotate(std::size_t t, std::span<double> x, bool inverse) const {
  const double* c = cos.data() + t * pairs;
  const double* s = sin.data() + t * pairs;
  const double sign = inverse ? -1.0 : 1.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const double re = x[2 * k];
    const double im = x[2 * k + 1];
    const double sk = sign * s[k];
    x[2 * k] = re * c[k] - im * sk;
    x[2 * k + 1] = re * sk + im * c[k];
  }
}

RotaryPlan build_rotary_plan(std::span<const HierPos> positions, const PositionStrategy& s,
                             const RotaryConfig& cfg) {
  validate_sequence(positions);
  validate(s, cfg);
  const std::size_t n = positions.size();
  const std::size_t pairs = cfg.num_pairs();

  RotaryPlan plan;
  plan.global.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan.global[i] = positions[i].global;

  auto flat_table = [&](const RotaryConfig& c, auto&& index_of) {
    std::vector<std::vector<double>> angles(n);
    for (std::size_t i = 0; i < n; ++i) angles[i] = rope_angles(index_of(i), c);
    return RotaryTable::from_angles(pairs, angles);
  };
  auto global_of = [&](std::size_t i) { return positions[i].global; };

  std::visit(
      Overloaded{
          [&](const strategy::Origin&) {
            plan.query_near = flat_table(cfg, global_of);
            plan.key_near = plan.query_near;
          },
          [&](const strategy::NTK& ntk) {
            plan.query_near = flat_table(ntk_config(cfg, ntk.scale), global_of);
            plan.key_near = plan.query_near;
          },
          [&](const strategy::HiRoPE& h) {
            plan.query_near = flat_table(cfg, global_of);
            plan.key_near = plan.query_near;
            if (n > 0) require_arity(positions[0], h.split);
            std::vector<std::vector<double>> q_angles(n), k_angles(n);
            for (std::size_t i = 0; i < n; ++i) {
              const HierPos shifted = shift_coarse_levels(positions[i], h.window.length - 1);
              q_angles[i] = level_angles(shifted.levels, shifted.global, h.split, cfg);
              k_angles[i] = level_angles(positions[i].levels, positions[i].global, h.split, cfg);
            }
            plan.has_far = true;
            plan.far_threshold = h.window.length;
            plan.query_far = RotaryTable::from_angles(pairs, q_angles);
            plan.key_far = RotaryTable::from_angles(pairs, k_angles);
          },
          [&](const strategy::ReRoPE& r) {
            plan.query_near = flat_table(cfg, global_of);
            plan.key_near = plan.query_near;
            plan.has_far = true;
            plan.far_threshold = r.window;
            plan.query_far = flat_table(cfg, [&](std::size_t) { return r.window; });
            plan.key_far = flat_table(cfg, [](std::size_t) { return Position{0}; });
          },
          [&](const strategy::SelfExtend& e) {
            plan.query_near = flat_table(cfg, global_of);
            plan.key_near = plan.query_near;
            plan.has_far = true;
            plan.far_threshold = e.neighbor_window;
            const Position realign = e.neighbor_window - e.neighbor_window / e.group;
            plan.query_far = flat_table(
                cfg, [&](std::size_t i) { return positions[i].global / e.group + realign; });
            plan.key_far =
                flat_table(cfg, [&](std::size_t i) { return positions[i].global / e.group; });
          },
      },
      s);
  return plan;
}

LowerTriangular attention_scores(std::span<const EmbeddingVector> queries,
                                 std::span<const EmbeddingVector> keys,
                                 std::span<const HierPos> positions, const PositionStrategy& s,
                                 const RotaryConfig& cfg) {
  if (queries.size() != keys.size() || queries.size() != positions.size()) {
    throw InvalidArgument("attention_scores: " + std::to_string(queries.size()) + " queries, " +
                          std::to_string(keys.size()) + " keys and " +
                          std::to_string(positions.size()) + " positions");
  }
  for (const auto& q : queries) check_dim(q, cfg, "attention_scores(query)");
  for (const auto& k : keys) check_dim(k, cfg, "attention_scores(key)");

  const RotaryPlan plan = build_rotary_plan(positions, s, cfg);
  const std::size_t n = queries.size();

  auto encode = [&](std::span<const EmbeddingVector> xs, const RotaryTable& table) {
    std::vector<EmbeddingVector> out(xs.begin(), xs.end());
    for (std::size_t i = 0; i < n; ++i) table.rotate(i, out[i]);
    return out;
  };
  const auto q_near = encode(queries, plan.query_near);
  const auto k_near = encode(keys, plan.key_near);
  std::vector<EmbeddingVector> q_far, k_far;
  if (plan.has_far) {
    q_far = encode(queries, plan.query_far);
    k_far = encode(keys, plan.key_far);
  }

  LowerTriangular scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      scores(i, j) = plan.use_far(i, j) ? dot(q_far[i], k_far[j]) : dot(q_near[i], k_near[j]);
    }
  }
  return scores;
}

}  // namespace hirope
