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

#include "hirope/rope.hpp"

#include <cmath>

namespace hirope {

RotaryConfig::RotaryConfig(std::size_t head_dim, double base) : head_dim_(head_dim), base_(base) {
  if (head_dim < 2 || head_dim % 2 != 0) {
    throw InvalidArgument("head_dim must be even and >= 2, got " + std::to_string(head_dim));
  }
  if (!(base > 0.0) || !std::isfinite(base)) {
    throw InvalidArgument("rotary base must be positive and finite");
  }
  thetas_.resize(num_pairs());
  const double d = static_cast<double>(head_dim_);
  for (std::size_t k = 0; k < thetas_.size(); ++k) {
    // k = 0 gives pow(base, -0.0) == 1.0 exactly.
    thetas_[k] = std::pow(base_, -2.0 * static_cast<double>(k) / d);
  }
}

void check_dim(std::span<const double> x, const RotaryConfig& cfg, const char* what) {
  if (x.size() != cfg.head_dim()) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(cfg.head_dim()) +
                          " components, got " + std::to_string(x.size()));
  }
}

void rotate_pairs_inplace(std::span<double> x, std::span<const double> angles) {
  if (x.size() != 2 * angles.size()) {
    throw InvalidArgument("rotate_pairs: vector of length " + std::to_string(x.size()) +
                          " needs " + std::to_string(x.size() / 2) + " angles, got " +
                          std::to_string(angles.size()));
  }
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const double c = std::cos(angles[k]);
    const double s = std::sin(angles[k]);
    const double re = x[2 * k];
    const double im = x[2 * k + 1];
    x[2 * k] = re * c - im * s;
    x[2 * k + 1] = re * s + im * c;
  }
}

EmbeddingVector rotate_pairs(std::span<const double> x, std::span<const double> angles) {
  EmbeddingVector out(x.begin(), x.end());
  rotate_pairs_inplace(out, angles);
  return out;
}

std::vector<double> rope_angles(Position m, const RotaryConfig& cfg) {
  std::vector<double> angles(cfg.num_pairs());
  const double pos = static_cast<double>(m);
  for (std::size_t k = 0; k < angles.size(); ++k) angles[k] = pos * cfg.theta(k);
  return angles;
}

EmbeddingVector apply_rope(std::span<const double> x, Position m, const RotaryConfig& cfg) {
  check_dim(x, cfg, "apply_rope");
  if (m < 0) throw InvalidArgument("apply_rope: position must be non-negative");
  return rotate_pairs(x, rope_angles(m, cfg));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Re<q e^{i m theta}, k e^{i n theta}> = <rotate(q, (m - n) theta), k>, so only
// the query is turned, by the exact integer delta.
double rope_score_at(std::span<const double> q, std::span<const double> k, Position delta,
                     const RotaryConfig& cfg) {
  check_dim(q, cfg, "rope_score(q)");
  check_dim(k, cfg, "rope_score(k)");
  return dot(rotate_pairs(q, rope_angles(delta, cfg)), k);
}

double rope_score(std::span<const double> q, std::span<const double> k, Position m, Position n,
                  const RotaryConfig& cfg) {
  if (m < 0 || n < 0) throw InvalidArgument("rope_score: positions must be non-negative");
  return rope_score_at(q, k, m - n, cfg);
}

}  // namespace hirope
