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
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hirope {

/// Raised for any contract violation on the public surface (shape mismatch,
/// out-of-range parameter, malformed input).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Token positions are integers; anything up to 2^53 is exactly representable
/// once converted to double for the angle product.
using Position = std::int64_t;

inline constexpr double kDefaultRopeBase = 10000.0;

/// Rotary configuration: head dimension, frequency base and the per-pair
/// angular frequencies theta_k = base^(-2k/d).
///
/// Pairs are interleaved: pair k is the complex coordinate (x[2k], x[2k+1]).
class RotaryConfig {
 public:
  explicit RotaryConfig(std::size_t head_dim, double base = kDefaultRopeBase);

  std::size_t head_dim() const { return head_dim_; }
  std::size_t num_pairs() const { return head_dim_ / 2; }
  double base() const { return base_; }
  double theta(std::size_t pair) const { return thetas_.at(pair); }
  std::span<const double> thetas() const { return thetas_; }

 private:
  std::size_t head_dim_;
  double base_;
  std::vector<double> thetas_;
};

/// Length-d real vector; adjacent components form one complex coordinate.
using EmbeddingVector = std::vector<double>;

/// Multiplies complex pair k of `x` by exp(i * angles[k]).
EmbeddingVector rotate_pairs(std::span<const double> x, std::span<const double> angles);

/// In-place variant used by the batched kernels.
void rotate_pairs_inplace(std::span<double> x, std::span<const double> angles);

/// Angles m * theta_k for every pair.
std::vector<double> rope_angles(Position m, const RotaryConfig& cfg);

EmbeddingVector apply_rope(std::span<const double> x, Position m, const RotaryConfig& cfg);

/// Re<f(q,m), f(k,n)>: the dot product of the two rotated vectors. Depends on
/// m - n only.
double rope_score(std::span<const double> q, std::span<const double> k, Position m, Position n,
                  const RotaryConfig& cfg);

/// Score at a signed relative distance `delta` = m - n.
double rope_score_at(std::span<const double> q, std::span<const double> k, Position delta,
                     const RotaryConfig& cfg);

double dot(std::span<const double> a, std::span<const double> b);

void check_dim(std::span<const double> x, const RotaryConfig& cfg, const char* what);

}  // namespace hirope
