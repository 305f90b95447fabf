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
#include <vector>

#include "hirope/hier.hpp"
#include "hirope/rope.hpp"

namespace hirope {

/// Reliable-extrapolation report for a rotary configuration.
///
/// A pair is reliable when its period 2*pi/theta_k fits inside the
/// pretraining length, i.e. it has been seen through at least one full
/// cycle. `fraction` = log_base(L_pretrain / 2*pi), clamped to (0, 1], and
/// `split_dim` = fraction * d counts real components.
struct SplitReport {
  double pretrain_len = 0.0;
  std::size_t head_dim = 0;
  double base = 0.0;
  double fraction = 0.0;
  double split_dim = 0.0;
  std::size_t reliable_pairs = 0;  ///< count of k with period(k) < pretrain_len
  std::vector<double> periods;
};

/// 2*pi * base^(2k/d).
double period(std::size_t pair, const RotaryConfig& cfg);

SplitReport reliable_split(double pretrain_len, const RotaryConfig& cfg);

/// Two-level split giving the reliable (short-period) pairs to the token level
/// and the remaining long-period pairs to the segment level.
DimSplit suggest_split(double pretrain_len, const RotaryConfig& cfg);

}  // namespace hirope
