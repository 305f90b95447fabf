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

#include "hirope/dim_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hirope {

double period(std::size_t pair, const RotaryConfig& cfg) {
  if (pair >= cfg.num_pairs()) {
    throw InvalidArgument("pair index " + std::to_string(pair) + " out of range for head_dim " +
                          std::to_string(cfg.head_dim()));
  }
  const double d = static_cast<double>(cfg.head_dim());
  return 2.0 * std::numbers::pi * std::pow(cfg.base(), 2.0 * static_cast<double>(pair) / d);
}

SplitReport reliable_split(double pretrain_len, const RotaryConfig& cfg) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (!(pretrain_len > two_pi) || !std::isfinite(pretrain_len)) {
    throw InvalidArgument("pretraining length must exceed 2*pi: no dimension completes a period");
  }
  if (!(cfg.base() > 1.0)) throw InvalidArgument("reliable_split needs a rotary base > 1");
  SplitReport r;
  r.pretrain_len = pretrain_len;
  r.head_dim = cfg.head_dim();
  r.base = cfg.base();
  r.fraction = std::clamp(std::log(pretrain_len / two_pi) / std::log(cfg.base()), 0.0, 1.0);
  r.split_dim = r.fraction * static_cast<double>(cfg.head_dim());
  r.periods.resize(cfg.num_pairs());
  for (std::size_t k = 0; k < r.periods.size(); ++k) {
    r.periods[k] = period(k, cfg);
    if (r.periods[k] < pretrain_len) ++r.reliable_pairs;
  }
  return r;
}

DimSplit suggest_split(double pretrain_len, const RotaryConfig& cfg) {
  const SplitReport r = reliable_split(pretrain_len, cfg);
  const std::size_t pairs = cfg.num_pairs();
  if (r.reliable_pairs >= pairs) return DimSplit({pairs});
  if (pairs < 2) throw InvalidArgument("a two-level split needs head_dim >= 4");
  const std::size_t token = std::max<std::size_t>(r.reliable_pairs, 1);
  return DimSplit({pairs - token, token});
}

}  // namespace hirope
