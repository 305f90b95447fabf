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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hirope/hier.hpp"
#include "hirope/synthetic.hpp"

namespace hirope {

/// Row-major dense matrix; activations are (tokens x features).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t vocab = 512;
  std::size_t ff = 256;
  double rope_base = kDefaultRopeBase;
  PositionStrategy strategy = strategy::Origin{};
  /// Every position index is multiplied by this before angles are formed
  /// (reverse position interpolation). Set by training.
  Position position_scale = 1;
  std::uint64_t seed = 1234;

  std::size_t d_model() const { return heads * head_dim; }
};

void validate(const ModelConfig& cfg);

struct LayerParams {
  Mat ln1_g, ln1_b;
  Mat wq, wk, wv, wo;
  Mat ln2_g, ln2_b;
  Mat w1, b1, w2, b2;
};

/// All trainable tensors. Biases and norm gains are 1 x n matrices.
struct Params {
  Mat tok_emb;
  std::vector<LayerParams> layers;
  Mat lnf_g, lnf_b;
  Mat w_out, b_out;

  /// Visits every tensor in a fixed order with a stable dotted name.
  void for_each(const std::function<void(const std::string&, Mat&)>& fn);
  void for_each(const std::function<void(const std::string&, const Mat&)>& fn) const;

  std::size_t count() const;
  /// Same shapes, all zeros.
  Params zeros_like() const;
};

class TinyLM {
 public:
  explicit TinyLM(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const RotaryConfig& rotary() const { return rotary_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

 private:
  ModelConfig cfg_;
  RotaryConfig rotary_;
  Params params_;
};

std::vector<HierPos> scale_positions(std::span<const HierPos> positions, Position alpha);

/// Causal next-token logits (tokens x vocab). Attention evaluates the
/// configured strategy's per-pair rule with 1/sqrt(head_dim) scaling; memory
/// grows linearly with sequence length.
Mat forward(const TinyLM& model, std::span<const TokenId> tokens, std::span<const HierPos> positions);

/// Attention weights of one layer and head (row i over keys 0..i), from the
/// training-path forward pass. For inspection and tests.
Mat attention_weights(const TinyLM& model, const Sequence& seq, std::size_t layer, std::size_t head);

struct LossAndGrads {
  double loss = 0.0;  ///< mean next-token NLL over the batch
  std::size_t predictions = 0;
  Params grads;
};

LossAndGrads loss_and_grads(const TinyLM& model, std::span<const Sequence> batch);

/// Loss only, through the same graph as loss_and_grads.
double batch_loss(const TinyLM& model, std::span<const Sequence> batch);

enum class OptimizerKind { Adam, RMSProp };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
  std::size_t train_len = 128;
  std::size_t steps = 1000;
  std::size_t batch_size = 16;
  double learning_rate = 3e-3;
  std::size_t warmup_steps = 50;
  double min_lr_ratio = 0.1;  ///< cosine decay floor as a fraction of learning_rate
  double grad_clip = 1.0;     ///< global-norm clip; <= 0 disables
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::uint64_t data_seed = 7;
  Position position_scale = 1;
};

void validate(const TrainConfig& cfg);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  std::vector<double> losses;  ///< batch loss before each update
};

/// Trains in place. Batches are drawn from per-epoch shuffles of `corpus`
/// seeded by data_seed; sequences are truncated to train_len. Throws
/// TrainingDiverged on a non-finite loss.
TrainResult train(TinyLM& model, const TrainConfig& cfg, std::span<const Sequence> corpus,
                  const std::function<void(std::size_t step, double loss)>& on_step = {});

/// Per-token NLL and greedy-correct flags for predicting tokens 1..n-1.
struct SequenceScores {
  std::vector<double> nll;
  std::vector<bool> correct;
};

SequenceScores score_sequence(const TinyLM& model, const Sequence& seq);

struct LengthEval {
  std::size_t length = 0;
  std::size_t sequences = 0;
  std::size_t tokens = 0;
  double loss = 0.0;
  double ppl = 0.0;
  double acc = 0.0;  ///< greedy top-1 next-token accuracy
};

/// Fresh held-out sequences per length from `task`, seeded by `seed`.
std::vector<LengthEval> evaluate_lengths(const TinyLM& model, std::span<const std::size_t> lengths,
                                         const SyntheticTaskConfig& task, std::uint64_t seed,
                                         std::size_t sequences_per_length);

/// Checkpoint layout (all integers little-endian):
///   8 bytes  magic "HRLMCKPT"
///   u32      format version (1)
///   u64      header length N
///   N bytes  JSON header: model config and the ordered tensor list
///            [{"name", "rows", "cols"}...]
///   f64[]    tensor data in header order, row-major
void save_checkpoint(const TinyLM& model, const std::string& path);
TinyLM load_checkpoint(const std::string& path);

}  // namespace hirope
