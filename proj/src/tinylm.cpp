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

#include "hirope/tinylm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "hirope/config_io.hpp"
#include "json.hpp"

namespace hirope {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// ---------------------------------------------------------------------------
// Layer norm.

struct LnCache {
  Mat xhat;
  Eigen::VectorXd rstd;
};

Mat layer_norm(const Mat& x, const Mat& g, const Mat& b, LnCache* cache) {
  const Eigen::Index T = x.rows();
  const Eigen::Index D = x.cols();
  Mat y(T, D);
  if (cache) {
    cache->xhat.resize(T, D);
    cache->rstd.resize(T);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mean = x.row(t).mean();
    const Eigen::RowVectorXd centered = x.row(t).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(D);
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    const Eigen::RowVectorXd xh = centered * rstd;
    y.row(t) = xh.array() * g.array() + b.array();
    if (cache) {
      cache->xhat.row(t) = xh;
      cache->rstd(t) = rstd;
    }
  }
  return y;
}

Mat layer_norm_backward(const Mat& dy, const Mat& g, const LnCache& c, Mat& dg, Mat& db) {
  dg += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db += dy.colwise().sum();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const Eigen::RowVectorXd dxh = dy.row(t).array() * g.array();
    const double mean_dxh = dxh.mean();
    const double mean_dxh_xh = dxh.dot(c.xhat.row(t)) / static_cast<double>(dy.cols());
    dx.row(t) = c.rstd(t) * (dxh.array() - mean_dxh - c.xhat.row(t).array() * mean_dxh_xh);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// GELU (tanh form).

Mat gelu(const Mat& u) {
  return u.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
}

Mat gelu_backward(const Mat& u, const Mat& dg) {
  Mat du(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double v = u.data()[i];
    const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    const double d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    du.data()[i] = dg.data()[i] * d;
  }
  return du;
}

// ---------------------------------------------------------------------------
// Rotary plumbing.

void rotate_heads(Mat& m, const RotaryTable& table, std::size_t heads, std::size_t head_dim,
                  bool inverse) {
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      table.rotate(static_cast<std::size_t>(t), std::span<double>(m.row(t).data() + h * head_dim, head_dim),
                   inverse);
    }
  }
}

// far_count[i] = number of keys j <= i scored with the plan's far encoding;
// those are exactly keys 0..far_count[i]-1 because global is increasing.
std::vector<Eigen::Index> far_counts(const RotaryPlan& plan) {
  const std::size_t n = plan.tokens();
  std::vector<Eigen::Index> counts(n, 0);
  if (!plan.has_far) return counts;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (j <= i && plan.global[i] - plan.global[j] >= plan.far_threshold) ++j;
    counts[i] = static_cast<Eigen::Index>(j);
  }
  return counts;
}

RotaryPlan plan_for(const TinyLM& model, std::span<const HierPos> positions) {
  const Position alpha = model.config().position_scale;
  if (alpha == 1) return build_rotary_plan(positions, model.config().strategy, model.rotary());
  const auto scaled = scale_positions(positions, alpha);
  return build_rotary_plan(scaled, model.config().strategy, model.rotary());
}

void check_inputs(const TinyLM& model, std::span<const TokenId> tokens, std::span<const HierPos> positions) {
  if (tokens.empty()) throw InvalidArgument("forward needs at least one token");
  if (tokens.size() != positions.size()) {
    throw InvalidArgument("forward: " + std::to_string(tokens.size()) + " tokens but " +
                          std::to_string(positions.size()) + " positions");
  }
  const auto vocab = static_cast<TokenId>(model.config().vocab);
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab) throw InvalidArgument("token id " + std::to_string(t) + " outside the vocabulary");
  }
}

Mat embed(const Params& p, std::span<const TokenId> tokens) {
  Mat x(static_cast<Eigen::Index>(tokens.size()), p.tok_emb.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) x.row(static_cast<Eigen::Index>(t)) = p.tok_emb.row(tokens[t]);
  return x;
}

// ---------------------------------------------------------------------------
// Training-path forward with cached activations.

struct LayerCache {
  Mat x_in;
  LnCache ln1;
  Mat h1;
  Mat v;
  Mat qn, kn, qf, kf;  // rotated queries/keys (near and far encodings)
  std::vector<Mat> probs;
  Mat attn;
  Mat x_mid;
  LnCache ln2;
  Mat h2, u, g;
};

struct SeqCache {
  RotaryPlan plan;
  std::vector<Eigen::Index> far;
  std::vector<LayerCache> layers;
  Mat x_final;
  LnCache lnf;
  Mat hf;
  Mat logits;
};

SeqCache forward_cached(const TinyLM& model, const Sequence& seq) {
  check_inputs(model, seq.tokens, seq.positions);
  const ModelConfig& cfg = model.config();
  const Params& p = model.params();
  const std::size_t hd = cfg.head_dim;
  const auto T = static_cast<Eigen::Index>(seq.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  SeqCache c;
  c.plan = plan_for(model, seq.positions);
  c.far = far_counts(c.plan);
  Mat x = embed(p, seq.tokens);
  c.layers.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const LayerParams& lp = p.layers[l];
    LayerCache& lc = c.layers[l];
    lc.x_in = x;
    lc.h1 = layer_norm(x, lp.ln1_g, lp.ln1_b, &lc.ln1);
    const Mat q = lc.h1 * lp.wq;
    const Mat k = lc.h1 * lp.wk;
    lc.v = lc.h1 * lp.wv;
    lc.qn = q;
    lc.kn = k;
    rotate_heads(lc.qn, c.plan.query_near, cfg.heads, hd, false);
    rotate_heads(lc.kn, c.plan.key_near, cfg.heads, hd, false);
    if (c.plan.has_far) {
      lc.qf = q;
      lc.kf = k;
      rotate_heads(lc.qf, c.plan.query_far, cfg.heads, hd, false);
      rotate_heads(lc.kf, c.plan.key_far, cfg.heads, hd, false);
    }
    lc.attn.resize(T, static_cast<Eigen::Index>(cfg.d_model()));
    lc.probs.resize(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const auto col = static_cast<Eigen::Index>(h * hd);
      const auto w = static_cast<Eigen::Index>(hd);
      Mat s = lc.qn.middleCols(col, w) * lc.kn.middleCols(col, w).transpose();
      if (c.plan.has_far) {
        const Mat sf = lc.qf.middleCols(col, w) * lc.kf.middleCols(col, w).transpose();
        for (Eigen::Index i = 0; i < T; ++i) {
          const Eigen::Index nf = c.far[static_cast<std::size_t>(i)];
          if (nf > 0) s.row(i).head(nf) = sf.row(i).head(nf);
        }
      }
      Mat& prob = lc.probs[h];
      prob.setZero(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        auto row = s.row(i).head(i + 1);
        const double mx = (row.array() * scale).maxCoeff();
        prob.row(i).head(i + 1) = ((row.array() * scale) - mx).exp();
        prob.row(i).head(i + 1) /= prob.row(i).head(i + 1).sum();
      }
      lc.attn.middleCols(col, w) = prob * lc.v.middleCols(col, w);
    }
    lc.x_mid = x + lc.attn * lp.wo;
    lc.h2 = layer_norm(lc.x_mid, lp.ln2_g, lp.ln2_b, &lc.ln2);
    lc.u = (lc.h2 * lp.w1).rowwise() + lp.b1.row(0);
    lc.g = gelu(lc.u);
    x = lc.x_mid + lc.g * lp.w2;
    x.rowwise() += lp.b2.row(0);
  }
  c.x_final = x;
  c.hf = layer_norm(x, p.lnf_g, p.lnf_b, &c.lnf);
  c.logits = (c.hf * p.w_out).rowwise() + p.b_out.row(0);
  return c;
}

// Returns summed NLL over positions 0..T-2 and writes d(sum NLL * weight)/dlogits.
double nll_and_grad(const Mat& logits, std::span<const TokenId> tokens, double weight, Mat* dlogits) {
  const Eigen::Index T = logits.rows();
  double total = 0.0;
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    const double mx = logits.row(t).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(t).array() - mx).exp();
    const double z = e.sum();
    const TokenId target = tokens[static_cast<std::size_t>(t + 1)];
    total += -(logits(t, target) - mx - std::log(z));
    if (dlogits) {
      dlogits->row(t) = e * (weight / z);
      (*dlogits)(t, target) -= weight;
    }
  }
  return total;
}

void backward(const TinyLM& model, const Sequence& seq, const SeqCache& c, const Mat& dlogits, Params& grads) {
  const ModelConfig& cfg = model.config();
  const Params& p = model.params();
  const std::size_t hd = cfg.head_dim;
  const Eigen::Index T = c.logits.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  grads.w_out.noalias() += c.hf.transpose() * dlogits;
  grads.b_out += dlogits.colwise().sum();
  Mat dx = layer_norm_backward(dlogits * p.w_out.transpose(), p.lnf_g, c.lnf, grads.lnf_g, grads.lnf_b);

  for (std::size_t l = cfg.layers; l-- > 0;) {
    const LayerParams& lp = p.layers[l];
    LayerParams& gp = grads.layers[l];
    const LayerCache& lc = c.layers[l];

    // Feed-forward block.
    gp.w2.noalias() += lc.g.transpose() * dx;
    gp.b2 += dx.colwise().sum();
    const Mat du = gelu_backward(lc.u, dx * lp.w2.transpose());
    gp.w1.noalias() += lc.h2.transpose() * du;
    gp.b1 += du.colwise().sum();
    Mat dx_mid = dx + layer_norm_backward(du * lp.w1.transpose(), lp.ln2_g, lc.ln2, gp.ln2_g, gp.ln2_b);

    // Attention block.
    gp.wo.noalias() += lc.attn.transpose() * dx_mid;
    const Mat dattn = dx_mid * lp.wo.transpose();
    Mat dqn = Mat::Zero(T, lc.qn.cols());
    Mat dkn = Mat::Zero(T, lc.kn.cols());
    Mat dqf, dkf;
    if (c.plan.has_far) {
      dqf = Mat::Zero(T, lc.qn.cols());
      dkf = Mat::Zero(T, lc.kn.cols());
    }
    Mat dv(T, lc.v.cols());
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const auto col = static_cast<Eigen::Index>(h * hd);
      const auto w = static_cast<Eigen::Index>(hd);
      const Mat& prob = lc.probs[h];
      const auto d_out = dattn.middleCols(col, w);
      dv.middleCols(col, w) = prob.transpose() * d_out;
      const Mat dprob = d_out * lc.v.middleCols(col, w).transpose();
      Mat ds = Mat::Zero(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        const double inner = prob.row(i).head(i + 1).dot(dprob.row(i).head(i + 1));
        ds.row(i).head(i + 1) =
            prob.row(i).head(i + 1).array() * (dprob.row(i).head(i + 1).array() - inner) * scale;
      }
      if (c.plan.has_far) {
        Mat ds_far = Mat::Zero(T, T);
        for (Eigen::Index i = 0; i < T; ++i) {
          const Eigen::Index nf = c.far[static_cast<std::size_t>(i)];
          if (nf > 0) {
            ds_far.row(i).head(nf) = ds.row(i).head(nf);
            ds.row(i).head(nf).setZero();
          }
        }
        dqf.middleCols(col, w).noalias() += ds_far * lc.kf.middleCols(col, w);
        dkf.middleCols(col, w).noalias() += ds_far.transpose() * lc.qf.middleCols(col, w);
      }
      dqn.middleCols(col, w).noalias() += ds * lc.kn.middleCols(col, w);
      dkn.middleCols(col, w).noalias() += ds.transpose() * lc.qn.middleCols(col, w);
    }
    rotate_heads(dqn, c.plan.query_near, cfg.heads, hd, true);
    rotate_heads(dkn, c.plan.key_near, cfg.heads, hd, true);
    if (c.plan.has_far) {
      rotate_heads(dqf, c.plan.query_far, cfg.heads, hd, true);
      rotate_heads(dkf, c.plan.key_far, cfg.heads, hd, true);
      dqn += dqf;
      dkn += dkf;
    }
    gp.wq.noalias() += lc.h1.transpose() * dqn;
    gp.wk.noalias() += lc.h1.transpose() * dkn;
    gp.wv.noalias() += lc.h1.transpose() * dv;
    const Mat dh1 = dqn * lp.wq.transpose() + dkn * lp.wk.transpose() + dv * lp.wv.transpose();
    dx = dx_mid + layer_norm_backward(dh1, lp.ln1_g, lc.ln1, gp.ln1_g, gp.ln1_b);
  }

  for (std::size_t t = 0; t < seq.size(); ++t) {
    grads.tok_emb.row(seq.tokens[t]) += dx.row(static_cast<Eigen::Index>(t));
  }
}

std::size_t predictions_in(std::span<const Sequence> batch) {
  std::size_t n = 0;
  for (const auto& s : batch) n += s.size() > 0 ? s.size() - 1 : 0;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------

void validate(const ModelConfig& cfg) {
  if (cfg.layers < 1 || cfg.heads < 1 || cfg.vocab < 1 || cfg.ff < 1) {
    throw InvalidArgument("model sizes must all be >= 1");
  }
  if (cfg.head_dim < 2 || cfg.head_dim % 2 != 0) throw InvalidArgument("head_dim must be even and >= 2");
  if (cfg.position_scale < 1) throw InvalidArgument("position scale must be >= 1");
  validate(cfg.strategy, RotaryConfig(cfg.head_dim, cfg.rope_base));
}

void Params::for_each(const std::function<void(const std::string&, Mat&)>& fn) {
  fn("tok_emb", tok_emb);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& lp = layers[l];
    const std::string pre = "layers." + std::to_string(l) + ".";
    fn(pre + "ln1_g", lp.ln1_g);
    fn(pre + "ln1_b", lp.ln1_b);
    fn(pre + "wq", lp.wq);
    fn(pre + "wk", lp.wk);
    fn(pre + "wv", lp.wv);
    fn(pre + "wo", lp.wo);
    fn(pre + "ln2_g", lp.ln2_g);
    fn(pre + "ln2_b", lp.ln2_b);
    fn(pre + "w1", lp.w1);
    fn(pre + "b1", lp.b1);
    fn(pre + "w2", lp.w2);
    fn(pre + "b2", lp.b2);
  }
  fn("lnf_g", lnf_g);
  fn("lnf_b", lnf_b);
  fn("w_out", w_out);
  fn("b_out", b_out);
}

void Params::for_each(const std::function<void(const std::string&, const Mat&)>& fn) const {
  const_cast<Params*>(this)->for_each([&](const std::string& name, Mat& m) { fn(name, m); });
}

std::size_t Params::count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

Params Params::zeros_like() const {
  Params z = *this;
  z.for_each([](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

TinyLM::TinyLM(ModelConfig cfg) : cfg_(std::move(cfg)), rotary_(cfg_.head_dim, cfg_.rope_base) {
  validate(cfg_);
  const auto D = static_cast<Eigen::Index>(cfg_.d_model());
  const auto V = static_cast<Eigen::Index>(cfg_.vocab);
  const auto F = static_cast<Eigen::Index>(cfg_.ff);
  std::mt19937_64 rng(cfg_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto init = [&](Eigen::Index r, Eigen::Index c, double stddev) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * normal(rng);
    return m;
  };
  const double std_w = 0.02;
  const double std_res = 0.02 / std::sqrt(2.0 * static_cast<double>(cfg_.layers));
  params_.tok_emb = init(V, D, std_w);
  params_.layers.resize(cfg_.layers);
  for (auto& lp : params_.layers) {
    lp.ln1_g = Mat::Ones(1, D);
    lp.ln1_b = Mat::Zero(1, D);
    lp.wq = init(D, D, std_w);
    lp.wk = init(D, D, std_w);
    lp.wv = init(D, D, std_w);
    lp.wo = init(D, D, std_res);
    lp.ln2_g = Mat::Ones(1, D);
    lp.ln2_b = Mat::Zero(1, D);
    lp.w1 = init(D, F, std_w);
    lp.b1 = Mat::Zero(1, F);
    lp.w2 = init(F, D, std_res);
    lp.b2 = Mat::Zero(1, D);
  }
  params_.lnf_g = Mat::Ones(1, D);
  params_.lnf_b = Mat::Zero(1, D);
  params_.w_out = init(D, V, std_w);
  params_.b_out = Mat::Zero(1, V);
}

std::vector<HierPos> scale_positions(std::span<const HierPos> positions, Position alpha) {
  if (alpha < 1) throw InvalidArgument("position scale must be >= 1");
  std::vector<HierPos> out(positions.begin(), positions.end());
  if (alpha == 1) return out;
  for (auto& p : out) {
    for (auto& v : p.levels) v *= alpha;
    p.global *= alpha;
  }
  return out;
}

Mat forward(const TinyLM& model, std::span<const TokenId> tokens, std::span<const HierPos> positions) {
  check_inputs(model, tokens, positions);
  const ModelConfig& cfg = model.config();
  const Params& p = model.params();
  const std::size_t hd = cfg.head_dim;
  const auto w = static_cast<Eigen::Index>(hd);
  const auto T = static_cast<Eigen::Index>(tokens.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  const RotaryPlan plan = plan_for(model, positions);
  const auto far = far_counts(plan);
  Mat x = embed(p, tokens);
  Eigen::VectorXd s(T);
  for (const LayerParams& lp : p.layers) {
    const Mat h1 = layer_norm(x, lp.ln1_g, lp.ln1_b, nullptr);
    const Mat q = h1 * lp.wq;
    const Mat k = h1 * lp.wk;
    const Mat v = h1 * lp.wv;
    Mat qn = q, kn = k, qf, kf;
    rotate_heads(qn, plan.query_near, cfg.heads, hd, false);
    rotate_heads(kn, plan.key_near, cfg.heads, hd, false);
    if (plan.has_far) {
      qf = q;
      kf = k;
      rotate_heads(qf, plan.query_far, cfg.heads, hd, false);
      rotate_heads(kf, plan.key_far, cfg.heads, hd, false);
    }
    Mat attn(T, x.cols());
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const auto col = static_cast<Eigen::Index>(h * hd);
      for (Eigen::Index i = 0; i < T; ++i) {
        const Eigen::Index nf = far[static_cast<std::size_t>(i)];
        auto scores = s.head(i + 1);
        if (nf > 0) {
          scores.head(nf).noalias() =
              kf.block(0, col, nf, w) * qf.block(i, col, 1, w).transpose();
        }
        scores.segment(nf, i + 1 - nf).noalias() =
            kn.block(nf, col, i + 1 - nf, w) * qn.block(i, col, 1, w).transpose();
        scores *= scale;
        scores.array() = (scores.array() - scores.maxCoeff()).exp();
        scores /= scores.sum();
        attn.block(i, col, 1, w).noalias() = scores.transpose() * v.block(0, col, i + 1, w);
      }
    }
    x += attn * lp.wo;
    const Mat h2 = layer_norm(x, lp.ln2_g, lp.ln2_b, nullptr);
    const Mat u = (h2 * lp.w1).rowwise() + lp.b1.row(0);
    x += gelu(u) * lp.w2;
    x.rowwise() += lp.b2.row(0);
  }
  const Mat hf = layer_norm(x, p.lnf_g, p.lnf_b, nullptr);
  return (hf * p.w_out).rowwise() + p.b_out.row(0);
}

Mat attention_weights(const TinyLM& model, const Sequence& seq, std::size_t layer, std::size_t head) {
  if (layer >= model.config().layers || head >= model.config().heads) {
    throw InvalidArgument("attention_weights: layer or head out of range");
  }
  return forward_cached(model, seq).layers[layer].probs[head];
}

LossAndGrads loss_and_grads(const TinyLM& model, std::span<const Sequence> batch) {
  if (batch.empty()) throw InvalidArgument("loss_and_grads needs a non-empty batch");
  LossAndGrads out;
  out.grads = model.params().zeros_like();
  out.predictions = predictions_in(batch);
  if (out.predictions == 0) return out;
  const double weight = 1.0 / static_cast<double>(out.predictions);
  double total = 0.0;
  Mat dlogits;
  for (const auto& seq : batch) {
    if (seq.size() < 2) continue;
    const SeqCache cache = forward_cached(model, seq);
    total += nll_and_grad(cache.logits, seq.tokens, weight, &dlogits);
    backward(model, seq, cache, dlogits, out.grads);
  }
  out.loss = total * weight;
  return out;
}

double batch_loss(const TinyLM& model, std::span<const Sequence> batch) {
  if (batch.empty()) throw InvalidArgument("batch_loss needs a non-empty batch");
  const std::size_t n = predictions_in(batch);
  if (n == 0) return 0.0;
  double total = 0.0;
  for (const auto& seq : batch) {
    if (seq.size() < 2) continue;
    total += nll_and_grad(forward_cached(model, seq).logits, seq.tokens, 1.0, nullptr);
  }
  return total / static_cast<double>(n);
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "rmsprop"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "adam") return OptimizerKind::Adam;
  if (text == "rmsprop") return OptimizerKind::RMSProp;
  throw InvalidArgument("unknown optimizer '" + std::string(text) + "' (expected adam or rmsprop)");
}

void validate(const TrainConfig& cfg) {
  if (cfg.train_len < 2) throw InvalidArgument("train_len must be >= 2");
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (cfg.position_scale < 1) throw InvalidArgument("position scale must be >= 1");
  if (!(cfg.min_lr_ratio >= 0.0 && cfg.min_lr_ratio <= 1.0)) throw InvalidArgument("min_lr_ratio must lie in [0, 1]");
}

TrainResult train(TinyLM& model, const TrainConfig& cfg, std::span<const Sequence> corpus,
                  const std::function<void(std::size_t, double)>& on_step) {
  validate(cfg);
  TrainResult result;
  if (cfg.steps == 0) return result;
  if (corpus.empty()) throw InvalidArgument("training corpus is empty");
  model.mutable_config().position_scale = cfg.position_scale;

  std::vector<Sequence> data;
  data.reserve(corpus.size());
  for (const auto& s : corpus) data.push_back(truncate(s, cfg.train_len));

  Params m1 = model.params().zeros_like();
  Params m2 = model.params().zeros_like();
  std::mt19937_64 rng(cfg.data_seed);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();

  std::vector<Sequence> batch;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }

    LossAndGrads lg = loss_and_grads(model, batch);
    if (!std::isfinite(lg.loss)) {
      throw TrainingDiverged("non-finite loss " + std::to_string(lg.loss) + " at step " + std::to_string(step));
    }
    result.losses.push_back(lg.loss);
    if (on_step) on_step(step, lg.loss);

    double norm2 = 0.0;
    lg.grads.for_each([&](const std::string&, const Mat& g) { norm2 += g.squaredNorm(); });
    if (!std::isfinite(norm2)) {
      throw TrainingDiverged("non-finite gradient norm at step " + std::to_string(step));
    }
    const double clip = cfg.grad_clip > 0.0 && std::sqrt(norm2) > cfg.grad_clip ? cfg.grad_clip / std::sqrt(norm2) : 1.0;

    double lr = cfg.learning_rate;
    if (step < cfg.warmup_steps) {
      lr *= static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
    } else if (cfg.steps > cfg.warmup_steps) {
      const double progress = static_cast<double>(step - cfg.warmup_steps) /
                              static_cast<double>(cfg.steps - cfg.warmup_steps);
      const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      lr *= cfg.min_lr_ratio + (1.0 - cfg.min_lr_ratio) * cosine;
    }
    const double t = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    std::vector<Mat*> grads, firsts, seconds;
    lg.grads.for_each([&](const std::string&, Mat& g) { grads.push_back(&g); });
    m1.for_each([&](const std::string&, Mat& m) { firsts.push_back(&m); });
    m2.for_each([&](const std::string&, Mat& m) { seconds.push_back(&m); });
    std::size_t idx = 0;
    model.params().for_each([&](const std::string&, Mat& w) {
      const Mat g = *grads[idx] * clip;
      Mat& v = *seconds[idx];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      const auto denom = (v.array() / bc2).sqrt() + cfg.eps;
      if (cfg.optimizer == OptimizerKind::Adam) {
        Mat& m = *firsts[idx];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        w.array() -= lr * (m.array() / bc1) / denom;
      } else {
        w.array() -= lr * g.array() / denom;
      }
      ++idx;
    });
  }
  return result;
}

SequenceScores score_sequence(const TinyLM& model, const Sequence& seq) {
  SequenceScores out;
  if (seq.size() < 2) return out;
  const Mat logits = forward(model, seq.tokens, seq.positions);
  const Eigen::Index T = logits.rows();
  out.nll.reserve(static_cast<std::size_t>(T - 1));
  out.correct.reserve(static_cast<std::size_t>(T - 1));
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    Eigen::Index best = 0;
    const double mx = logits.row(t).maxCoeff(&best);
    const double z = (logits.row(t).array() - mx).exp().sum();
    const TokenId target = seq.tokens[static_cast<std::size_t>(t + 1)];
    out.nll.push_back(-(logits(t, target) - mx - std::log(z)));
    out.correct.push_back(best == target);
  }
  return out;
}

std::vector<LengthEval> evaluate_lengths(const TinyLM& model, std::span<const std::size_t> lengths,
                                         const SyntheticTaskConfig& task, std::uint64_t seed,
                                         std::size_t sequences_per_length) {
  if (sequences_per_length < 1) throw InvalidArgument("need at least one sequence per length");
  std::vector<LengthEval> out;
  for (std::size_t len : lengths) {
    if (len < 2) throw InvalidArgument("evaluation lengths must be >= 2");
    LengthEval row;
    row.length = len;
    row.sequences = sequences_per_length;
    double total = 0.0;
    std::size_t hits = 0;
    std::seed_seq mix{seed, static_cast<std::uint64_t>(len)};
    std::vector<std::uint64_t> seeds(sequences_per_length);
    mix.generate(seeds.begin(), seeds.end());
    for (std::uint64_t s : seeds) {
      const SequenceScores sc = score_sequence(model, generate_sequence(task, len, s));
      for (std::size_t i = 0; i < sc.nll.size(); ++i) {
        total += sc.nll[i];
        hits += sc.correct[i] ? 1 : 0;
      }
      row.tokens += sc.nll.size();
    }
    row.loss = total / static_cast<double>(row.tokens);
    row.ppl = std::exp(row.loss);
    row.acc = static_cast<double>(hits) / static_cast<double>(row.tokens);
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kMagic[8] = {'H', 'R', 'L', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw InvalidArgument("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const TinyLM& model, const std::string& path) {
  nlohmann::json header;
  header["format"] = "hirope-tinylm";
  header["config"] = to_json(model.config());
  auto tensors = nlohmann::json::array();
  model.params().for_each([&](const std::string& name, const Mat& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  model.params().for_each([&](const std::string&, const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) write_le<double>(out, m.data()[i]);
  });
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

TinyLM load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InvalidArgument(path + " is not a tinylm checkpoint");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw InvalidArgument("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_le<std::uint64_t>(in);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw InvalidArgument("checkpoint truncated");
  const auto header = nlohmann::json::parse(text);
  TinyLM model(model_config_from_json(header.at("config")));
  const auto& tensors = header.at("tensors");
  std::size_t idx = 0;
  model.params().for_each([&](const std::string& name, Mat& m) {
    if (idx >= tensors.size()) throw InvalidArgument("checkpoint lists too few tensors");
    const auto& t = tensors[idx++];
    if (t.at("name").get<std::string>() != name || t.at("rows").get<Eigen::Index>() != m.rows() ||
        t.at("cols").get<Eigen::Index>() != m.cols()) {
      throw InvalidArgument("checkpoint tensor " + t.at("name").get<std::string>() + " does not match the model");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = read_le<double>(in);
  });
  if (idx != tensors.size()) throw InvalidArgument("checkpoint lists extra tensors");
  return model;
}

}  // namespace hirope
