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

#include "hirope/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "json.hpp"

namespace hirope {

void validate(const SyntheticTaskConfig& cfg) {
  if (cfg.min_segment_len < 2 || cfg.max_segment_len < cfg.min_segment_len) {
    throw InvalidArgument("segment length range must satisfy 2 <= min <= max");
  }
  if (cfg.ident_vocab < 2 || cfg.value_vocab < 1 || cfg.body_vocab < 1) {
    throw InvalidArgument("synthetic vocabularies must be non-empty (ident_vocab >= 2)");
  }
  if (cfg.min_motif < 1 || cfg.max_motif < cfg.min_motif) {
    throw InvalidArgument("motif length range must satisfy 1 <= min <= max");
  }
  if (!(cfg.query_rate >= 0.0 && cfg.query_rate <= 1.0)) {
    throw InvalidArgument("query_rate must lie in [0, 1]");
  }
  if (cfg.seq_len < 2) throw InvalidArgument("sequence length must be >= 2");
}

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

class SequenceBuilder {
 public:
  SequenceBuilder(const SyntheticTaskConfig& cfg, std::size_t length, std::uint64_t seed)
      : cfg_(cfg), length_(length), rng_(seed) {
    // Fresh identifiers come from a shuffled pool; once exhausted the
    // least recently bound identifier is rebound.
    pool_.resize(cfg.ident_vocab);
    for (std::size_t i = 0; i < pool_.size(); ++i) pool_[i] = synth::kFirstIdent + static_cast<TokenId>(i);
    std::shuffle(pool_.begin(), pool_.end(), rng_);
    binding_.assign(cfg.ident_vocab, -1);
  }

  Sequence build() {
    push(synth::kBos);
    while (seq_.size() < length_) {
      if (cfg_.segments_per_sequence > 0 && segment_ >= cfg_.segments_per_sequence) break;
      emit_segment();
    }
    return std::move(seq_);
  }

 private:
  void push(TokenId t) {
    if (seq_.size() >= length_) return;
    seq_.tokens.push_back(t);
    seq_.positions.push_back(
        HierPos{{static_cast<Position>(segment_), within_++}, static_cast<Position>(seq_.size() - 1)});
  }

  TokenId fresh_ident() {
    TokenId id;
    if (next_fresh_ < pool_.size()) {
      id = pool_[next_fresh_++];
    } else {
      id = bind_order_.front();
      bind_order_.erase(bind_order_.begin());
    }
    return id;
  }

  void emit_segment() {
    ++segment_;
    within_ = 0;
    const std::size_t len = uniform(rng_, cfg_.min_segment_len, cfg_.max_segment_len);
    const std::size_t start = seq_.size();

    const TokenId ident = fresh_ident();
    const auto value = static_cast<TokenId>(cfg_.first_value() + uniform(rng_, 0, cfg_.value_vocab - 1));
    push(synth::kDef);
    push(ident);
    // Live earlier bindings, captured before this segment binds its own.
    const std::vector<TokenId> live = bind_order_;
    push(value);
    if (seq_.size() == start + 3) {
      binding_[ident - synth::kFirstIdent] = value;
      bind_order_.push_back(ident);
    }

    const bool query = len >= 6 && !live.empty() &&
                       std::bernoulli_distribution(cfg_.query_rate)(rng_);
    const std::size_t body_len = len - std::min<std::size_t>(len, 3 + (query ? 3 : 0));
    if (body_len > 0) {
      const std::size_t period = uniform(rng_, cfg_.min_motif, cfg_.max_motif);
      std::vector<TokenId> motif(period);
      for (auto& m : motif) m = static_cast<TokenId>(cfg_.first_body() + uniform(rng_, 0, cfg_.body_vocab - 1));
      for (std::size_t i = 0; i < body_len; ++i) push(motif[i % period]);
    }
    if (query) {
      const TokenId target = live[uniform(rng_, 0, live.size() - 1)];
      push(synth::kRef);
      push(target);
      push(binding_[target - synth::kFirstIdent]);
    }
  }

  const SyntheticTaskConfig& cfg_;
  std::size_t length_;
  std::mt19937_64 rng_;
  Sequence seq_;
  std::size_t segment_ = 0;
  Position within_ = 0;
  std::vector<TokenId> pool_;
  std::size_t next_fresh_ = 0;
  std::vector<TokenId> binding_;
  std::vector<TokenId> bind_order_;  // oldest first
};

}  // namespace

Sequence generate_sequence(const SyntheticTaskConfig& cfg, std::size_t length, std::uint64_t seed) {
  validate(cfg);
  if (length < 1) throw InvalidArgument("sequence length must be >= 1");
  return SequenceBuilder(cfg, length, seed).build();
}

std::vector<Sequence> generate_corpus(const SyntheticTaskConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 seeder(seed);
  std::vector<Sequence> out;
  out.reserve(cfg.num_sequences);
  for (std::size_t i = 0; i < cfg.num_sequences; ++i) {
    out.push_back(SequenceBuilder(cfg, cfg.seq_len, seeder()).build());
  }
  return out;
}

Sequence truncate(const Sequence& s, std::size_t length) {
  if (length >= s.size()) return s;
  Sequence out;
  out.tokens.assign(s.tokens.begin(), s.tokens.begin() + static_cast<std::ptrdiff_t>(length));
  out.positions.assign(s.positions.begin(), s.positions.begin() + static_cast<std::ptrdiff_t>(length));
  return out;
}

void write_corpus(std::ostream& out, std::span<const Sequence> corpus) {
  for (const auto& s : corpus) {
    std::vector<std::size_t> seg_lengths;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i == 0 || s.positions[i].levels[0] != s.positions[i - 1].levels[0]) seg_lengths.push_back(0);
      ++seg_lengths.back();
    }
    nlohmann::json j = {{"tokens", s.tokens}, {"segments", seg_lengths}};
    out << j.dump() << '\n';
  }
}

std::vector<Sequence> read_corpus(std::istream& in) {
  std::vector<Sequence> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sequence s;
      s.tokens = j.at("tokens").get<std::vector<TokenId>>();
      const auto seg_lengths = j.at("segments").get<std::vector<std::size_t>>();
      Position global = 0;
      for (std::size_t seg = 0; seg < seg_lengths.size(); ++seg) {
        for (std::size_t t = 0; t < seg_lengths[seg]; ++t) {
          s.positions.push_back(HierPos{{static_cast<Position>(seg), static_cast<Position>(t)}, global++});
        }
      }
      if (s.positions.size() != s.tokens.size()) {
        throw InvalidArgument("segment lengths do not add up to the token count");
      }
      corpus.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void write_corpus_file(const std::string& path, std::span<const Sequence> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_corpus(out, corpus);
}

std::vector<Sequence> read_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_corpus(in);
}

}  // namespace hirope
