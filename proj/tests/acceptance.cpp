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

// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "hirope/config_io.hpp"
#include "hirope/dim_analyzer.hpp"
#include "hirope/hier.hpp"
#include "hirope/metrics.hpp"
#include "hirope/rope.hpp"
#include "hirope/synthetic.hpp"
#include "hirope/tinylm.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hirope;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

std::vector<std::int64_t> levels_of(const HierPos& p) { return {p.levels.begin(), p.levels.end()}; }

std::vector<HierPos> two_level(const std::vector<std::size_t>& segments) {
  std::vector<HierPos> out;
  Position g = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (std::size_t t = 0; t < segments[s]; ++t) {
      out.push_back(HierPos{{static_cast<Position>(s), static_cast<Position>(t)}, g++});
    }
  }
  return out;
}

std::vector<std::size_t> random_segments(std::mt19937_64& rng, std::size_t tokens) {
  std::vector<std::size_t> segs;
  while (tokens > 0) {
    const std::size_t n = std::min<std::size_t>(tokens, 1 + rng() % 6);
    segs.push_back(n);
    tokens -= n;
  }
  return segs;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

int run(const std::string& cmd, const fs::path& stdout_file) {
  const std::string full = cmd + " > " + quote(stdout_file.string()) + " 2> " + quote(stdout_file.string() + ".err");
  const int status = std::system(full.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

const std::string kCli = quote(HIROPE_CLI);

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_rope = 0.0, worst_hier = 0.0;
  std::size_t rope_cases = 0, hier_cases = 0;
  for (std::size_t d : {2u, 4u, 64u, 128u}) {
    const RotaryConfig cfg(d);
    for (int trial = 0; trial < 300; ++trial) {
      const auto q = oracle::random_vector(rng, d);
      const auto k = oracle::random_vector(rng, d);
      const Position m = static_cast<Position>(rng() % 20000);
      const Position n = static_cast<Position>(rng() % 20000);
      worst_rope = std::max(worst_rope, std::abs(rope_score(q, k, m, n, cfg) - oracle::rope(q, k, m, n)));
      ++rope_cases;

      const std::size_t depth = 1 + rng() % std::min<std::size_t>(3, d / 2);
      std::vector<std::size_t> counts(depth, 1);
      for (std::size_t extra = d / 2 - depth; extra > 0; --extra) ++counts[rng() % depth];
      const DimSplit split(counts);
      HierPos pq, pk;
      for (std::size_t l = 0; l < depth; ++l) {
        pq.levels.push_back(static_cast<Position>(rng() % 3000));
        pk.levels.push_back(static_cast<Position>(rng() % 3000));
      }
      pq.global = depth == 1 ? pq.levels[0] : static_cast<Position>(rng() % 100000);
      pk.global = depth == 1 ? pk.levels[0] : static_cast<Position>(rng() % 100000);
      const double got = hirope_score(q, k, pq, pk, split, cfg);
      const double want = depth == 1 ? oracle::rope(q, k, pq.global, pk.global)
                                     : oracle::hier(q, k, levels_of(pq), levels_of(pk), oracle::level_map(counts));
      worst_hier = std::max(worst_hier, std::abs(got - want));
      ++hier_cases;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = rope_cases >= 1000 && hier_cases >= 1000 && worst_rope <= 1e-9 && worst_hier <= 1e-9 && elapsed < 10.0;
  return {pass, "rope " + std::to_string(rope_cases) + " cases max diff " + fmt(worst_rope) + ", hirope " +
                    std::to_string(hier_cases) + " cases max diff " + fmt(worst_hier) + ", " + fmt(elapsed) + " s"};
}

Outcome degeneracy() {
  std::mt19937_64 rng(1002);
  double worst_single = 0.0, worst_window = 0.0;
  for (std::size_t d : {2u, 4u, 16u, 64u, 128u}) {
    const RotaryConfig cfg(d);
    for (const DimSplit& split : {DimSplit({d / 2}), DimSplit::from_ratio(d, 1.0)}) {
      for (int trial = 0; trial < 200; ++trial) {
        const auto q = oracle::random_vector(rng, d);
        const auto k = oracle::random_vector(rng, d);
        const Position m = static_cast<Position>(rng() % 50000);
        const Position n = static_cast<Position>(rng() % 50000);
        const double diff =
            std::abs(hirope_score(q, k, HierPos::flat(m), HierPos::flat(n), split, cfg) - rope_score(q, k, m, n, cfg));
        worst_single = std::max(worst_single, diff);
      }
    }
  }
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 2 * (2 + rng() % 15);
    const RotaryConfig cfg(d);
    const std::size_t tokens = 1 + rng() % 40;
    const auto pos = two_level(random_segments(rng, tokens));
    std::vector<EmbeddingVector> qs, ks;
    for (std::size_t i = 0; i < tokens; ++i) {
      qs.push_back(oracle::random_vector(rng, d));
      ks.push_back(oracle::random_vector(rng, d));
    }
    const Position window = static_cast<Position>(tokens + rng() % 10);
    const PositionStrategy hi = strategy::HiRoPE{DimSplit::half(d), WindowConfig{window}};
    const auto a = attention_scores(qs, ks, pos, hi, cfg);
    const auto b = attention_scores(qs, ks, pos, strategy::Origin{}, cfg);
    for (std::size_t i = 0; i < tokens; ++i) {
      for (std::size_t j = 0; j <= i; ++j) worst_window = std::max(worst_window, std::abs(a(i, j) - b(i, j)));
    }
  }
  return {worst_single <= 1e-12 && worst_window <= 1e-12,
          "single-level max diff " + fmt(worst_single) + ", window >= length max diff " + fmt(worst_window)};
}

Outcome shift_invariance() {
  std::mt19937_64 rng(1003);
  double worst_rope = 0.0, worst_level = 0.0;
  for (std::size_t d : {2u, 4u, 64u, 128u}) {
    const RotaryConfig cfg(d);
    for (int trial = 0; trial < 300; ++trial) {
      const auto q = oracle::random_vector(rng, d);
      const auto k = oracle::random_vector(rng, d);
      const Position m = static_cast<Position>(rng() % 10000);
      const Position n = static_cast<Position>(rng() % 10000);
      const Position s = static_cast<Position>(rng() % 1000000);
      worst_rope = std::max(worst_rope, std::abs(rope_score(q, k, m + s, n + s, cfg) - rope_score(q, k, m, n, cfg)));

      if (d < 4) continue;
      const DimSplit split = DimSplit::half(d);
      HierPos pq{{static_cast<Position>(rng() % 500), static_cast<Position>(rng() % 500)}, 0};
      HierPos pk{{static_cast<Position>(rng() % 500), static_cast<Position>(rng() % 500)}, 0};
      const double base = hirope_score(q, k, pq, pk, split, cfg);
      const std::size_t level = rng() % 2;
      pq.levels[level] += s;
      pk.levels[level] += s;
      worst_level = std::max(worst_level, std::abs(hirope_score(q, k, pq, pk, split, cfg) - base));
    }
  }
  return {worst_rope <= 1e-12 && worst_level <= 1e-12,
          "global shift max diff " + fmt(worst_rope) + ", per-level shift max diff " + fmt(worst_level)};
}

Outcome split_table() {
  struct Row {
    std::size_t len;
    std::size_t dim;
    double fraction;
    double split_dim;
  };
  const std::vector<Row> rows = {{4096, 128, 0.70, 90.05}, {2048, 64, 0.63, 40.21}, {2048, 128, 0.63, 80.42}};
  bool pass = true;
  std::string detail;
  for (const Row& r : rows) {
    const SplitReport rep = reliable_split(static_cast<double>(r.len), RotaryConfig(r.dim));
    const bool ok = std::abs(rep.fraction - r.fraction) <= 0.01 && std::abs(rep.split_dim - r.split_dim) <= 0.01;
    pass = pass && ok;
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << "(" << r.len << "," << r.dim << ") -> " << rep.fraction << "/" << rep.split_dim;
    detail += (detail.empty() ? "" : "; ") + ss.str();
  }
  return {pass, detail};
}

Outcome window_correctness() {
  std::mt19937_64 rng(1005);
  const std::size_t d = 8;
  const RotaryConfig cfg(d);
  double worst = 0.0;
  std::size_t entries = 0;
  for (std::size_t first = 1; first < 8; ++first) {
    const auto pos = two_level({first, 8 - first});
    for (const auto& counts : std::vector<std::vector<std::size_t>>{{2, 2}, {1, 3}, {3, 1}}) {
      const DimSplit split(counts);
      for (Position window = 1; window <= 9; ++window) {
        std::vector<EmbeddingVector> qs, ks;
        for (std::size_t i = 0; i < 8; ++i) {
          qs.push_back(oracle::random_vector(rng, d));
          ks.push_back(oracle::random_vector(rng, d));
        }
        const PositionStrategy s = strategy::HiRoPE{split, WindowConfig{window}};
        const auto scores = attention_scores(qs, ks, pos, s, cfg);
        for (std::size_t i = 0; i < 8; ++i) {
          for (std::size_t j = 0; j <= i; ++j) {
            const double want = windowed_score(qs[i], ks[j], pos[i], pos[j], split, WindowConfig{window}, cfg);
            worst = std::max(worst, std::abs(scores(i, j) - want));
            ++entries;
          }
        }
      }
    }
  }
  return {worst <= 1e-12 && entries > 0,
          std::to_string(entries) + " entries over all 2-segment splits and windows 1..9, max diff " + fmt(worst)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.vocab = 24;
  cfg.ff = 48;
  cfg.seed = 7;
  cfg.strategy = strategy::HiRoPE{DimSplit::half(cfg.head_dim), WindowConfig{3}};
  TinyLM model(cfg);
  std::mt19937_64 rng(1006);
  std::normal_distribution<double> normal(0.0, 0.1);
  model.params().for_each([&](const std::string& name, Mat& m) {
    const bool gain = name.find("_g") != std::string::npos;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (gain ? 1.0 : 0.0) + normal(rng);
  });
  std::vector<Sequence> batch;
  for (const auto& segs : std::vector<std::vector<std::size_t>>{{3, 4, 3}, {2, 5}}) {
    Sequence s;
    s.positions = two_level(segs);
    for (std::size_t i = 0; i < s.positions.size(); ++i) s.tokens.push_back(static_cast<TokenId>(rng() % cfg.vocab));
    batch.push_back(s);
  }
  const LossAndGrads lg = loss_and_grads(model, batch);
  std::vector<const Mat*> grads;
  lg.grads.for_each([&](const std::string&, const Mat& g) { grads.push_back(&g); });
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0, idx = 0;
  model.params().for_each([&](const std::string& name, Mat& w) {
    const Mat& g = *grads[idx++];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double numeric = oracle::central_difference([&] { return batch_loss(model, batch); }, &w.data()[i], 1e-5);
      const double rel = std::abs(numeric - g.data()[i]) / std::max({std::abs(numeric), std::abs(g.data()[i]), 1e-6});
      ++checked;
      if (rel > worst) {
        worst = rel;
        worst_name = name;
      }
    }
  });
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-4 && checked == model.params().count() && elapsed < 300.0,
          std::to_string(checked) + " parameters, worst relative error " + fmt(worst) + " (" + worst_name + "), " +
              fmt(elapsed) + " s"};
}

struct RunSummary {
  double in_length = 0.0;
  double at_eval = 0.0;
  std::vector<LengthEval> curve;
};

RunSummary train_and_evaluate(const std::vector<std::string>& overrides, const std::vector<std::size_t>& lengths) {
  KeyValueConfig kv;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  const ModelConfig mcfg = model_config_from(kv);
  const TrainConfig tcfg = train_config_from(kv);
  const SyntheticTaskConfig task = task_config_from(kv);
  TinyLM model(mcfg);
  const auto corpus = generate_corpus(task, kv.get_u64("corpus_seed", 1));
  train(model, tcfg, corpus);
  RunSummary r;
  r.curve = evaluate_lengths(model, lengths, task, 99, 8);
  r.in_length = r.curve.front().loss;
  for (const auto& e : r.curve) {
    if (e.length == 512) r.at_eval = e.loss;
  }
  return r;
}

Outcome extrapolation() {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> lengths = {128, 256, 512, 1024, 2048, 4096};
  const RunSummary origin = train_and_evaluate({"strategy=origin"}, lengths);
  const RunSummary hi = train_and_evaluate({"strategy=hirope", "window=16"}, lengths);
  const double elapsed = seconds_since(t0);
  const double ro = origin.at_eval / origin.in_length;
  const double rh = hi.at_eval / hi.in_length;
  std::cout << "  length  origin_loss  hirope_loss\n";
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    std::printf("  %6zu  %11.4f  %11.4f\n", lengths[i], origin.curve[i].loss, hi.curve[i].loss);
  }
  return {ro >= 2.0 && rh <= 1.3 && elapsed <= 1800.0,
          "origin 512/128 loss ratio " + fmt(ro) + " (need >= 2), hirope ratio " + fmt(rh) + " (need <= 1.3), " +
              fmt(elapsed) + " s"};
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome symbol_self_consistency(const fs::path& work) {
  const std::string corpus = std::string(HIROPE_FIXTURES) + "/corpus";
  const fs::path tasks = work / "symbol_tasks.jsonl";
  if (run(kCli + " build-symbol-task --corpus " + quote(corpus) + " -o " + quote(tasks.string()), work / "build.out") != 0) {
    return {false, "build-symbol-task failed"};
  }
  if (run(kCli + " eval-symbol --tasks " + quote(tasks.string()) + " --gold-as-prediction", work / "recall.tsv") != 0) {
    return {false, "eval-symbol failed"};
  }
  const auto rows = read_tsv(work / "recall.tsv");
  std::string recall = "missing";
  std::string records = "0";
  for (const auto& r : rows) {
    if (r.size() >= 3 && r[0] == "all") {
      records = r[1];
      recall = r[2];
    }
  }
  const int recount = run(quote(HIROPE_PYTHON) + " " + quote(HIROPE_RECOUNT) + " --cli " + kCli + " --corpus " + quote(corpus),
                          work / "recount.out");
  const bool recall_ok = recall != "missing" && std::stod(recall) == 1.0 && records != "0";
  return {recall_ok && recount == 0, "gold-as-prediction recall " + recall + " over " + records +
                                         " records, recount " + (recount == 0 ? "matches" : "differs")};
}

Outcome metric_spot_checks() {
  const double es = edit_similarity("abc", "axc");
  const bool es_ok = std::abs(es - 0.6667) <= 1e-4;

  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  double worst_ppl = 0.0;
  std::size_t rows = 0;
  auto check_row = [&](double loss, double ppl) {
    worst_ppl = std::max(worst_ppl, std::abs(ppl - std::exp(loss)) / std::exp(loss));
    ++rows;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> nll(n);
    std::unique_ptr<bool[]> correct(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) {
      nll[i] = u(rng);
      correct[i] = rng() % 2;
    }
    const LmReport rep = lm_metrics(nll, std::span<const bool>(correct.get(), n), 1 + rng() % 64);
    check_row(rep.all.loss, rep.all.ppl);
    check_row(rep.last.loss, rep.last.ppl);
  }
  ModelConfig cfg;
  cfg.vocab = 512;
  cfg.strategy = strategy::HiRoPE{DimSplit::half(cfg.head_dim), WindowConfig{16}};
  const TinyLM model(cfg);
  const std::vector<std::size_t> lengths = {32, 64};
  for (const auto& e : evaluate_lengths(model, lengths, SyntheticTaskConfig{}, 5, 2)) check_row(e.loss, e.ppl);
  const bool ppl_ok = worst_ppl <= 1e-12;

  const std::vector<std::size_t> lens = {0, 2047, 2048, 4095, 4096, 8191, 8192, 16383, 16384};
  const Buckets b = bucket_by_length(lens, default_bucket_edges());
  std::vector<std::string> placement(lens.size());
  for (const auto& bucket : b.buckets) {
    for (std::size_t m : bucket.members) placement[m] += bucket.label();
  }
  for (std::size_t m : b.overflow) placement[m] += "overflow";
  const std::vector<std::string> expected = {"0-2048",         "0-2048",         "2048-4096",
                                             "2048-4096",      "4096-8192",      "4096-8192",
                                             "8192-16384",     "8192-16384",     "overflow"};
  const bool buckets_ok = placement == expected;
  return {es_ok && ppl_ok && buckets_ok, "edit_sim(abc,axc) = " + fmt(es) + ", ppl vs exp(loss) worst rel diff " +
                                             fmt(worst_ppl) + " over " + std::to_string(rows) + " rows, buckets " +
                                             (buckets_ok ? "half-open" : "wrong")};
}

Outcome determinism(const fs::path& work) {
  std::vector<std::string> losses, ckpts, corpora;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = work / ("determinism_" + std::to_string(r));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path corpus = dir / "corpus.jsonl";
    if (run(kCli + " gen-corpus --seed 17 --num-sequences 64 -o " + quote(corpus.string()), dir / "gen.out") != 0) {
      return {false, "gen-corpus failed"};
    }
    if (run(kCli + " train -q --corpus " + quote(corpus.string()) + " -o " + quote((dir / "run").string()) +
                " --steps 25 --strategy hirope --window 16 --data-seed 3 --model-seed 4",
            dir / "train.out") != 0) {
      return {false, "train failed"};
    }
    corpora.push_back(read_bytes(corpus));
    losses.push_back(read_bytes(dir / "run" / "loss.csv"));
    ckpts.push_back(read_bytes(dir / "run" / "model.ckpt"));
  }
  const bool pass = !losses[0].empty() && !ckpts[0].empty() && corpora[0] == corpora[1] && losses[0] == losses[1] &&
                    ckpts[0] == ckpts[1];
  return {pass, std::string("corpus ") + (corpora[0] == corpora[1] ? "identical" : "differs") + ", loss curve " +
                    (losses[0] == losses[1] ? "identical" : "differs") + ", checkpoint " +
                    (ckpts[0] == ckpts[1] ? "identical" : "differs") + " (" + std::to_string(ckpts[0].size()) +
                    " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HiRoPE acceptance checks"};
  std::string workdir = (fs::temp_directory_path() / "hirope_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Scratch directory for CLI runs");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const fs::path work(workdir);
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "degeneracy", degeneracy},
      {3, "shift invariance", shift_invariance},
      {4, "split table", split_table},
      {5, "window correctness", window_correctness},
      {6, "gradient check", gradient_check},
      {7, "extrapolation", extrapolation},
      {8, "symbol task self-consistency", [&] { return symbol_self_consistency(work); }},
      {9, "metric spot checks", metric_spot_checks},
      {10, "determinism", [&] { return determinism(work); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
