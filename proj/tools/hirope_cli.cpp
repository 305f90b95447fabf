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

// Command-line front end: position analysis, code segmentation, task
// building, synthetic training and evaluation.

#include <Eigen/Core>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hirope/code_hierarchy.hpp"
#include "hirope/config_io.hpp"
#include "hirope/dim_analyzer.hpp"
#include "hirope/hier.hpp"
#include "hirope/metrics.hpp"
#include "hirope/records.hpp"
#include "hirope/report.hpp"
#include "hirope/synthetic.hpp"
#include "hirope/tinylm.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hirope;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand: a config file, free-form overrides, and
// named flags that map onto config keys. Precedence: flags > --set > file.
struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keyed;
  std::map<std::string, CLI::Option*> keyed_opts;

  void keyed_option(const std::string& flag, const std::string& key, const std::string& help) {
    keyed_opts[key] = app->add_option(flag, keyed[key], help);
  }

  KeyValueConfig resolve() const {
    KeyValueConfig kv = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::from_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, opt] : keyed_opts) {
      if (opt->count() > 0) kv.set(key, keyed.at(key));
    }
    return kv;
  }
};

Command make_command(CLI::App& root, const std::string& name, const std::string& description) {
  Command c;
  c.app = root.add_subcommand(name, description);
  c.app->add_option("-c,--config", c.config_path, "key = value config file");
  return c;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::size_t> size_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    KeyValueConfig one;
    one.set(key, item);
    out.push_back(one.get_size(key, 0));
  }
  return out;
}

std::vector<double> double_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    KeyValueConfig one;
    one.set(key, item);
    out.push_back(one.get_double(key, 0.0));
  }
  return out;
}

std::vector<std::size_t> edges_from(const KeyValueConfig& kv) {
  return kv.has("edges") ? size_list("edges", kv.get_string("edges", "")) : default_bucket_edges();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

// Writes to the file at path, or to stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::string build_info() {
  return std::string("hirope ") + kVersion + " (Eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." +
         std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION) + ", " + __VERSION__ + ")";
}

// ---------------------------------------------------------------------------

int run_analyze_dims(const KeyValueConfig& kv, const std::string& format) {
  const RotaryConfig cfg(kv.get_size("head_dim", 128), kv.get_double("rope_base", kDefaultRopeBase));
  const SplitReport r = reliable_split(kv.get_double("pretrain_len", 4096), cfg);
  const bool periods = kv.get_string("periods", "0") == "1";
  if (format == "tsv") {
    std::cout << split_report_table(r).to_tsv();
    if (periods) std::cout << '\n' << period_table(r).to_tsv();
  } else {
    std::cout << split_report_table(r, 2).to_aligned();
    if (periods) std::cout << '\n' << period_table(r).to_aligned();
  }
  return 0;
}

std::vector<TokenSpan> spans_and_segments(const std::string& source, const KeyValueConfig& kv,
                                          SegmentationResult& seg) {
  const auto strategy = parse_segmentation_strategy(kv.get_string("segmentation", "function"));
  auto spans = simple_tokenize(source);
  seg = parse_segments(source, strategy, spans);
  if (seg.fallback) {
    nlohmann::json w = {{"warning", "parse_fallback"}, {"message", seg.warning}};
    std::cerr << w.dump() << '\n';
  }
  return spans;
}

int run_segment(const KeyValueConfig& kv, const std::string& source_path) {
  const std::string source = read_file(source_path);
  SegmentationResult seg;
  const auto spans = spans_and_segments(source, kv, seg);
  const auto positions = assign_hier_positions(spans, seg.segments);
  std::vector<std::size_t> tokens(seg.segments.size(), 0);
  for (const auto& p : positions) ++tokens[static_cast<std::size_t>(p.levels[0])];
  ReportTable t;
  if (seg.fallback) t.notes.push_back("fallback: " + seg.warning);
  t.header = {"ordinal", "kind", "start_byte", "end_byte", "tokens"};
  for (const auto& s : seg.segments) {
    t.rows.push_back({std::to_string(s.ordinal), to_string(s.kind), std::to_string(s.start_byte),
                      std::to_string(s.end_byte), std::to_string(tokens[s.ordinal])});
  }
  std::cout << t.to_tsv();
  return 0;
}

int run_positions(const KeyValueConfig& kv, const std::string& source_path) {
  const std::string source = read_file(source_path);
  SegmentationResult seg;
  const auto spans = spans_and_segments(source, kv, seg);
  const auto positions = assign_hier_positions(spans, seg.segments);
  ReportTable t;
  if (seg.fallback) t.notes.push_back("fallback: " + seg.warning);
  t.header = {"index", "start_byte", "end_byte", "segment", "token_in_segment", "global", "text"};
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& sp = spans[i];
    const nlohmann::json text = source.substr(sp.start_byte, sp.end_byte - sp.start_byte);
    t.rows.push_back({std::to_string(sp.index), std::to_string(sp.start_byte), std::to_string(sp.end_byte),
                      std::to_string(positions[i].levels[0]), std::to_string(positions[i].levels[1]),
                      std::to_string(positions[i].global), text.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)});
  }
  std::cout << t.to_tsv();
  return 0;
}

std::size_t strategy_depth(const PositionStrategy& s) {
  if (const auto* h = std::get_if<strategy::HiRoPE>(&s)) return h->split.levels();
  return 1;
}

// Levels default to (0, ..., 0, global): every token in one segment.
HierPos position_from(const KeyValueConfig& kv, const std::string& level_key, Position global, std::size_t depth) {
  HierPos p;
  p.global = global;
  if (kv.has(level_key)) {
    for (const auto& item : split_list(kv.get_string(level_key, ""))) {
      KeyValueConfig one;
      one.set(level_key, item);
      p.levels.push_back(one.get_int(level_key, 0));
    }
  } else {
    p.levels.assign(depth, 0);
    p.levels.back() = global;
  }
  return p;
}

EmbeddingVector vector_from(const KeyValueConfig& kv, const std::string& key, std::size_t d) {
  EmbeddingVector v(d, 0.0);
  if (!kv.has(key)) {
    v[0] = 1.0;
    return v;
  }
  const auto values = double_list(key, kv.get_string(key, ""));
  if (values.size() != d) {
    throw InvalidArgument(key + " has " + std::to_string(values.size()) + " components, head_dim is " + std::to_string(d));
  }
  return values;
}

int run_score(const KeyValueConfig& kv) {
  const RotaryConfig cfg(kv.get_size("head_dim", 128), kv.get_double("rope_base", kDefaultRopeBase));
  const PositionStrategy s = strategy_from_config(kv, cfg.head_dim());
  validate(s, cfg);
  const std::size_t depth = strategy_depth(s);
  const std::size_t d = cfg.head_dim();
  std::cout << "# strategy " << to_json(s).dump() << '\n';

  if (kv.has("segments")) {
    // Matrix mode over a segmented sequence.
    std::vector<HierPos> positions;
    Position global = 0;
    const auto lengths = size_list("segments", kv.get_string("segments", ""));
    for (std::size_t seg = 0; seg < lengths.size(); ++seg) {
      for (std::size_t t = 0; t < lengths[seg]; ++t) {
        HierPos p;
        p.global = global++;
        if (depth == 1) {
          p.levels = {p.global};
        } else {
          p.levels.assign(depth, 0);
          p.levels[depth - 2] = static_cast<Position>(seg);
          p.levels[depth - 1] = static_cast<Position>(t);
        }
        positions.push_back(std::move(p));
      }
    }
    std::vector<EmbeddingVector> qs, ks;
    if (kv.has("vector_seed")) {
      std::mt19937_64 rng(kv.get_u64("vector_seed", 0));
      std::normal_distribution<double> normal;
      for (std::size_t i = 0; i < positions.size(); ++i) {
        EmbeddingVector q(d), k(d);
        for (auto& x : q) x = normal(rng);
        for (auto& x : k) x = normal(rng);
        qs.push_back(std::move(q));
        ks.push_back(std::move(k));
      }
    } else {
      qs.assign(positions.size(), vector_from(kv, "q", d));
      ks.assign(positions.size(), vector_from(kv, "k", d));
    }
    const LowerTriangular m = attention_scores(qs, ks, positions, s, cfg);
    std::cout << "i\tj\tscore\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) std::printf("%zu\t%zu\t%.17g\n", i, j, m(i, j));
    }
    return 0;
  }

  Position m = kv.get_int("m", 0), n = kv.get_int("n", 0);
  if (kv.has("delta")) {
    m = kv.get_int("delta", 0);
    n = 0;
    if (m < 0) std::swap(m, n), n = -n;
  }
  const HierPos pq = position_from(kv, "q_levels", m, depth);
  const HierPos pk = position_from(kv, "k_levels", n, depth);
  const double score = pair_score(vector_from(kv, "q", d), vector_from(kv, "k", d), pq, pk, s, cfg);
  std::printf("score\t%.17g\n", score);
  return 0;
}

int run_build_symbol_task(const KeyValueConfig& kv, const std::string& source, const std::string& corpus,
                          const std::string& template_path, const std::string& out) {
  const std::string tmpl = template_path.empty() ? default_symbol_template() : read_file(template_path);
  std::vector<SourceFile> files;
  if (!source.empty()) {
    files.push_back(SourceFile{".", fs::path(source).filename().string(), read_file(source)});
  } else {
    std::vector<std::string> exts = split_list(kv.get_string("extensions", ".py"));
    files = load_corpus(corpus, exts);
  }
  std::vector<TaskRecord> records;
  for (const auto& f : files) {
    const std::string& id = f.path;
    TaskRecord r = build_symbol_task(f.content, tmpl, SourceMeta{id, f.repo, f.path});
    if (r.gold_symbols.empty()) {
      std::cerr << nlohmann::json({{"warning", "no_symbols"}, {"file", id}}).dump() << '\n';
      continue;
    }
    records.push_back(std::move(r));
  }
  std::ostringstream ss;
  write_jsonl(ss, records);
  emit(out, ss.str());
  return 0;
}

int run_corpus_stats(const KeyValueConfig& kv, const std::string& corpus, const std::string& out) {
  const auto files = load_corpus(corpus, split_list(kv.get_string("extensions", ".py")));
  emit(out, format_corpus_stats(corpus_stats(files)));
  return 0;
}

int run_gen_corpus(const KeyValueConfig& kv, const std::string& out) {
  const SyntheticTaskConfig task = task_config_from(kv);
  const auto corpus = generate_corpus(task, kv.get_u64("corpus_seed", 1));
  std::ostringstream ss;
  write_corpus(ss, corpus);
  emit(out, ss.str());
  return 0;
}

int run_train(const KeyValueConfig& kv, const std::string& corpus_path, const std::string& out_dir, bool quiet) {
  ModelConfig mcfg = model_config_from(kv);
  const TrainConfig tcfg = train_config_from(kv);
  nlohmann::json manifest;
  manifest["tool"] = "hirope_cli train";
  manifest["build"] = build_info();
  std::vector<Sequence> corpus;
  if (!corpus_path.empty()) {
    corpus = read_corpus_file(corpus_path);
    manifest["corpus"] = {{"path", fs::path(corpus_path).filename().string()}, {"sequences", corpus.size()}};
  } else {
    const SyntheticTaskConfig task = task_config_from(kv);
    const std::uint64_t seed = kv.get_u64("corpus_seed", 1);
    corpus = generate_corpus(task, seed);
    manifest["corpus"] = {{"generated", to_json(task)}, {"corpus_seed", seed}, {"sequences", corpus.size()}};
  }
  fs::create_directories(out_dir);
  TinyLM model(mcfg);
  std::string curve = "step,loss\n";
  const auto result = train(model, tcfg, corpus, [&](std::size_t step, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", step, loss);
    curve += buf;
    if (!quiet && (step % 50 == 0 || step + 1 == tcfg.steps)) {
      std::fprintf(stderr, "step %zu loss %.4f\n", step, loss);
    }
  });
  write_file((fs::path(out_dir) / "loss.csv").string(), curve);
  save_checkpoint(model, (fs::path(out_dir) / "model.ckpt").string());
  manifest["model"] = to_json(model.config());
  manifest["train"] = to_json(tcfg);
  manifest["parameters"] = model.params().count();
  manifest["final_loss"] = result.losses.empty() ? 0.0 : result.losses.back();
  manifest["outputs"] = {"model.ckpt", "loss.csv", "manifest.json"};
  write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  return 0;
}

// Pools per-sequence scores into one all-token row and one last-K row built
// from each sequence's last K predictions.
LmReport pooled_report(const std::vector<SequenceScores>& scores, std::size_t last_k) {
  std::vector<double> all_nll, last_nll;
  std::vector<bool> all_ok, last_ok;
  bool short_seq = false;
  for (const auto& s : scores) {
    all_nll.insert(all_nll.end(), s.nll.begin(), s.nll.end());
    all_ok.insert(all_ok.end(), s.correct.begin(), s.correct.end());
    const std::size_t take = std::min(last_k, s.nll.size());
    short_seq = short_seq || s.nll.size() < last_k;
    last_nll.insert(last_nll.end(), s.nll.end() - static_cast<std::ptrdiff_t>(take), s.nll.end());
    last_ok.insert(last_ok.end(), s.correct.end() - static_cast<std::ptrdiff_t>(take), s.correct.end());
  }
  // std::vector<bool> has no contiguous storage; copy into a plain buffer.
  auto as_span = [](const std::vector<bool>& v) {
    return std::vector<char>(v.begin(), v.end());
  };
  const auto all_buf = as_span(all_ok);
  const auto last_buf = as_span(last_ok);
  LmReport r;
  r.all = lm_row("all", all_nll, std::span<const bool>(reinterpret_cast<const bool*>(all_buf.data()), all_buf.size()));
  r.last = lm_row("last_" + std::to_string(last_k), last_nll,
                  std::span<const bool>(reinterpret_cast<const bool*>(last_buf.data()), last_buf.size()));
  r.last.flagged = r.last.flagged || short_seq;
  return r;
}

int run_eval_lm(const KeyValueConfig& kv, const std::string& checkpoint, const std::string& corpus_path,
                const std::string& out) {
  TinyLM model = load_checkpoint(checkpoint);
  if (kv.has("strategy")) model.mutable_config().strategy = strategy_from_config(kv, model.config().head_dim);
  validate(model.config());
  const std::size_t last_k = kv.get_size("last_k", 2048);
  if (last_k == 0) throw InvalidArgument("last_k must be >= 1");
  std::vector<LmGroup> groups;
  if (!corpus_path.empty()) {
    const auto corpus = read_corpus_file(corpus_path);
    std::vector<std::size_t> lengths;
    for (const auto& s : corpus) lengths.push_back(s.size());
    const Buckets b = bucket_by_length(lengths, edges_from(kv));
    auto add = [&](const std::string& label, const std::vector<std::size_t>& members) {
      std::vector<SequenceScores> scores;
      for (std::size_t i : members) scores.push_back(score_sequence(model, corpus[i]));
      groups.push_back({label, pooled_report(scores, last_k)});
    };
    for (const auto& bucket : b.buckets) add(bucket.label(), bucket.members);
    if (!b.underflow.empty()) add("underflow", b.underflow);
    if (!b.overflow.empty()) add("overflow", b.overflow);
  } else {
    const SyntheticTaskConfig task = task_config_from(kv);
    const auto lengths = size_list("eval_lengths", kv.get_string("eval_lengths", "128,256,512"));
    const std::size_t per_length = kv.get_size("eval_sequences", 8);
    const std::uint64_t seed = kv.get_u64("eval_seed", 99);
    if (per_length == 0) throw InvalidArgument("eval_sequences must be >= 1");
    for (std::size_t len : lengths) {
      std::seed_seq mix{seed, static_cast<std::uint64_t>(len)};
      std::vector<std::uint64_t> seeds(per_length);
      mix.generate(seeds.begin(), seeds.end());
      std::vector<SequenceScores> scores;
      for (std::uint64_t s : seeds) scores.push_back(score_sequence(model, generate_sequence(task, len, s)));
      groups.push_back({std::to_string(len), pooled_report(scores, last_k)});
    }
  }
  ReportTable t = lm_table(groups);
  t.notes.push_back("strategy " + to_json(model.config().strategy).dump());
  emit(out, t.to_tsv());
  return 0;
}

Predictions gold_predictions(const std::vector<TaskRecord>& tasks) {
  Predictions p;
  for (const auto& r : tasks) {
    if (r.kind == TaskKind::Symbol) {
      std::string joined;
      for (const auto& s : r.gold_symbols) joined += s + "\n";
      p[r.id] = joined;
    } else {
      p[r.id] = r.gold_line;
    }
  }
  return p;
}

int run_eval_tasks(const KeyValueConfig& kv, TaskKind kind, const std::string& tasks_path,
                   const std::string& preds_path, bool gold, const std::string& out) {
  const auto tasks = read_jsonl_file(tasks_path);
  if (!gold && preds_path.empty()) throw UsageError("need --predictions or --gold-as-prediction");
  const Predictions preds = gold ? gold_predictions(tasks) : read_predictions_file(preds_path);
  const auto edges = edges_from(kv);
  const auto groups = kind == TaskKind::Symbol ? evaluate_symbol_task(tasks, preds, edges)
                                               : evaluate_completion_task(tasks, preds, edges);
  emit(out, score_table(groups, kind == TaskKind::Symbol ? "recall" : "edit_sim").to_tsv());
  return 0;
}

void print_error(const std::string& command, const std::string& kind, const std::string& message) {
  nlohmann::json e = {{"error", kind}, {"command", command}, {"message", message}};
  std::cerr << e.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical rotary position tools", "hirope_cli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string format = "text", source, corpus, tmpl, out, checkpoint, tasks, preds, out_dir;
  bool gold = false, quiet = false;

  Command analyze = make_command(app, "analyze-dims", "Reliable rotary dimensions for a pretraining length");
  analyze.keyed_option("--pretrain-len", "pretrain_len", "Pretraining context length (tokens)");
  analyze.keyed_option("--head-dim", "head_dim", "Attention head dimension");
  analyze.keyed_option("--base", "rope_base", "Rotary base");
  analyze.app->add_flag_callback("--periods", [&] { analyze.keyed["periods"] = "1"; }, "Also list every pair's period");
  analyze.app->add_option("--format", format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));

  Command segment = make_command(app, "segment", "Split a source file into hierarchy segments");
  segment.app->add_option("source", source, "Source file")->required();
  segment.keyed_option("--segmentation", "segmentation", "function, statement or fixed:<n>");

  Command positions = make_command(app, "positions", "Per-token hierarchical positions of a source file");
  positions.app->add_option("source", source, "Source file")->required();
  positions.keyed_option("--segmentation", "segmentation", "function, statement or fixed:<n>");

  Command score = make_command(app, "score", "Pairwise or matrix attention scores");
  score.keyed_option("--strategy", "strategy", "origin, hirope, rerope, selfextend or ntk");
  score.keyed_option("--head-dim", "head_dim", "Head dimension (default 128)");
  score.keyed_option("--base", "rope_base", "Rotary base");
  score.keyed_option("--window", "window", "Window length");
  score.keyed_option("--split-ratio", "split_ratio", "Token-level share of the pairs");
  score.keyed_option("--split-pairs", "split_pairs", "Pairs per level, coarse to fine");
  score.keyed_option("--group", "group", "Self-extend group size");
  score.keyed_option("--neighbor-window", "neighbor_window", "Self-extend neighbor window");
  score.keyed_option("--ntk-scale", "ntk_scale", "NTK base scale");
  score.keyed_option("--m", "m", "Query global position");
  score.keyed_option("--n", "n", "Key global position");
  score.keyed_option("--delta", "delta", "Relative distance (query at delta, key at 0)");
  score.keyed_option("--q-levels", "q_levels", "Query levels, coarse to fine");
  score.keyed_option("--k-levels", "k_levels", "Key levels, coarse to fine");
  score.keyed_option("--q", "q", "Query vector (comma list; default unit e0)");
  score.keyed_option("--k", "k", "Key vector (comma list; default unit e0)");
  score.keyed_option("--segments", "segments", "Matrix mode: segment lengths, e.g. 4,4");
  score.keyed_option("--vector-seed", "vector_seed", "Matrix mode: random per-token vectors");

  Command build = make_command(app, "build-symbol-task", "Build symbol-understanding task records");
  auto* src_opt = build.app->add_option("--source", source, "Single source file");
  auto* corpus_opt = build.app->add_option("--corpus", corpus, "Corpus root (one directory per repo)");
  src_opt->excludes(corpus_opt);
  build.app->add_option("--template", tmpl, "Instruction template containing {input_code}");
  build.app->add_option("-o,--out", out, "Output JSONL (default stdout)");
  build.keyed_option("--extensions", "extensions", "Comma list of file extensions");

  Command stats = make_command(app, "corpus-stats", "Per-repository corpus statistics");
  stats.app->add_option("corpus", corpus, "Corpus root")->required();
  stats.app->add_option("-o,--out", out, "Output TSV (default stdout)");
  stats.keyed_option("--extensions", "extensions", "Comma list of file extensions");

  Command gen = make_command(app, "gen-corpus", "Generate the synthetic training corpus");
  gen.app->add_option("-o,--out", out, "Output JSONL (default stdout)");
  gen.keyed_option("--seed", "corpus_seed", "Corpus seed");
  gen.keyed_option("--num-sequences", "num_sequences", "Number of sequences");
  gen.keyed_option("--seq-len", "seq_len", "Sequence length");

  Command trn = make_command(app, "train", "Train the tiny language model");
  trn.app->add_option("--corpus", corpus, "Corpus JSONL from gen-corpus (default: generate)");
  trn.app->add_option("-o,--out-dir", out_dir, "Directory for model.ckpt, loss.csv, manifest.json")->required();
  trn.app->add_flag("-q,--quiet", quiet, "No progress on stderr");
  trn.keyed_option("--strategy", "strategy", "origin, hirope, rerope, selfextend or ntk");
  trn.keyed_option("--window", "window", "Window length");
  trn.keyed_option("--steps", "steps", "Optimizer steps");
  trn.keyed_option("--batch-size", "batch_size", "Sequences per step");
  trn.keyed_option("--lr", "lr", "Peak learning rate");
  trn.keyed_option("--train-len", "train_len", "Training length");
  trn.keyed_option("--data-seed", "data_seed", "Batch order seed");
  trn.keyed_option("--model-seed", "model_seed", "Initialization seed");

  Command elm = make_command(app, "eval-lm", "Loss / ppl / acc of a checkpoint by length");
  elm.app->add_option("--checkpoint", checkpoint, "model.ckpt from train")->required();
  elm.app->add_option("--corpus", corpus, "Evaluate this corpus bucketed by length instead");
  elm.app->add_option("-o,--out", out, "Output TSV (default stdout)");
  elm.keyed_option("--lengths", "eval_lengths", "Comma list of evaluation lengths");
  elm.keyed_option("--sequences", "eval_sequences", "Sequences per length");
  elm.keyed_option("--seed", "eval_seed", "Evaluation seed");
  elm.keyed_option("--last-k", "last_k", "Suffix length of the last-K row");
  elm.keyed_option("--strategy", "strategy", "Override the checkpoint's strategy");
  elm.keyed_option("--window", "window", "Window length for the override");

  Command esym = make_command(app, "eval-symbol", "Recall of predicted symbols");
  esym.app->add_option("--tasks", tasks, "Task JSONL")->required();
  auto* p1 = esym.app->add_option("--predictions", preds, "Predictions JSONL {id, output}");
  esym.app->add_flag("--gold-as-prediction", gold, "Score the gold answers themselves")->excludes(p1);
  esym.app->add_option("-o,--out", out, "Output TSV (default stdout)");
  esym.keyed_option("--edges", "edges", "Comma list of bucket edges");

  Command ecmp = make_command(app, "eval-completion", "Edit similarity of predicted next lines");
  ecmp.app->add_option("--tasks", tasks, "Task JSONL")->required();
  auto* p2 = ecmp.app->add_option("--predictions", preds, "Predictions JSONL {id, output}");
  ecmp.app->add_flag("--gold-as-prediction", gold, "Score the gold answers themselves")->excludes(p2);
  ecmp.app->add_option("-o,--out", out, "Output TSV (default stdout)");
  ecmp.keyed_option("--edges", "edges", "Comma list of bucket edges");

  std::vector<Command*> commands = {&analyze, &segment, &positions, &score, &build, &stats,
                                    &gen,     &trn,     &elm,       &esym,  &ecmp};
  for (Command* c : commands) {
    c->app->add_option("--set", c->sets, "Override a config key (KEY=VALUE, repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::string message = e.what();
    if (failing == &app && argc > 1 && argv[1][0] != '-') {
      message = "unknown subcommand '" + std::string(argv[1]) + "'";
    }
    std::cerr << failing->help();
    print_error(failing == &app ? "" : failing->get_name(), "usage", message);
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    Command* cmd = nullptr;
    for (Command* c : commands) {
      if (c->app == chosen) cmd = c;
    }
    const KeyValueConfig kv = cmd->resolve();
    if (cmd == &analyze) return run_analyze_dims(kv, format);
    if (cmd == &segment) return run_segment(kv, source);
    if (cmd == &positions) return run_positions(kv, source);
    if (cmd == &score) return run_score(kv);
    if (cmd == &build) {
      if (source.empty() && corpus.empty()) throw UsageError("need --source or --corpus");
      return run_build_symbol_task(kv, source, corpus, tmpl, out);
    }
    if (cmd == &stats) return run_corpus_stats(kv, corpus, out);
    if (cmd == &gen) return run_gen_corpus(kv, out);
    if (cmd == &trn) return run_train(kv, corpus, out_dir, quiet);
    if (cmd == &elm) return run_eval_lm(kv, checkpoint, corpus, out);
    if (cmd == &esym) return run_eval_tasks(kv, TaskKind::Symbol, tasks, preds, gold, out);
    if (cmd == &ecmp) return run_eval_tasks(kv, TaskKind::Completion, tasks, preds, gold, out);
  } catch (const UsageError& e) {
    std::cerr << chosen->help();
    print_error(name, "usage", e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    print_error(name, "invalid_argument", e.what());
    return 1;
  } catch (const ParseError& e) {
    print_error(name, "parse_error", e.what());
    return 1;
  } catch (const TrainingDiverged& e) {
    print_error(name, "training_diverged", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(name, "runtime_error", e.what());
    return 1;
  }
  return 1;
}
