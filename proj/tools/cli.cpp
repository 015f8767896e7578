// Copyright 2026 The MobGT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <list>
#include <sstream>
#include <unordered_map>

#include "mobgt/checkpoint.hpp"
#include "mobgt/config.hpp"
#include "mobgt/data.hpp"
#include "mobgt/error.hpp"
#include "mobgt/eval.hpp"
#include "mobgt/global_graphs.hpp"
#include "mobgt/model.hpp"

namespace mobgt::cli {

namespace fs = std::filesystem;

namespace {

struct KeyBinding {
  const ConfigKey* key = nullptr;
  CLI::Option* option = nullptr;
  std::string value;
  bool flag = false;
};

struct Command {
  CLI::App* app = nullptr;
  std::list<KeyBinding> keys;
  std::string config_path;
};

void add_key_options(Command& cmd) {
  const RunConfig defaults;
  cmd.app->add_option("--config", cmd.config_path, "key = value file applied before command-line flags")
      ->check(CLI::ExistingFile);
  for (const auto& k : config_keys()) {
    auto& b = cmd.keys.emplace_back();
    b.key = &k;
    if (k.is_flag) {
      b.option = cmd.app->add_flag("--" + k.name, b.flag, k.help + " (default: " + k.get(defaults) + ")");
    } else {
      b.option = cmd.app->add_option("--" + k.name, b.value, k.help)->default_str(k.get(defaults));
    }
    b.option->group("Config keys");
  }
}

// File values first, then explicitly given flags. Every problem is reported in
// one UsageError.
RunConfig resolve(const Command& cmd, RunConfig base) {
  if (!cmd.config_path.empty()) base = load_config_file(cmd.config_path, std::move(base));
  std::vector<std::string> errors;
  for (const auto& b : cmd.keys) {
    if (b.option->count() == 0) continue;
    try {
      b.key->set(base, b.key->is_flag ? (b.flag ? "true" : "false") : b.value);
    } catch (const UsageError& e) {
      errors.emplace_back(e.what());
    }
  }
  for (auto& e : base.validate()) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
  return base;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void emit_report(const eval::MetricsReport& report, const std::string& format, const std::string& out_path,
                 std::ostream& out) {
  if (format == "table") {
    out << report.to_table();
  } else {
    out << report.to_json() << "\n";
  }
  if (!out_path.empty()) open_output(out_path) << report.to_json() << "\n";
}


int cmd_synth(const Command& cmd, const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, {});
  const auto checkins = generate_synthetic(cfg.synth, cfg.synth_seed);
  auto file = open_output(out_path);
  write_checkins_tsv(file, checkins);
  out << "wrote " << checkins.size() << " check-ins to " << out_path << "\n";
  return kExitOk;
}

int cmd_prepare(const Command& cmd, const std::string& input, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, {});
  auto in = open_input(input);
  auto parsed = parse_checkins(in, input);
  auto seg = segment_trajectories(parsed.checkins, cfg.min_len);
  Corpus corpus{std::move(parsed.ids), chronological_split(seg.trajectories, cfg.split_ratio),
                seg.discarded_sessions, seg.discarded_checkins};
  save_corpus(out_dir, corpus);

  const Vocab vocab = build_vocab(corpus.split.train);
  auto vf = open_output(fs::path(out_dir) / "vocab.tsv");
  vf << "# index\tpoi\tcategory\tlat\tlon\tvisits\n";
  char buf[64];
  for (int i = 0; i < vocab.poi_count(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const auto cat = vocab.category_ids[static_cast<std::size_t>(vocab.poi_to_category[u])];
    std::snprintf(buf, sizeof(buf), "%.17g\t%.17g", vocab.poi_coords[u].lat, vocab.poi_coords[u].lon);
    vf << i << "\t" << corpus.ids.pois[static_cast<std::size_t>(vocab.poi_ids[u])] << "\t"
       << corpus.ids.categories[static_cast<std::size_t>(cat)] << "\t" << buf << "\t" << vocab.poi_freq[u] << "\n";
  }

  out << "check-ins: " << parsed.checkins.size() << "\n"
      << "users: " << corpus.ids.users.size() << "\n"
      << "pois: " << corpus.ids.pois.size() << "\n"
      << "categories: " << corpus.ids.categories.size() << "\n"
      << "train trajectories: " << corpus.split.train.size() << "\n"
      << "test trajectories: " << corpus.split.test.size() << "\n"
      << "discarded sessions: " << corpus.discarded_sessions << "\n"
      << "discarded check-ins: " << corpus.discarded_checkins << "\n"
      << "coordinate conflicts: " << vocab.coord_conflicts << "\n";
  return kExitOk;
}

int cmd_build_graphs(const Command& cmd, const std::string& corpus_dir, std::string out_dir, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, {});
  const Corpus corpus = load_corpus(corpus_dir);
  if (out_dir.empty()) out_dir = corpus_dir;
  const Vocab vocab = build_vocab(corpus.split.train);
  const std::pair<const char*, graphs::GlobalGraph> built[] = {
      {"spatial", graphs::build_spatial_graph(vocab, cfg.model.spatial_threshold_km)},
      {"temporal", graphs::build_temporal_graph(corpus.split.train, vocab)},
      {"category", graphs::build_category_graph(corpus.split.train, vocab)},
  };
  for (const auto& [name, g] : built) {
    const auto path = fs::path(out_dir) / (std::string(name) + ".edges");
    auto file = open_output(path);
    graphs::write_edge_list(file, g);
    out << name << ": " << g.node_count << " nodes, " << g.edges.size() << " edges -> " << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_train(const Command& cmd, const std::string& corpus_dir, const std::string& ckpt_path,
              const std::string& log_path, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, {});
  const Corpus corpus = load_corpus(corpus_dir);

  bool validation = cfg.train.early_stop_on == model::EarlyStopOn::kValidation;
  if (validation) {
    const auto held = holdout_tail(corpus.split.train, cfg.train.val_fraction).test;
    validation = std::any_of(held.begin(), held.end(), [](const Trajectory& t) { return t.size() >= 3; });
  }
  std::ofstream log_file;
  if (!log_path.empty()) log_file = open_output(log_path);
  const auto on_epoch = [&](const model::EpochLog& e) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %d lr %.6g loss %.6f %s %.6f%s\n", e.epoch, e.lr, e.train_loss,
                  validation ? "val_acc1" : "monitored_loss", e.monitored, e.improved ? " *" : "");
    out << line << std::flush;
    if (log_file) log_file << line << std::flush;
  };
  const auto result = model::train(corpus.split, cfg.model, cfg.train, on_epoch);
  save_checkpoint(ckpt_path, cfg, corpus.ids, result.model);
  out << "best epoch " << result.best_epoch << (result.early_stopped ? " (early stop)" : "") << "\n"
      << "checkpoint: " << ckpt_path << "\n";
  return kExitOk;
}

int cmd_evaluate(const Command& cmd, const std::string& ckpt_path, const std::string& corpus_dir,
                 const std::string& format, const std::string& out_path, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RunConfig cfg = resolve(cmd, ckpt.config);
  const Corpus corpus = load_corpus(corpus_dir);
  const auto test = align_ids(corpus.split.test, corpus.ids, ckpt.ids);
  const eval::ModelRanker ranker(ckpt.model);
  auto report = eval::evaluate(ranker, test, cfg.eval_mode, cfg.threads);
  report.config_digest = eval::digest("mobgt\n" + ckpt.config.to_text());
  emit_report(report, format, out_path, out);
  return kExitOk;
}

int cmd_predict(const Command& cmd, const std::string& ckpt_path, const std::string& inline_prefix,
                const std::string& prefix_file, std::size_t k, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  (void)resolve(cmd, ckpt.config);
  if (inline_prefix.empty() == prefix_file.empty()) {
    throw UsageError("predict: give exactly one of --prefix or --prefix-file");
  }
  std::string text = inline_prefix;
  std::string origin = "--prefix";
  if (!prefix_file.empty()) {
    std::stringstream buf;
    buf << open_input(prefix_file).rdbuf();
    text = buf.str();
    origin = prefix_file;
  } else {
    std::replace(text.begin(), text.end(), ';', '\n');
  }
  RawIds ids = ckpt.ids;
  std::istringstream in(text);
  const auto checkins = parse_checkins_with(in, ids, origin);
  if (checkins.empty()) throw DataError("predict: empty prefix");
  for (const auto& c : checkins) {
    if (c.user != checkins.front().user) throw UsageError("predict: prefix mixes several users");
    if (!ckpt.model.vocab().poi_index(c.poi)) {
      throw DataError("predict: unknown POI '" + ids.pois[static_cast<std::size_t>(c.poi)] + "' in prefix");
    }
  }
  const Trajectory prefix{checkins.front().user, checkins.front().day(), checkins};
  char buf[64];
  std::size_t rank = 0;
  for (const auto& s : model::predict_topk(ckpt.model, prefix, k)) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.score);
    out << ++rank << "\t" << ids.pois[static_cast<std::size_t>(s.poi)] << "\t" << buf << "\n";
  }
  return kExitOk;
}

int cmd_baseline(const Command& cmd, const std::string& corpus_dir, const std::string& format,
                 const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, {});
  const Corpus corpus = load_corpus(corpus_dir);
  const auto mc = eval::mc_train(corpus.split.train);
  const eval::MarkovRanker ranker(mc);
  auto report = eval::evaluate(ranker, corpus.split.test, cfg.eval_mode, cfg.threads);
  report.config_digest = eval::digest("markov\n" + cfg.to_text());
  emit_report(report, format, out_path, out);
  return kExitOk;
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("mobgt");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MOBGT_LOG_LEVEL"); level != nullptr && *level != '\0') {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MobGT next-POI recommendation toolkit", "mobgt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mobgt 0.1.0");
  app.footer("Environment: MOBGT_LOG_LEVEL=trace|debug|info|warn|error|off (default warn).\n"
             "Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.");

  std::list<Command> commands;
  const auto sub = [&](const std::string& name, const std::string& help) -> Command& {
    auto& c = commands.emplace_back();
    c.app = app.add_subcommand(name, help);
    return c;
  };

  std::string input, out_path, corpus_dir, ckpt_path, log_path, prefix, prefix_file;
  std::string format = "json";
  std::size_t k = 10;

  auto& synth = sub("synth", "write a synthetic check-in TSV");
  synth.app->add_option("--out", out_path, "output TSV path")->required();
  auto& prepare = sub("prepare", "segment and split a check-in TSV into a corpus directory");
  prepare.app->add_option("--input", input, "check-in TSV")->required();
  prepare.app->add_option("--out", out_path, "corpus directory")->required();
  auto& build = sub("build-graphs", "write the global spatial, temporal and category edge lists");
  build.app->add_option("--corpus", corpus_dir, "corpus directory")->required();
  build.app->add_option("--out", out_path, "output directory (default: the corpus directory)");
  auto& train = sub("train", "train a model and write a checkpoint");
  train.app->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train.app->add_option("--out", ckpt_path, "checkpoint path")->required();
  train.app->add_option("--log", log_path, "also write the epoch log here");
  auto& evaluate = sub("evaluate", "score a checkpoint on the corpus test split");
  evaluate.app->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  evaluate.app->add_option("--corpus", corpus_dir, "corpus directory")->required();
  auto& predict = sub("predict", "rank the next POI for a check-in prefix");
  predict.app->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  predict.app->add_option("--prefix", prefix, "inline TSV check-ins, rows separated by ';' or newlines");
  predict.app->add_option("--prefix-file", prefix_file, "TSV file holding the prefix");
  predict.app->add_option("--top", k, "number of POIs to list")->capture_default_str()->check(CLI::PositiveNumber);
  auto& baseline = sub("baseline", "evaluate the first-order Markov chain baseline");
  baseline.app->add_option("--corpus", corpus_dir, "corpus directory")->required();
  for (auto* c : {evaluate.app, baseline.app}) {
    c->add_option("--format", format, "report format on stdout")
        ->capture_default_str()
        ->check(CLI::IsMember({"json", "table"}));
    c->add_option("--out", out_path, "also write the JSON report here");
  }
  for (auto& c : commands) add_key_options(c);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth.app->parsed()) return cmd_synth(synth, out_path, out);
    if (prepare.app->parsed()) return cmd_prepare(prepare, input, out_path, out);
    if (build.app->parsed()) return cmd_build_graphs(build, corpus_dir, out_path, out);
    if (train.app->parsed()) return cmd_train(train, corpus_dir, ckpt_path, log_path, out);
    if (evaluate.app->parsed()) return cmd_evaluate(evaluate, ckpt_path, corpus_dir, format, out_path, out);
    if (predict.app->parsed()) return cmd_predict(predict, ckpt_path, prefix, prefix_file, k, out);
    if (baseline.app->parsed()) return cmd_baseline(baseline, corpus_dir, format, out_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mobgt::cli
