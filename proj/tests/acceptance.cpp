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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "mobgt/data.hpp"
#include "mobgt/encoder.hpp"
#include "mobgt/eval.hpp"
#include "mobgt/geo.hpp"
#include "mobgt/local_graph.hpp"
#include "mobgt/model.hpp"
#include "oracles.hpp"
#include "reference.hpp"
#include "support.hpp"

using namespace mobgt;
using ad::Matrix;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTol = 1e-3;
constexpr double kGradFloor = 1e-5;
constexpr double kGradStep = 1e-5;
constexpr double kGradBudgetS = 60.0;
constexpr int kHopGraphs = 200;
constexpr int kMaxNodes = 12;
constexpr int kBinSamples = 100;
constexpr int kHaversinePairs = 1000;
constexpr double kHaversineRelTol = 1e-3;
constexpr double kScalarTol = 1e-9;
constexpr double kQuotedTailLoss = 0.06035;
constexpr double kQuotedTol = 5e-5;  // the quoted figure has four significant digits
constexpr int kRankingExamples = 500;
constexpr double kOverfitTarget = 0.9;
constexpr int kOverfitEpochs = 200;
constexpr double kOverfitBudgetS = 600.0;
constexpr double kOrderingBudgetS = 1800.0;
constexpr double kReductionTol = 1e-5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -----------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = testing::small_corpus();
  auto m = testing::build_model(corpus, testing::tiny_model_config(2));
  std::mt19937_64 rng(4);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    auto& p = m.parameters()[i];
    p.value += testing::random_matrix(p.value.rows(), p.value.cols(), rng, 0.05);
  }
  const auto g = m.make_graph(corpus[0], 3);
  if (g.node_count() != 4) return {false, "fixture graph does not have 4 nodes"};
  const model::LossConfig loss_cfg;
  const auto loss = [&](ad::Tape& tape) {
    const auto l = m.forward(m.global_embeddings(tape), g);
    return model::total_loss(l.poi, l.category, g.target_label, g.target_category, loss_cfg);
  };

  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  const std::vector<std::string> groups{"global.gcn_spatial", "global.gcn_temporal", "global.gcn_category",
                                        "global.fusion", "global.poi_input", "global.category_input",
                                        "encoder.layer", "encoder.hop_bias", "encoder.dist_bias",
                                        "encoder.edge_count_table", "encoder.edge_bin_table", "encoder.trend_proj",
                                        "encoder.", "head."};
  for (const auto& group : groups) {
    const auto r = testing::check_gradients(m.parameters(), loss, {group}, 25, kGradStep, kGradFloor);
    if (r.checked == 0) return {false, "no parameters in group " + group};
    checked += r.checked;
    if (r.max_rel > worst) {
      worst = r.max_rel;
      where = r.worst;
    }
  }

  // Tail loss with respect to its logits, on a 3 x 4 batch.
  const Matrix x = testing::random_matrix(3, 4, rng, 2.0);
  const std::vector<int> y{0, 3, 1};
  ad::ParameterSet set;
  auto& xp = set.add("logits", x);
  const auto tail = [&](ad::Tape& tape) { return model::tail_loss(tape.param(xp), y, loss_cfg); };
  const auto rt = testing::check_gradients(set, tail, {}, 12, kGradStep, kGradFloor);
  checked += rt.checked;
  if (rt.max_rel > worst) {
    worst = rt.max_rel;
    where = rt.worst;
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < kGradTol && secs < kGradBudgetS;
  return {ok, fmt("max relative error %.2e over %.0f entries", worst, static_cast<double>(checked)) +
                  " (worst " + where + ")" + fmt(", %.1f s", secs)};
}

// 2 -----------------------------------------------------------------------
Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  int hop_mismatch = 0;
  for (int trial = 0; trial < kHopGraphs; ++trial) {
    const int alphabet = 1 + static_cast<int>(rng() % (kMaxNodes - 1));  // plus the center
    const int length = 2 + static_cast<int>(rng() % 25);
    const auto labels = testing::random_walk_labels(rng, alphabet, length);
    const auto g = local::trajectory_to_graph(labels);
    const auto hops = local::shortest_hops(g);
    const auto fw = testing::floyd_warshall(g);
    for (int s = 0; s < g.node_count(); ++s) {
      for (int t = 0; t < g.node_count(); ++t) {
        int expect = 0;
        if (s == t) {
          expect = 0;
        } else if (s == g.center() || t == g.center()) {
          expect = local::kCenterHop;
        } else {
          expect = std::min(fw(s, t), local::kMaxHops);
        }
        if (hops(s, t) != expect) ++hop_mismatch;
      }
    }
  }

  int bin_mismatch = 0;
  for (int trial = 0; trial < kBinSamples; ++trial) {
    std::vector<double> xs(4 + rng() % 400);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    for (auto& v : xs) v = dist(rng);
    const auto spec = geo::make_bins(xs);
    // Quantile cut points i/b; a heavy tail can ask for more bins than the
    // sample supports, and coinciding cuts (or cuts at the minimum) merge.
    const int b = geo::fd_bin_count(xs);
    const double lowest = *std::min_element(xs.begin(), xs.end());
    std::vector<double> expect;
    for (int i = 1; i < b; ++i) {
      const double cut = testing::inverse_ecdf_avg(xs, static_cast<double>(i) / b);
      if (cut > lowest && (expect.empty() || cut > expect.back())) expect.push_back(cut);
    }
    if (spec.count != static_cast<int>(expect.size()) + 1 || spec.edges.size() != expect.size()) {
      ++bin_mismatch;
      continue;
    }
    for (std::size_t i = 0; i < expect.size(); ++i) {
      if (std::abs(spec.edges[i] - expect[i]) > 1e-12 * std::max(1.0, expect[i])) ++bin_mismatch;
    }
    for (double v : xs) {
      if (geo::bin_index(v, spec) != testing::linear_scan_bin(v, spec)) ++bin_mismatch;
    }
  }

  double worst_rel = 0.0;
  for (int i = 0; i < kHaversinePairs; ++i) {
    const auto a = testing::random_point(rng);
    const auto b = testing::random_point(rng);
    const double ref = testing::great_circle_oracle(a, b);
    worst_rel = std::max(worst_rel, std::abs(geo::haversine(a, b) - ref) / ref);
  }
  const bool ok = hop_mismatch == 0 && bin_mismatch == 0 && worst_rel < kHaversineRelTol;
  return {ok, fmt("hop mismatches %.0f, bin mismatches %.0f, haversine max relative error %.2e", hop_mismatch,
                  bin_mismatch, worst_rel)};
}

// 3 -----------------------------------------------------------------------
Outcome scalar_oracles() {
  const model::LossConfig cfg;
  const double closed = 0.2 * std::pow(0.5, 1.2) * std::log(2.0);
  const double tail = model::tail_loss(Matrix::Zero(1, 1), std::vector<int>{0}, cfg);
  double ce_err = 0.0;
  ad::Tape tape(false);
  for (int p : {1, 2, 10, 137, 5000}) {
    const auto ce = model::softmax_cross_entropy(tape.constant(Matrix::Constant(1, p, -0.3)), p / 2);
    ce_err = std::max(ce_err, std::abs(ce.scalar() - std::log(static_cast<double>(p))));
  }
  const bool ok = std::abs(tail - closed) < kScalarTol && std::abs(closed - kQuotedTailLoss) < kQuotedTol &&
                  ce_err < kScalarTol;
  return {ok, fmt("tail loss %.9f (closed form %.9f), max CE error %.1e", tail, closed, ce_err)};
}

// 4 -----------------------------------------------------------------------
class RandomRanker : public eval::Ranker {
 public:
  RandomRanker(int catalog, std::uint64_t salt) : catalog_(catalog), salt_(salt) {}
  bool in_catalog(PoiId p) const override { return p < catalog_; }
  bool can_rank(const Trajectory&) const override { return true; }
  std::size_t rank_of(const Trajectory& prefix, PoiId target) const override {
    std::uint64_t seed = salt_;
    for (const auto& c : prefix.checkins) seed = seed * 1315423911u + static_cast<std::uint64_t>(c.poi);
    std::mt19937_64 rng(seed + prefix.size());
    std::vector<PoiId> order(static_cast<std::size_t>(catalog_));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return static_cast<std::size_t>(std::find(order.begin(), order.end(), target) - order.begin()) + 1;
  }

 private:
  int catalog_;
  std::uint64_t salt_;
};

Outcome metric_identities() {
  std::mt19937_64 rng(31);
  int ndcg1_mismatch = 0;
  std::vector<PoiId> order(60);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < kRankingExamples; ++i) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto m = eval::metrics_for_example(order, static_cast<PoiId>(rng() % 60));
    if (m.ndcg1 != m.acc1) ++ndcg1_mismatch;
  }
  int report_violations = 0;
  for (int salt = 0; salt < 20; ++salt) {
    std::vector<Trajectory> test;
    const int catalog = 3 + salt;
    for (int t = 0; t < 30; ++t) {
      std::vector<PoiId> pois(3 + rng() % 6);
      for (auto& p : pois) p = static_cast<PoiId>(rng() % static_cast<std::uint64_t>(catalog + 2));
      test.push_back(testing::make_trajectory(t % 5, 100 + t, pois));
    }
    const auto r = eval::evaluate(RandomRanker(catalog, static_cast<std::uint64_t>(salt)), test);
    if (!(r.acc1 <= r.ndcg5 && r.ndcg5 <= r.acc5 && r.acc5 <= r.acc10 && r.mrr >= r.acc1)) ++report_violations;
  }
  return {ndcg1_mismatch == 0 && report_violations == 0,
          fmt("NDCG@1 != Acc@1 on %.0f of %.0f examples, %.0f report ordering violations", ndcg1_mismatch,
              kRankingExamples, report_violations)};
}

// 5 -----------------------------------------------------------------------
Outcome overfit_capacity() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig sc;
  sc.users = 4;
  sc.days = 5;
  sc.loop_len = 6;
  sc.regularity = 1.0;
  const auto seg = segment_trajectories(generate_synthetic(sc, 11));
  if (seg.trajectories.size() != 20) return {false, "expected 20 trajectories"};
  const SplitCorpus corpus{seg.trajectories, {}};

  model::ModelConfig mc;
  mc.poi_dim = 32;
  mc.category_dim = 16;
  mc.user_dim = 16;
  mc.encoder.model_dim = 32;
  mc.encoder.heads = 4;
  mc.encoder.layers = 2;
  model::TrainConfig tc;
  tc.max_epochs = kOverfitEpochs;
  tc.lr0 = 0.002;
  tc.patience = 30;
  tc.early_stop_on = model::EarlyStopOn::kTrain;
  tc.seed = 3;
  const auto result = model::train(corpus, mc, tc);
  const auto examples = model::prefix_examples(result.model, corpus.train);
  const double acc = model::accuracy_at_1(result.model, examples);
  const double secs = seconds_since(t0);
  return {acc >= kOverfitTarget && secs < kOverfitBudgetS,
          fmt("training Acc@1 %.3f after %.0f epochs, %.0f s", acc, static_cast<double>(result.history.size()),
              secs)};
}

// 6 -----------------------------------------------------------------------
Outcome ordering_property() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig sc;
  sc.users = 50;
  sc.pois = 100;
  sc.clusters = 5;
  sc.cluster_radius_km = 1.0;
  sc.days = 10;
  sc.loop_len = 4;
  sc.checkins_per_day = 6;
  sc.regularity = 0.7;
  const auto seg = segment_trajectories(generate_synthetic(sc, 21));
  const auto corpus = chronological_split(seg.trajectories, 0.8);

  model::ModelConfig mc;
  mc.poi_dim = 32;
  mc.category_dim = 16;
  mc.user_dim = 16;
  mc.encoder.model_dim = 32;
  mc.encoder.heads = 4;
  mc.encoder.layers = 2;
  model::TrainConfig tc;
  tc.max_epochs = 60;
  tc.lr0 = 0.002;
  tc.patience = 10;
  tc.seed = 5;
  const auto result = model::train(corpus, mc, tc);
  const auto mobgt = eval::evaluate(eval::ModelRanker(result.model), corpus.test);
  const auto markov_model = eval::mc_train(corpus.train);
  const auto markov = eval::evaluate(eval::MarkovRanker(markov_model), corpus.test);
  const double secs = seconds_since(t0);
  return {mobgt.acc5 > markov.acc5 && secs < kOrderingBudgetS,
          fmt("MobGT Acc@5 %.3f vs MC Acc@5 %.3f", mobgt.acc5, markov.acc5) +
              fmt(" (Acc@1 %.3f vs %.3f), %.0f s", mobgt.acc1, markov.acc1, secs)};
}

// 7 -----------------------------------------------------------------------
Outcome plain_reduction() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    encoder::EncoderConfig cfg;
    cfg.poi_width = 12;
    cfg.time_dim = 4;
    cfg.model_dim = 16;
    cfg.heads = 4;
    cfg.layers = 3;
    cfg.edge_dim = 8;
    cfg.distance_bins = 4;
    ad::ParameterSet set;
    auto params = encoder::EncoderParams::create(set, cfg, rng);
    for (std::size_t i = 0; i < set.size(); ++i) {
      auto& p = set[i];
      p.value += testing::random_matrix(p.value.rows(), p.value.cols(), rng, 0.3);
    }
    for (auto* p : {params.indeg_table, params.outdeg_table, params.pos_table, params.hop_bias, params.dist_bias,
                    params.count_table, params.bin_table, params.trend_proj}) {
      p->value.setZero();
    }
    const auto labels = testing::random_walk_labels(rng, 2 + static_cast<int>(seed % 9), 12);
    auto g = local::trajectory_to_graph(labels);
    std::vector<geo::LatLon> coords;
    for (std::size_t v = 0; v < g.nodes.size(); ++v) coords.push_back(testing::random_point(rng));
    local::pairwise_distances(g, coords, geo::BinSpec{{100.0, 1000.0, 5000.0}, 4});
    const auto n = static_cast<Eigen::Index>(g.nodes.size());
    const Matrix e_o = testing::random_matrix(n, cfg.context_width(), rng);

    ad::Tape tape(false);
    const auto h = encoder::structure_encode(tape.constant(e_o), g, params, cfg);
    const auto bias = encoder::attention_bias(tape, g, params, cfg);
    const Matrix got = encoder::encoder_forward(h, bias, params, cfg).value();

    testing::Dense x0(n + 1, cfg.model_dim);
    x0.topRows(n) = testing::plain_affine(e_o, params.input_w->value, params.input_b->value);
    x0.row(n) = params.center_token->value.row(0);
    const testing::Dense expect = testing::plain_transformer(x0, testing::plain_layers(params), cfg.heads);
    worst = std::max(worst, (got - expect).cwiseAbs().maxCoeff());
  }
  return {worst < kReductionTol, fmt("max abs difference %.2e over 20 random encoders", worst)};
}

// 8 -----------------------------------------------------------------------
std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "mobgt_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> reports;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    const std::vector<std::vector<std::string>> steps{
        {"synth", "--out", (dir / "in.tsv").string(), "--synth-users", "6", "--synth-days", "6",
         "--synth-regularity", "0.7", "--synth-checkins-per-day", "6"},
        {"prepare", "--input", (dir / "in.tsv").string(), "--out", (dir / "corpus").string()},
        {"train", "--corpus", (dir / "corpus").string(), "--out", (dir / "model.ckpt").string(), "--epochs", "3",
         "--d", "16", "--heads", "2", "--layers", "2", "--d-p", "8", "--d-c", "8", "--d-u", "8", "--lr0", "0.002",
         "--seed", "9"},
        {"evaluate", "--checkpoint", (dir / "model.ckpt").string(), "--corpus", (dir / "corpus").string(), "--out",
         (dir / "report.json").string()},
    };
    for (const auto& args : steps) {
      std::ostringstream out;
      std::ostringstream err;
      if (cli::run(args, out, err) != 0) return {false, args[0] + " failed: " + err.str()};
    }
    reports.push_back(read_file(dir / "report.json"));
  }
  fs::remove_all(root);
  const bool ok = !reports[0].empty() && reports[0] == reports[1];
  std::string shown = reports[0];
  while (!shown.empty() && shown.back() == '\n') shown.pop_back();
  return {ok, ok ? "identical reports " + shown : "reports differ"};
}

// 9 -----------------------------------------------------------------------
Outcome worked_example() {
  const std::vector<int> seq{1, 2, 3, 4, 2, 3, 1};
  const auto g = local::trajectory_to_graph(seq);
  const std::set<int> nodes(g.nodes.begin(), g.nodes.end());
  const auto node = [&](int label) {
    return static_cast<int>(std::find(g.nodes.begin(), g.nodes.end(), label) - g.nodes.begin());
  };
  const auto count = [&](int a, int b) {
    const int e = g.find_edge(node(a), node(b));
    return e < 0 ? 0 : g.edges[static_cast<std::size_t>(e)].count;
  };
  const bool node_ok = nodes == std::set<int>{4, 2, 3, 1} && g.node_count() == 5;
  const bool edges_ok = g.edges.size() == 5 && count(1, 2) == 1 && count(2, 3) == 2 && count(3, 4) == 1 &&
                        count(4, 2) == 1 && count(3, 1) == 1;
  const int hop = g.hop(node(1), node(4));
  const int bfs = local::bfs_distances(g)(node(1), node(4));
  const bool ok = node_ok && edges_ok && hop == 2 && bfs == 2;
  return {ok, fmt("node set ok %.0f, edge counts ok %.0f, hop(1,4) = %.0f", node_ok, edges_ok, hop)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient correctness", gradient_correctness},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "scalar oracles", scalar_oracles},
      {4, "metric identities", metric_identities},
      {5, "overfit capacity", overfit_capacity},
      {6, "ordering vs Markov chain", ordering_property},
      {7, "plain-transformer reduction", plain_reduction},
      {8, "determinism", determinism},
      {9, "worked example", worked_example},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
