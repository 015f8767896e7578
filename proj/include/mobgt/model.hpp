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

#ifndef MOBGT_MODEL_HPP
#define MOBGT_MODEL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mobgt/autodiff.hpp"
#include "mobgt/data.hpp"
#include "mobgt/encoder.hpp"
#include "mobgt/geo.hpp"
#include "mobgt/global_graphs.hpp"
#include "mobgt/local_graph.hpp"

namespace mobgt::model {

struct LossConfig {
  double alpha = 0.2;
  double beta = 1.0;
  double k = 1.2;
  double lambda = 10.0;

  std::vector<std::string> validate() const;
};

struct ModelConfig {
  int poi_dim = 64;        // d_p
  int category_dim = 32;   // d_c
  int user_dim = 32;       // d_u
  int gcn_layers = 2;
  double spatial_threshold_km = 2.5;
  bool log_edge_weights = true;
  encoder::EncoderConfig encoder;  // poi_width and distance_bins are derived
  LossConfig loss;
  bool use_spatial_graph = true;
  bool use_temporal_graph = true;
  bool use_global = true;
  bool use_tail_loss = true;

  std::vector<std::string> validate() const;
};

enum class EarlyStopOn { kValidation, kTrain };

struct TrainConfig {
  double lr0 = 2e-4;
  int max_epochs = 200;
  int patience = 10;
  int batch_size = 1;
  std::uint64_t seed = 42;
  double weight_decay = 0.01;
  EarlyStopOn early_stop_on = EarlyStopOn::kValidation;
  double val_fraction = 0.1;
  bool freeze_global = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::vector<std::string> validate() const;
};

/// Global graphs a model was built from.
struct GraphSet {
  graphs::GlobalGraph spatial;
  graphs::GlobalGraph temporal;
  graphs::GlobalGraph category;
};

struct Logits {
  ad::Var poi;       // 1 x poi_count
  ad::Var category;  // 1 x category_count
};

struct ScoredPoi {
  PoiId poi = 0;  // corpus id
  double score = 0.0;
};

/// The full model: global graph encoders, local-graph encoder, user fusion
/// and the two heads. Move-only; parameter addresses stay stable.
class MobGT {
 public:
  MobGT(ModelConfig config, Vocab vocab, geo::BinSpec bins, GraphSet graphs, std::uint64_t seed);
  MobGT(MobGT&&) noexcept = default;
  MobGT& operator=(MobGT&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const geo::BinSpec& bins() const { return bins_; }
  const GraphSet& graphs() const { return graphs_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }
  bool is_global_parameter(const ad::Parameter& p) const;

  /// e_p for every vocab POI, shape (poi_count, d_p + d_c).
  ad::Var global_embeddings(ad::Tape& tape) const;

  /// Encodes one local graph against a POI table from global_embeddings and
  /// returns the head logits for its center node.
  Logits forward(ad::Var poi_table, const local::LocalMobilityGraph& g) const;

  /// Per-node encoder output e_tl (node_count x d).
  ad::Var encode(ad::Var poi_table, const local::LocalMobilityGraph& g) const;

  /// LeakyReLU([e_tl | user_row] W_u + b_u) per row. Users outside the
  /// training vocabulary share the reserved cold-user row.
  ad::Var fuse_user(ad::Var e_tl, UserId user) const;
  Logits predict_heads(ad::Var e_utl_center) const;

  local::LocalMobilityGraph make_graph(const Trajectory& traj, std::size_t prefix_len) const;

  /// Recomputes the cached POI table used by score(). Call after changing
  /// parameter values.
  void refresh();
  const ad::Matrix& poi_table() const { return poi_table_cache_; }
  /// POI logits (vocab order) for the whole of `prefix`. Throws DataError
  /// naming the first POI missing from the vocab.
  Eigen::RowVectorXd score(const Trajectory& prefix) const;
  Eigen::RowVectorXd score(const local::LocalMobilityGraph& g) const;

 private:
  struct GlobalParams {
    ad::Parameter* poi_input = nullptr;
    ad::Parameter* category_input = nullptr;
    std::vector<graphs::GcnLayer> spatial;
    std::vector<graphs::GcnLayer> temporal;
    std::vector<graphs::GcnLayer> category;
    graphs::FusionLayer fusion;
  };
  struct HeadParams {
    ad::Parameter* user_table = nullptr;  // (user_count + 1) x d_u, last row = cold user
    graphs::FusionLayer user_fusion;
    ad::Parameter* poi_w = nullptr;
    ad::Parameter* poi_b = nullptr;
    ad::Parameter* category_w = nullptr;
    ad::Parameter* category_b = nullptr;
  };

  ModelConfig config_;
  Vocab vocab_;
  geo::BinSpec bins_;
  GraphSet graphs_;
  std::shared_ptr<const ad::SparseMatrix> spatial_adj_;
  std::shared_ptr<const ad::SparseMatrix> temporal_adj_;
  std::shared_ptr<const ad::SparseMatrix> category_adj_;
  std::vector<int> poi_category_rows_;
  std::vector<int> freq_buckets_;
  ad::ParameterSet params_;
  GlobalParams global_;
  encoder::EncoderParams encoder_;
  HeadParams heads_;
  std::size_t global_param_count_ = 0;
  ad::Matrix poi_table_cache_;
};

/// Mean over samples of the per-sample sum over classes of the one-vs-rest
/// focal term. `logits` is (n, classes); log arguments are clamped at 1e-12.
ad::Var tail_loss(ad::Var logits, std::span<const int> targets, const LossConfig& cfg);
double tail_loss(const ad::Matrix& logits, std::span<const int> targets, const LossConfig& cfg);

/// -log softmax(logits)[target] for a 1 x P row.
ad::Var softmax_cross_entropy(ad::Var logits, int target);

/// CE(y_poi, target_poi) + lambda * tail_loss(y_cat, target_cat).
ad::Var total_loss(ad::Var y_poi, ad::Var y_cat, int target_poi, int target_cat, const LossConfig& cfg);

/// Vocab indices sorted by descending score, ties by ascending index.
std::vector<int> rank_catalog(const Eigen::RowVectorXd& scores);

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double monitored = 0.0;  // validation Acc@1, or training loss
  bool improved = false;
};

struct TrainResult {
  MobGT model;
  std::vector<EpochLog> history;
  int best_epoch = 0;
  bool early_stopped = false;
  bool monitored_validation = false;
};

/// Trains on `corpus.train` (the test split is not touched). Throws
/// NumericError on a non-finite loss.
TrainResult train(const SplitCorpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Top-k catalog POIs for the next step after `prefix` (length >= 2).
std::vector<ScoredPoi> predict_topk(const MobGT& model, const Trajectory& prefix, std::size_t k);

/// Training examples: every prefix of length 2..L-1 with its next check-in.
std::vector<local::LocalMobilityGraph> prefix_examples(const MobGT& model,
                                                       const std::vector<Trajectory>& trajs);

/// Share of examples whose target the model ranks first.
double accuracy_at_1(const MobGT& model, const std::vector<local::LocalMobilityGraph>& examples);

}  // namespace mobgt::model

#endif  // MOBGT_MODEL_HPP
