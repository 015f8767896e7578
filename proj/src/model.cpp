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

#include "mobgt/model.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mobgt/error.hpp"

namespace mobgt::model {

using ad::Matrix;
using ad::Var;

std::vector<std::string> LossConfig::validate() const {
  std::vector<std::string> errors;
  if (!(alpha > 0.0)) errors.emplace_back("alpha must be positive");
  if (!(beta > 0.0)) errors.emplace_back("beta must be positive");
  if (!(k >= 1.0)) errors.emplace_back("k must be at least 1");
  if (!(lambda >= 0.0)) errors.emplace_back("lambda must be non-negative");
  return errors;
}

std::vector<std::string> ModelConfig::validate() const {
  std::vector<std::string> errors = encoder.validate();
  if (poi_dim <= 0) errors.emplace_back("d-p must be positive");
  if (category_dim <= 0) errors.emplace_back("d-c must be positive");
  if (user_dim <= 0) errors.emplace_back("d-u must be positive");
  if (gcn_layers < 1) errors.emplace_back("gcn-layers must be at least 1");
  if (!(spatial_threshold_km > 0.0)) errors.emplace_back("spatial-threshold-km must be positive");
  for (auto& e : loss.validate()) errors.push_back(std::move(e));
  return errors;
}

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> errors;
  if (!(lr0 >= 0.0)) errors.emplace_back("lr0 must be non-negative");
  if (max_epochs < 1) errors.emplace_back("epochs must be at least 1");
  if (patience < 1) errors.emplace_back("patience must be at least 1");
  if (batch_size < 1) errors.emplace_back("batch-size must be at least 1");
  if (!(weight_decay >= 0.0)) errors.emplace_back("weight-decay must be non-negative");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) errors.emplace_back("val-fraction must lie in [0, 1)");
  return errors;
}

namespace {

std::vector<graphs::GcnLayer> make_gcn(ad::ParameterSet& set, const std::string& prefix, int width,
                                       int layers, std::mt19937_64& rng) {
  std::vector<graphs::GcnLayer> out;
  for (int l = 0; l < layers; ++l) {
    const std::string lp = prefix + std::to_string(l);
    graphs::GcnLayer layer;
    layer.weight = &set.add(lp + ".w", ad::xavier_uniform(width, width, rng));
    layer.bias = &set.add(lp + ".b", Matrix::Zero(1, width), false);
    out.push_back(layer);
  }
  return out;
}

std::size_t rank_of(const Eigen::RowVectorXd& scores, int target) {
  const double s = scores(target);
  std::size_t rank = 1;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (scores(j) > s || (scores(j) == s && j < target)) ++rank;
  }
  return rank;
}

}  // namespace

MobGT::MobGT(ModelConfig config, Vocab vocab, geo::BinSpec bins, GraphSet graphs, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), bins_(std::move(bins)), graphs_(std::move(graphs)) {
  config_.encoder.poi_width = config_.poi_dim + config_.category_dim;
  config_.encoder.distance_bins = bins_.count;
  auto errors = config_.validate();
  if (!errors.empty()) throw UsageError("invalid model config: " + errors.front());
  const int pois = vocab_.poi_count();
  const int cats = vocab_.category_count();
  if (pois == 0) throw DataError("cannot build a model over an empty POI vocabulary");
  if (graphs_.spatial.node_count != pois || graphs_.temporal.node_count != pois ||
      graphs_.category.node_count != cats) {
    throw DataError("global graph sizes do not match the vocabulary");
  }
  spatial_adj_ = graphs::normalized_adjacency(graphs_.spatial, config_.log_edge_weights);
  temporal_adj_ = graphs::normalized_adjacency(graphs_.temporal, config_.log_edge_weights);
  category_adj_ = graphs::normalized_adjacency(graphs_.category, config_.log_edge_weights);
  poi_category_rows_ = vocab_.poi_to_category;
  for (const auto f : vocab_.poi_freq) freq_buckets_.push_back(encoder::freq_bucket(f));

  std::mt19937_64 rng(seed);
  const int dp = config_.poi_dim;
  const int dc = config_.category_dim;
  const int d = config_.encoder.model_dim;
  global_.poi_input = &params_.add("global.poi_input", ad::uniform(pois, dp, 0.1, rng), false);
  global_.category_input = &params_.add("global.category_input", ad::uniform(cats, dc, 0.1, rng), false);
  global_.spatial = make_gcn(params_, "global.gcn_spatial", dp, config_.gcn_layers, rng);
  global_.temporal = make_gcn(params_, "global.gcn_temporal", dp, config_.gcn_layers, rng);
  global_.category = make_gcn(params_, "global.gcn_category", dc, config_.gcn_layers, rng);
  global_.fusion.weight = &params_.add("global.fusion.w", ad::xavier_uniform(dp + dc, dp + dc, rng));
  global_.fusion.bias = &params_.add("global.fusion.b", Matrix::Zero(1, dp + dc), false);
  global_param_count_ = params_.size();

  encoder_ = encoder::EncoderParams::create(params_, config_.encoder, rng);

  const int du = config_.user_dim;
  heads_.user_table = &params_.add("head.user_table", ad::uniform(vocab_.user_count + 1, du, 0.1, rng), false);
  heads_.user_fusion.weight = &params_.add("head.user_fusion.w", ad::xavier_uniform(d + du, d, rng));
  heads_.user_fusion.bias = &params_.add("head.user_fusion.b", Matrix::Zero(1, d), false);
  heads_.poi_w = &params_.add("head.poi.w", ad::xavier_uniform(d, pois, rng));
  heads_.poi_b = &params_.add("head.poi.b", Matrix::Zero(1, pois), false);
  heads_.category_w = &params_.add("head.category.w", ad::xavier_uniform(d, cats, rng));
  heads_.category_b = &params_.add("head.category.b", Matrix::Zero(1, cats), false);
  refresh();
}

bool MobGT::is_global_parameter(const ad::Parameter& p) const {
  for (std::size_t i = 0; i < global_param_count_; ++i) {
    if (&params_[i] == &p) return true;
  }
  return false;
}

Var MobGT::global_embeddings(ad::Tape& tape) const {
  Var poi_in = tape.param(*global_.poi_input);
  Var cat_in = tape.param(*global_.category_input);
  Var e_s = poi_in;
  Var e_t = poi_in;
  Var e_c = cat_in;
  if (config_.use_global) {
    if (config_.use_spatial_graph) e_s = graphs::gcn_encode(spatial_adj_, poi_in, global_.spatial);
    if (config_.use_temporal_graph) e_t = graphs::gcn_encode(temporal_adj_, poi_in, global_.temporal);
    // A disabled branch is replaced by the other one so the pooled mean
    // reduces to the surviving embedding.
    if (!config_.use_spatial_graph) e_s = e_t;
    if (!config_.use_temporal_graph) e_t = e_s;
    e_c = graphs::gcn_encode(category_adj_, cat_in, global_.category);
  }
  Var e_c_rows = ad::gather_rows(e_c, poi_category_rows_);
  return graphs::fuse_poi_embeddings(e_s, e_t, e_c_rows, global_.fusion);
}

Var MobGT::encode(Var poi_table, const local::LocalMobilityGraph& g) const {
  ad::Tape& tape = poi_table.tape();
  const auto m = g.nodes.size();
  std::vector<int> slots(m);
  std::vector<int> buckets(m);
  for (std::size_t v = 0; v < m; ++v) {
    slots[v] = g.node_time_slot(static_cast<int>(v));
    buckets[v] = freq_buckets_[static_cast<std::size_t>(g.nodes[v])];
  }
  Var rows = ad::gather_rows(poi_table, g.nodes);
  Var e_o = encoder::assemble_node_embedding(rows, slots, buckets, encoder_, config_.encoder);
  Var h = encoder::structure_encode(e_o, g, encoder_, config_.encoder);
  const auto bias = encoder::attention_bias(tape, g, encoder_, config_.encoder);
  return encoder::encoder_forward(h, bias, encoder_, config_.encoder);
}

Var MobGT::fuse_user(Var e_tl, UserId user) const {
  ad::Tape& tape = e_tl.tape();
  const int row = (user >= 0 && user < vocab_.user_count) ? user : vocab_.user_count;
  std::vector<int> rows(static_cast<std::size_t>(e_tl.rows()), row);
  return graphs::concat_fuse(e_tl, ad::gather_rows(tape.param(*heads_.user_table), rows), heads_.user_fusion);
}

Logits MobGT::predict_heads(Var e_utl_center) const {
  ad::Tape& tape = e_utl_center.tape();
  return {ad::linear(e_utl_center, tape.param(*heads_.poi_w), tape.param(*heads_.poi_b)),
          ad::linear(e_utl_center, tape.param(*heads_.category_w), tape.param(*heads_.category_b))};
}

Logits MobGT::forward(Var poi_table, const local::LocalMobilityGraph& g) const {
  Var e_tl = encode(poi_table, g);
  Var center = ad::slice_rows(e_tl, g.center(), 1);
  return predict_heads(fuse_user(center, g.user));
}

local::LocalMobilityGraph MobGT::make_graph(const Trajectory& traj, std::size_t prefix_len) const {
  return local::build_local_graph(traj, prefix_len, vocab_, bins_);
}

void MobGT::refresh() {
  ad::Tape tape(false);
  poi_table_cache_ = global_embeddings(tape).value();
}

Eigen::RowVectorXd MobGT::score(const local::LocalMobilityGraph& g) const {
  ad::Tape tape(false);
  const Logits logits = forward(tape.constant(poi_table_cache_), g);
  return logits.poi.value().row(0);
}

Eigen::RowVectorXd MobGT::score(const Trajectory& prefix) const {
  return score(make_graph(prefix, prefix.size()));
}

Var tail_loss(Var logits, std::span<const int> targets, const LossConfig& cfg) {
  const Matrix& x = logits.value();
  if (static_cast<std::size_t>(x.rows()) != targets.size()) {
    throw DataError("tail_loss: one target per logit row required");
  }
  constexpr double kFloor = 1e-12;
  const double n = static_cast<double>(x.rows());
  Matrix out = Matrix::Zero(1, 1);
  Matrix grad(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = x(i, c);
      const double s = 1.0 / (1.0 + std::exp(-v));   // sigma(x)
      const double sm = 1.0 / (1.0 + std::exp(v));    // 1 - sigma(x)
      if (targets[static_cast<std::size_t>(i)] == c) {
        const double log_s = std::log(std::max(s, kFloor));
        const double dlog_s = s > kFloor ? 1.0 : 0.0;  // d(log s)/dx = (1 - s) when unclamped
        const double pk = std::pow(sm, cfg.k);
        out(0, 0) -= cfg.alpha * pk * log_s;
        grad(i, c) = cfg.alpha * cfg.k * pk * s * log_s - cfg.alpha * pk * sm * dlog_s;
      } else {
        const double log_sm = std::log(std::max(sm, kFloor));
        const double dlog_sm = sm > kFloor ? 1.0 : 0.0;
        const double pk = std::pow(s, cfg.k);
        out(0, 0) -= cfg.beta * pk * log_sm;
        grad(i, c) = -cfg.beta * cfg.k * pk * sm * log_sm + cfg.beta * pk * s * dlog_sm;
      }
    }
  }
  out /= n;
  grad /= n;
  return logits.tape().push(std::move(out), {logits}, [logits, grad](ad::Tape& tp, const Matrix& g) {
    tp.accumulate(logits, grad * g(0, 0));
  });
}

double tail_loss(const Matrix& logits, std::span<const int> targets, const LossConfig& cfg) {
  ad::Tape tape(false);
  return tail_loss(tape.constant(logits), targets, cfg).scalar();
}

Var softmax_cross_entropy(Var logits, int target) {
  const Matrix& x = logits.value();
  if (x.rows() != 1 || target < 0 || target >= x.cols()) {
    throw DataError("softmax_cross_entropy: target out of range");
  }
  const double m = x.maxCoeff();
  Matrix p = (x.array() - m).exp();
  const double z = p.sum();
  p /= z;
  Matrix out(1, 1);
  out(0, 0) = m + std::log(z) - x(0, target);
  return logits.tape().push(std::move(out), {logits}, [logits, p, target](ad::Tape& tp, const Matrix& g) {
    Matrix d = p;
    d(0, target) -= 1.0;
    tp.accumulate(logits, d * g(0, 0));
  });
}

Var total_loss(Var y_poi, Var y_cat, int target_poi, int target_cat, const LossConfig& cfg) {
  Var ce = softmax_cross_entropy(y_poi, target_poi);
  if (cfg.lambda == 0.0) return ce;
  const int targets[] = {target_cat};
  return ad::add(ce, ad::scale(tail_loss(y_cat, targets, cfg), cfg.lambda));
}

std::vector<int> rank_catalog(const Eigen::RowVectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) { return scores(a) > scores(b); });
  return order;
}

std::vector<local::LocalMobilityGraph> prefix_examples(const MobGT& model,
                                                       const std::vector<Trajectory>& trajs) {
  std::vector<local::LocalMobilityGraph> out;
  for (const auto& t : trajs) {
    for (std::size_t len = 2; len < t.size(); ++len) {
      auto g = model.make_graph(t, len);
      if (g.target_label >= 0) out.push_back(std::move(g));
    }
  }
  return out;
}

double accuracy_at_1(const MobGT& model, const std::vector<local::LocalMobilityGraph>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& g : examples) {
    if (rank_of(model.score(g), g.target_label) == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

namespace {

class AdamW {
 public:
  AdamW(const ad::ParameterSet& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
      v_.push_back(m_.back());
    }
  }

  template <typename Skip>
  void step(ad::ParameterSet& params, double lr, Skip skip) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      ad::Parameter& p = params[i];
      if (skip(p)) continue;
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * p.grad;
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * p.grad.cwiseAbs2();
      if (p.decay) p.value *= 1.0 - lr * cfg_.weight_decay;
      p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.adam_eps);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

std::vector<Matrix> snapshot(const ad::ParameterSet& params) {
  std::vector<Matrix> values;
  for (std::size_t i = 0; i < params.size(); ++i) values.push_back(params[i].value);
  return values;
}

void restore(ad::ParameterSet& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

}  // namespace

TrainResult train(const SplitCorpus& corpus, const ModelConfig& model_config, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  auto errors = cfg.validate();
  for (auto& e : model_config.validate()) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
  if (corpus.train.empty()) throw DataError("train: no training trajectories");

  SplitCorpus fit_val;
  if (cfg.early_stop_on == EarlyStopOn::kValidation) {
    fit_val = holdout_tail(corpus.train, cfg.val_fraction);
  } else {
    fit_val.train = corpus.train;
  }
  const auto& fit = fit_val.train;
  if (fit.empty()) throw DataError("train: validation hold-out left no training trajectories");

  Vocab vocab = build_vocab(corpus.train);
  const auto sample = local::pairwise_distance_sample(fit);
  geo::BinSpec bins = sample.empty() ? geo::BinSpec{} : geo::make_bins(sample);
  GraphSet graphs{graphs::build_spatial_graph(vocab, model_config.spatial_threshold_km),
                  graphs::build_temporal_graph(fit, vocab), graphs::build_category_graph(fit, vocab)};
  TrainResult result{MobGT(model_config, std::move(vocab), std::move(bins), std::move(graphs), cfg.seed),
                     {}, 0, false, false};
  MobGT& model = result.model;
  const LossConfig loss_cfg = [&] {
    LossConfig l = model.config().loss;
    if (!model.config().use_tail_loss) l.lambda = 0.0;
    return l;
  }();

  const auto train_examples = prefix_examples(model, fit);
  const auto val_examples = prefix_examples(model, fit_val.test);
  if (train_examples.empty()) throw DataError("train: no trajectory yields a training example");
  result.monitored_validation = cfg.early_stop_on == EarlyStopOn::kValidation && !val_examples.empty();
  if (cfg.early_stop_on == EarlyStopOn::kValidation && val_examples.empty()) {
    spdlog::warn("no validation examples; early stopping monitors the training loss");
  }
  spdlog::info("training on {} examples ({} validation), {} parameters", train_examples.size(),
               val_examples.size(), model.parameters().scalar_count());

  ad::ParameterSet& params = model.parameters();
  AdamW optimizer(params, cfg);
  const auto skip = [&](const ad::Parameter& p) { return cfg.freeze_global && model.is_global_parameter(p); };
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);

  double best = 0.0;
  bool have_best = false;
  int stale = 0;
  std::vector<Matrix> best_values = snapshot(params);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.lr0 * (1.0 - static_cast<double>(epoch) / cfg.max_epochs);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      params.zero_grad();
      ad::Tape tape;
      // Frozen global parameters never change, so the cached table is exact.
      Var table = cfg.freeze_global ? tape.constant(model.poi_table()) : model.global_embeddings(tape);
      std::vector<Var> losses;
      for (std::size_t i = start; i < end; ++i) {
        const auto& g = train_examples[order[i]];
        const Logits logits = model.forward(table, g);
        losses.push_back(total_loss(logits.poi, logits.category, g.target_label, g.target_category, loss_cfg));
      }
      Var loss = ad::mean_of(losses);
      if (!std::isfinite(loss.scalar())) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                           std::to_string(start));
      }
      loss_sum += loss.scalar() * static_cast<double>(end - start);
      tape.backward(loss);
      optimizer.step(params, lr, skip);
    }
    model.refresh();
    if (!params.all_finite()) {
      throw NumericError("non-finite parameters after epoch " + std::to_string(epoch + 1));
    }

    EpochLog log;
    log.epoch = epoch + 1;
    log.lr = lr;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    // Higher is better for validation accuracy, lower for training loss.
    log.monitored = result.monitored_validation ? accuracy_at_1(model, val_examples) : log.train_loss;
    log.improved = !have_best || (result.monitored_validation ? log.monitored > best : log.monitored < best);
    if (log.improved) {
      best = log.monitored;
      have_best = true;
      stale = 0;
      result.best_epoch = log.epoch;
      best_values = snapshot(params);
    } else {
      ++stale;
    }
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stale >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  restore(params, best_values);
  model.refresh();
  return result;
}

std::vector<ScoredPoi> predict_topk(const MobGT& model, const Trajectory& prefix, std::size_t k) {
  if (prefix.size() < 2) throw DataError("predict_topk: prefix must hold at least 2 check-ins");
  for (const auto& c : prefix.checkins) {
    if (!model.vocab().poi_index(c.poi)) {
      throw DataError("predict_topk: POI " + std::to_string(c.poi) + " is not in the model vocabulary");
    }
  }
  const Eigen::RowVectorXd scores = model.score(prefix);
  const auto order = rank_catalog(scores);
  k = std::min(k, order.size());
  std::vector<ScoredPoi> out;
  for (std::size_t i = 0; i < k; ++i) {
    const int idx = order[i];
    out.push_back({model.vocab().poi_ids[static_cast<std::size_t>(idx)], scores(idx)});
  }
  return out;
}

}  // namespace mobgt::model
