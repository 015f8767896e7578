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

#ifndef MOBGT_EVAL_HPP
#define MOBGT_EVAL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobgt/data.hpp"
#include "mobgt/model.hpp"

namespace mobgt::eval {

struct ExampleMetrics {
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  double ndcg1 = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  double mrr = 0.0;
};

struct MetricsReport {
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  double mrr = 0.0;
  std::size_t n_examples = 0;
  std::size_t n_unreachable = 0;
  std::string config_digest;

  /// Single-line JSON with the fields above, in declaration order.
  std::string to_json() const;
  /// Human-readable two-column table.
  std::string to_table() const;
};

/// Metrics for a target at 1-based `rank`; std::nullopt scores zero.
ExampleMetrics metrics_for_rank(std::optional<std::size_t> rank);

/// Metrics for `target` within a full catalog ranking. Throws DataError when
/// the target is absent.
ExampleMetrics metrics_for_example(std::span<const PoiId> ranking, PoiId target);

enum class EvalMode { kPrefix, kLast };

/// Something that ranks the catalog for the step after a prefix.
class Ranker {
 public:
  virtual ~Ranker() = default;
  /// True when `poi` can appear in a ranking at all.
  virtual bool in_catalog(PoiId poi) const = 0;
  /// False when the prefix cannot be scored (e.g. it holds an unseen POI).
  virtual bool can_rank(const Trajectory& prefix) const = 0;
  /// 1-based rank of `target` for the step after `prefix`; the target must
  /// be in the catalog.
  virtual std::size_t rank_of(const Trajectory& prefix, PoiId target) const = 0;
};

/// Averages per-example metrics over every prefix (length >= 2) of every
/// test trajectory, or only the final one in kLast mode. Examples whose
/// target is outside the catalog, or whose prefix cannot be ranked, count as
/// zeros and increment n_unreachable. `threads` > 1 splits examples across
/// workers. Examples are summed in a canonical order, so neither the thread
/// count nor the order of `test` changes the result.
MetricsReport evaluate(const Ranker& ranker, const std::vector<Trajectory>& test,
                       EvalMode mode = EvalMode::kPrefix, int threads = 1);

class ModelRanker : public Ranker {
 public:
  explicit ModelRanker(const model::MobGT& model) : model_(model) {}
  bool in_catalog(PoiId poi) const override;
  bool can_rank(const Trajectory& prefix) const override;
  std::size_t rank_of(const Trajectory& prefix, PoiId target) const override;

 private:
  const model::MobGT& model_;
};

/// First-order Markov chain over consecutive training pairs.
struct MarkovModel {
  struct Successor {
    PoiId poi = 0;
    double prob = 0.0;
  };
  std::map<PoiId, std::vector<Successor>> transition;  // ranked successors per source
  std::vector<PoiId> popularity;                       // descending visits, ties by id
  std::map<PoiId, std::int64_t> visits;
};

MarkovModel mc_train(const std::vector<Trajectory>& train);

/// Successors of the last POI by probability (ties by popularity, then id),
/// padded with the popularity ranking. k = 0 returns the full ranking.
std::vector<PoiId> mc_predict(const MarkovModel& model, const Trajectory& prefix, std::size_t k = 0);

class MarkovRanker : public Ranker {
 public:
  explicit MarkovRanker(const MarkovModel& model) : model_(model) {}
  bool in_catalog(PoiId poi) const override { return model_.visits.contains(poi); }
  bool can_rank(const Trajectory&) const override { return true; }
  std::size_t rank_of(const Trajectory& prefix, PoiId target) const override;

 private:
  const MarkovModel& model_;
};

/// FNV-1a 64-bit digest as 16 hex digits.
std::string digest(std::string_view text);

}  // namespace mobgt::eval

#endif  // MOBGT_EVAL_HPP
