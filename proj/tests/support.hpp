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

#ifndef MOBGT_TESTS_SUPPORT_HPP
#define MOBGT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mobgt/autodiff.hpp"
#include "mobgt/data.hpp"
#include "mobgt/global_graphs.hpp"
#include "mobgt/local_graph.hpp"
#include "mobgt/model.hpp"

namespace mobgt::testing {

struct GradReport {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of `loss` with central differences for
/// the parameters whose name starts with one of `prefixes` (all when empty).
/// At most `per_param` entries of each parameter are probed, spread evenly.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradReport check_gradients(ad::ParameterSet& set, const std::function<ad::Var(ad::Tape&)>& loss,
                                  const std::vector<std::string>& prefixes = {}, int per_param = 40,
                                  double h = 1e-6, double floor = 1e-6) {
  set.zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  const auto eval = [&] {
    ad::Tape tape(false);
    return loss(tape).scalar();
  };
  GradReport report;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ad::Parameter& p = set[i];
    const bool wanted = prefixes.empty() || std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& s) {
                          return p.name.rfind(s, 0) == 0;
                        });
    if (!wanted) continue;
    const Eigen::Index n = p.value.size();
    const Eigen::Index step = std::max<Eigen::Index>(1, n / per_param);
    for (Eigen::Index k = 0; k < n; k += step) {
      double& x = p.value.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = eval();
      x = saved - h;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad.data()[k];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++report.checked;
      if (rel > report.max_rel) {
        report.max_rel = rel;
        report.worst = p.name + "[" + std::to_string(k) + "] analytic=" + std::to_string(analytic) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

inline ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

/// Check-in at a fixed place and a timestamp on day `day`.
inline CheckIn checkin(UserId user, PoiId poi, CategoryId cat, double lat, double lon, std::int64_t ts) {
  return CheckIn{user, poi, cat, lat, lon, ts};
}

/// Trajectory of user `user` on `day`, visiting `pois` one hour apart from
/// 08:00 UTC. POI p sits at (35.6 + 0.01 p, 139.6 + 0.01 p) with category p % cats.
inline Trajectory make_trajectory(UserId user, std::int64_t day, const std::vector<PoiId>& pois, int cats = 3) {
  Trajectory t{user, day, {}};
  std::int64_t ts = day * kSecondsPerDay + 8 * 3600;
  for (const PoiId p : pois) {
    t.checkins.push_back(checkin(user, p, p % cats, 35.6 + 0.01 * p, 139.6 + 0.01 * p, ts));
    ts += 3600;
  }
  return t;
}

/// Tiny model config: d_p 8, d_c 4, d_u 4, d 8, 2 heads.
inline model::ModelConfig tiny_model_config(int layers = 1) {
  model::ModelConfig cfg;
  cfg.poi_dim = 8;
  cfg.category_dim = 4;
  cfg.user_dim = 4;
  cfg.gcn_layers = 2;
  cfg.encoder.model_dim = 8;
  cfg.encoder.heads = 2;
  cfg.encoder.layers = layers;
  cfg.encoder.time_dim = 4;
  cfg.encoder.edge_dim = 4;
  return cfg;
}

/// Builds a model over `train` the way training does, without fitting.
inline model::MobGT build_model(const std::vector<Trajectory>& train, const model::ModelConfig& cfg,
                                std::uint64_t seed = 1) {
  Vocab vocab = build_vocab(train);
  const auto sample = local::pairwise_distance_sample(train);
  geo::BinSpec bins = sample.empty() ? geo::BinSpec{} : geo::make_bins(sample);
  model::GraphSet graphs{graphs::build_spatial_graph(vocab, cfg.spatial_threshold_km),
                         graphs::build_temporal_graph(train, vocab), graphs::build_category_graph(train, vocab)};
  return model::MobGT(cfg, std::move(vocab), std::move(bins), std::move(graphs), seed);
}

/// A few users looping over ten POIs, three categories.
inline std::vector<Trajectory> small_corpus() {
  return {make_trajectory(0, 100, {1, 2, 3, 4}), make_trajectory(0, 101, {1, 2, 5, 4}),
          make_trajectory(1, 100, {6, 7, 8, 2, 9}), make_trajectory(1, 102, {6, 7, 10, 3}),
          make_trajectory(2, 103, {3, 4, 1, 2})};
}

}  // namespace mobgt::testing

#endif  // MOBGT_TESTS_SUPPORT_HPP
