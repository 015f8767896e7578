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

#ifndef MOBGT_GLOBAL_GRAPHS_HPP
#define MOBGT_GLOBAL_GRAPHS_HPP

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mobgt/autodiff.hpp"
#include "mobgt/data.hpp"

namespace mobgt::graphs {

enum class NodeKind { kPoi, kCategory };

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Corpus-level graph over vocab POI or category indices. Undirected graphs
/// store each edge once with src < dst; self-transitions live in
/// `self_transitions`, never in `edges`.
struct GlobalGraph {
  int node_count = 0;
  bool directed = false;
  bool count_weighted = false;
  NodeKind kind = NodeKind::kPoi;
  std::vector<Edge> edges;  // sorted by (src, dst)
  std::vector<double> self_transitions;

  double total_weight() const;
};

GlobalGraph build_spatial_graph(const Vocab& vocab, double threshold_km = 2.5);

/// Counts consecutive (p_i -> p_{i+1}) pairs inside each trajectory. POIs
/// missing from `vocab` are skipped together with the pairs they touch.
GlobalGraph build_temporal_graph(const std::vector<Trajectory>& train, const Vocab& vocab);
GlobalGraph build_category_graph(const std::vector<Trajectory>& train, const Vocab& vocab);

/// Edge-list text: one `src \t dst \t weight` line per stored edge, preceded
/// by a `# nodes=<n> directed=<0|1> weighted=<0|1> kind=<poi|category>` line.
void write_edge_list(std::ostream& out, const GlobalGraph& g);
GlobalGraph read_edge_list(std::istream& in);

/// D^-1/2 (A + I) D^-1/2 with A symmetrized by weight addition. Count
/// weighted graphs use log(1 + w) when `log_weights` is set.
std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const GlobalGraph& g,
                                                             bool log_weights);

struct GcnLayer {
  ad::Parameter* weight = nullptr;  // (in, out)
  ad::Parameter* bias = nullptr;    // (1, out)
};

/// H' = act(Â H W + b) per layer: Leaky ReLU (0.01) on hidden layers and
/// identity on the last.
ad::Var gcn_encode(std::shared_ptr<const ad::SparseMatrix> adjacency, ad::Var input,
                   std::span<const GcnLayer> layers);

/// Non-differentiable convenience overload.
ad::Matrix gcn_encode(const GlobalGraph& g, const ad::Matrix& init, std::span<const GcnLayer> layers,
                      bool log_weights = false);

struct FusionLayer {
  ad::Parameter* weight = nullptr;
  ad::Parameter* bias = nullptr;
};

/// e_st = (e_s + e_t) / 2, e_p = LeakyReLU([e_st | e_c] W + b).
ad::Var fuse_poi_embeddings(ad::Var e_s, ad::Var e_t, ad::Var e_c_per_poi, const FusionLayer& fusion);

/// LeakyReLU([a | b] W + bias): the concat-then-fuse pattern shared by the
/// POI, time and user fusions.
ad::Var concat_fuse(ad::Var a, ad::Var b, const FusionLayer& fusion);

}  // namespace mobgt::graphs

#endif  // MOBGT_GLOBAL_GRAPHS_HPP
