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

#include "mobgt/global_graphs.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "mobgt/error.hpp"
#include "mobgt/geo.hpp"

namespace mobgt::graphs {

double GlobalGraph::total_weight() const {
  double total = 0.0;
  for (const auto& e : edges) total += e.weight;
  return total;
}

GlobalGraph build_spatial_graph(const Vocab& vocab, double threshold_km) {
  GlobalGraph g;
  g.node_count = vocab.poi_count();
  g.directed = false;
  g.kind = NodeKind::kPoi;
  g.self_transitions.assign(static_cast<std::size_t>(g.node_count), 0.0);
  for (int p = 0; p < g.node_count; ++p) {
    const auto a = vocab.poi_coords[static_cast<std::size_t>(p)];
    for (int q = p + 1; q < g.node_count; ++q) {
      if (geo::haversine(a, vocab.poi_coords[static_cast<std::size_t>(q)]) < threshold_km) {
        g.edges.push_back({p, q, 1.0});
      }
    }
  }
  return g;
}

namespace {

GlobalGraph count_transitions(const std::vector<Trajectory>& train, const Vocab& vocab,
                              bool by_category) {
  GlobalGraph g;
  g.directed = true;
  g.count_weighted = true;
  g.kind = by_category ? NodeKind::kCategory : NodeKind::kPoi;
  g.node_count = by_category ? vocab.category_count() : vocab.poi_count();
  g.self_transitions.assign(static_cast<std::size_t>(g.node_count), 0.0);
  std::map<std::pair<int, int>, double> counts;
  const auto node_of = [&](const CheckIn& c) -> std::optional<int> {
    const auto idx = vocab.poi_index(c.poi);
    if (!idx) return std::nullopt;
    return by_category ? vocab.poi_to_category[static_cast<std::size_t>(*idx)] : *idx;
  };
  for (const auto& t : train) {
    for (std::size_t i = 0; i + 1 < t.checkins.size(); ++i) {
      const auto a = node_of(t.checkins[i]);
      const auto b = node_of(t.checkins[i + 1]);
      if (!a || !b) continue;
      if (*a == *b) {
        g.self_transitions[static_cast<std::size_t>(*a)] += 1.0;
      } else {
        counts[{*a, *b}] += 1.0;
      }
    }
  }
  for (const auto& [key, w] : counts) g.edges.push_back({key.first, key.second, w});
  return g;
}

}  // namespace

GlobalGraph build_temporal_graph(const std::vector<Trajectory>& train, const Vocab& vocab) {
  return count_transitions(train, vocab, false);
}

GlobalGraph build_category_graph(const std::vector<Trajectory>& train, const Vocab& vocab) {
  return count_transitions(train, vocab, true);
}

void write_edge_list(std::ostream& out, const GlobalGraph& g) {
  out << "# nodes=" << g.node_count << " directed=" << (g.directed ? 1 : 0)
      << " weighted=" << (g.count_weighted ? 1 : 0)
      << " kind=" << (g.kind == NodeKind::kPoi ? "poi" : "category") << '\n';
  for (const auto& e : g.edges) out << e.src << '\t' << e.dst << '\t' << e.weight << '\n';
}

GlobalGraph read_edge_list(std::istream& in) {
  GlobalGraph g;
  std::string line;
  if (!std::getline(in, line)) throw DataError("edge list: missing header");
  char kind[16] = {0};
  int directed = 0;
  int weighted = 0;
  if (std::sscanf(line.c_str(), "# nodes=%d directed=%d weighted=%d kind=%15s", &g.node_count,
                  &directed, &weighted, kind) != 4) {
    throw DataError("edge list: malformed header '" + line + "'");
  }
  g.directed = directed != 0;
  g.count_weighted = weighted != 0;
  g.kind = std::string(kind) == "category" ? NodeKind::kCategory : NodeKind::kPoi;
  g.self_transitions.assign(static_cast<std::size_t>(g.node_count), 0.0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Edge e;
    if (!(fields >> e.src >> e.dst >> e.weight) || e.src < 0 || e.dst < 0 ||
        e.src >= g.node_count || e.dst >= g.node_count) {
      throw DataError("edge list: malformed edge '" + line + "'");
    }
    g.edges.push_back(e);
  }
  return g;
}

std::shared_ptr<const ad::SparseMatrix> normalized_adjacency(const GlobalGraph& g,
                                                             bool log_weights) {
  const int n = g.node_count;
  std::map<std::pair<int, int>, double> sym;
  for (int v = 0; v < n; ++v) sym[{v, v}] = 1.0;
  for (const auto& e : g.edges) {
    const double w = (log_weights && g.count_weighted) ? std::log1p(e.weight) : e.weight;
    sym[{e.src, e.dst}] += w;
    sym[{e.dst, e.src}] += w;
  }
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (const auto& [key, w] : sym) degree[static_cast<std::size_t>(key.first)] += w;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(sym.size());
  for (const auto& [key, w] : sym) {
    const double norm = std::sqrt(degree[static_cast<std::size_t>(key.first)] *
                                  degree[static_cast<std::size_t>(key.second)]);
    triplets.emplace_back(key.first, key.second, w / norm);
  }
  auto adj = std::make_shared<ad::SparseMatrix>(n, n);
  adj->setFromTriplets(triplets.begin(), triplets.end());
  return adj;
}

ad::Var gcn_encode(std::shared_ptr<const ad::SparseMatrix> adjacency, ad::Var input,
                   std::span<const GcnLayer> layers) {
  if (adjacency->rows() != input.rows()) {
    throw DataError("gcn_encode: adjacency has " + std::to_string(adjacency->rows()) +
                    " nodes but input has " + std::to_string(input.rows()) + " rows");
  }
  ad::Tape& tape = input.tape();
  ad::Var h = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.weight->value.rows() != h.cols()) {
      throw DataError("gcn_encode: layer " + std::to_string(i) + " expects width " +
                      std::to_string(layer.weight->value.rows()) + ", got " + std::to_string(h.cols()));
    }
    h = ad::linear(ad::spmm(adjacency, h), tape.param(*layer.weight), tape.param(*layer.bias));
    if (i + 1 < layers.size()) h = ad::leaky_relu(h);
  }
  return h;
}

ad::Matrix gcn_encode(const GlobalGraph& g, const ad::Matrix& init, std::span<const GcnLayer> layers,
                      bool log_weights) {
  ad::Tape tape(false);
  return gcn_encode(normalized_adjacency(g, log_weights), tape.constant(init), layers).value();
}

ad::Var concat_fuse(ad::Var a, ad::Var b, const FusionLayer& fusion) {
  ad::Tape& tape = a.tape();
  const std::array<ad::Var, 2> parts{a, b};
  ad::Var joined = ad::concat_cols(parts);
  if (joined.cols() != fusion.weight->value.rows()) {
    throw DataError("fusion: input width " + std::to_string(joined.cols()) +
                    " does not match weight rows " + std::to_string(fusion.weight->value.rows()));
  }
  return ad::leaky_relu(ad::linear(joined, tape.param(*fusion.weight), tape.param(*fusion.bias)));
}

ad::Var fuse_poi_embeddings(ad::Var e_s, ad::Var e_t, ad::Var e_c_per_poi, const FusionLayer& fusion) {
  if (e_s.rows() != e_t.rows() || e_s.cols() != e_t.cols()) {
    throw DataError("fuse_poi_embeddings: spatial and temporal embeddings differ in shape");
  }
  if (e_c_per_poi.rows() != e_s.rows()) {
    throw DataError("fuse_poi_embeddings: category rows do not match POI rows");
  }
  ad::Var e_st = ad::scale(ad::add(e_s, e_t), 0.5);
  return concat_fuse(e_st, e_c_per_poi, fusion);
}

}  // namespace mobgt::graphs
