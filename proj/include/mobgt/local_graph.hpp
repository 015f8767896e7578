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

#ifndef MOBGT_LOCAL_GRAPH_HPP
#define MOBGT_LOCAL_GRAPH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mobgt/data.hpp"
#include "mobgt/geo.hpp"

namespace mobgt::local {

inline constexpr int kMaxHops = 16;
inline constexpr int kCenterHop = kMaxHops + 1;  // sentinel slot for center pairs
inline constexpr int kTimeSlots = 48;
inline constexpr std::int64_t kSlotSeconds = 1800;

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Half-hour slot of the UTC time of day, in [0, 48).
int time_slot(std::int64_t timestamp);

struct LocalEdge {
  int src = 0;  // node index
  int dst = 0;
  int count = 0;
  friend bool operator==(const LocalEdge&, const LocalEdge&) = default;
};

/// Deduplicated graph of one trajectory prefix. Node i < nodes.size() holds
/// label nodes[i] (distinct, first-appearance order); the center node is the
/// extra last index `center()`. Per-node vectors and the square matrices
/// cover node_count() = nodes.size() + 1 entries.
struct LocalMobilityGraph {
  std::vector<int> nodes;
  std::vector<int> sequence;       // node index of every prefix position
  std::vector<LocalEdge> edges;    // ordered by first occurrence
  std::vector<int> self_counts;    // per non-center node
  std::vector<int> times;          // time slot per prefix position
  std::vector<int> in_deg;
  std::vector<int> out_deg;
  std::vector<int> last_pos;
  IntMatrix hop;
  RealMatrix dist_km;
  IntMatrix dist_bin;
  std::vector<std::vector<int>> paths;  // edge indices, row-major over (s, t)
  UserId user = 0;
  int target_label = -1;     // next POI label, -1 when unknown
  int target_category = -1;  // vocab category of the target, -1 when unknown

  int node_count() const { return static_cast<int>(nodes.size()) + 1; }
  int center() const { return static_cast<int>(nodes.size()); }
  int length() const { return static_cast<int>(sequence.size()); }
  /// Slot of the node's last occurrence in the prefix.
  int node_time_slot(int node) const;
  const std::vector<int>& path(int s, int t) const {
    return paths[static_cast<std::size_t>(s * node_count() + t)];
  }
  /// Index into `edges` of u->v, or -1.
  int find_edge(int u, int v) const;
};

/// Builds nodes, edges and self counts from a label sequence (length >= 2).
/// `timestamps` may be empty; otherwise it must match `labels`.
LocalMobilityGraph trajectory_to_graph(std::span<const int> labels,
                                       std::span<const std::int64_t> timestamps = {});

/// Fills in_deg / out_deg (edge multiplicity, center links excluded) and
/// last_pos. The center gets degree node_count() - 1 and last_pos = length.
void structural_features(LocalMobilityGraph& g);

/// BFS hop counts over the undirected non-center edge set, clamped to
/// kMaxHops. Pairs involving the center get kCenterHop off the diagonal.
IntMatrix shortest_hops(const LocalMobilityGraph& g);

/// Unclamped BFS distances between non-center nodes (-1 when unreachable).
IntMatrix bfs_distances(const LocalMobilityGraph& g);

/// Canonical shortest paths: from s, repeatedly step to the smallest-index
/// neighbor that is one hop closer to t. Each undirected step resolves to
/// the stored directed edge u->v if present, else v->u.
std::vector<std::vector<int>> hop_paths(const LocalMobilityGraph& g);

/// Haversine distances between node coordinates and their bin ids. Center
/// pairs get distance 0 and the sentinel bin `bins.count` (diagonal bin 0).
void pairwise_distances(LocalMobilityGraph& g, std::span<const geo::LatLon> node_coords,
                        const geo::BinSpec& bins);

/// Full pipeline for the first `prefix_len` check-ins of `traj`, with labels
/// being vocab POI indices. Throws DataError if the prefix is shorter than 2
/// or holds a POI outside the vocab. The target is the check-in at
/// `prefix_len` when it exists.
LocalMobilityGraph build_local_graph(const Trajectory& traj, std::size_t prefix_len,
                                     const Vocab& vocab, const geo::BinSpec& bins);

/// Pairwise node distances (s < t) of every distinct-POI set of the given
/// trajectories; the sample used to fit distance bins.
std::vector<double> pairwise_distance_sample(const std::vector<Trajectory>& trajs);

/// Plain-text dump: header, node lines, edge lines, then the hop, distance,
/// bin matrices and per-pair paths.
void dump_graph(std::ostream& out, const LocalMobilityGraph& g);

}  // namespace mobgt::local

#endif  // MOBGT_LOCAL_GRAPH_HPP
