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

#include "mobgt/local_graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>

#include "mobgt/error.hpp"

namespace mobgt::local {

int time_slot(std::int64_t timestamp) {
  std::int64_t sod = timestamp % kSecondsPerDay;
  if (sod < 0) sod += kSecondsPerDay;
  return static_cast<int>(sod / kSlotSeconds);
}

int LocalMobilityGraph::node_time_slot(int node) const {
  if (times.empty()) return 0;
  return times[static_cast<std::size_t>(last_pos[static_cast<std::size_t>(node)])];
}

int LocalMobilityGraph::find_edge(int u, int v) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].src == u && edges[i].dst == v) return static_cast<int>(i);
  }
  return -1;
}

LocalMobilityGraph trajectory_to_graph(std::span<const int> labels,
                                       std::span<const std::int64_t> timestamps) {
  if (labels.size() < 2) {
    throw DataError("trajectory_to_graph: prefix must hold at least 2 check-ins, got " +
                    std::to_string(labels.size()));
  }
  if (!timestamps.empty() && timestamps.size() != labels.size()) {
    throw DataError("trajectory_to_graph: timestamp count does not match sequence");
  }
  LocalMobilityGraph g;
  std::unordered_map<int, int> index;
  for (const int label : labels) {
    const auto [it, inserted] = index.emplace(label, static_cast<int>(g.nodes.size()));
    if (inserted) g.nodes.push_back(label);
    g.sequence.push_back(it->second);
  }
  g.self_counts.assign(g.nodes.size(), 0);
  for (std::size_t i = 0; i + 1 < g.sequence.size(); ++i) {
    const int a = g.sequence[i];
    const int b = g.sequence[i + 1];
    if (a == b) {
      ++g.self_counts[static_cast<std::size_t>(a)];
      continue;
    }
    const int e = g.find_edge(a, b);
    if (e >= 0) {
      ++g.edges[static_cast<std::size_t>(e)].count;
    } else {
      g.edges.push_back({a, b, 1});
    }
  }
  for (const auto ts : timestamps) g.times.push_back(time_slot(ts));
  structural_features(g);
  g.hop = shortest_hops(g);
  g.paths = hop_paths(g);
  const int n = g.node_count();
  g.dist_km = RealMatrix::Zero(n, n);
  g.dist_bin = IntMatrix::Zero(n, n);
  return g;
}

void structural_features(LocalMobilityGraph& g) {
  const auto m = g.nodes.size();
  g.in_deg.assign(m + 1, 0);
  g.out_deg.assign(m + 1, 0);
  g.last_pos.assign(m + 1, 0);
  for (const auto& e : g.edges) {
    g.out_deg[static_cast<std::size_t>(e.src)] += e.count;
    g.in_deg[static_cast<std::size_t>(e.dst)] += e.count;
  }
  for (std::size_t i = 0; i < g.sequence.size(); ++i) {
    g.last_pos[static_cast<std::size_t>(g.sequence[i])] = static_cast<int>(i);
  }
  g.in_deg[m] = static_cast<int>(m);
  g.out_deg[m] = static_cast<int>(m);
  g.last_pos[m] = static_cast<int>(g.sequence.size());
}

namespace {

std::vector<std::vector<int>> undirected_neighbors(const LocalMobilityGraph& g) {
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
    adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

}  // namespace

IntMatrix bfs_distances(const LocalMobilityGraph& g) {
  const auto m = static_cast<int>(g.nodes.size());
  const auto adj = undirected_neighbors(g);
  IntMatrix dist = IntMatrix::Constant(m, m, -1);
  std::deque<int> queue;
  for (int s = 0; s < m; ++s) {
    dist(s, s) = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const int v : adj[static_cast<std::size_t>(u)]) {
        if (dist(s, v) < 0) {
          dist(s, v) = dist(s, u) + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return dist;
}

IntMatrix shortest_hops(const LocalMobilityGraph& g) {
  const int n = g.node_count();
  const int c = g.center();
  const IntMatrix dist = bfs_distances(g);
  IntMatrix hop(n, n);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t) {
        hop(s, t) = 0;
      } else if (s == c || t == c) {
        hop(s, t) = kCenterHop;
      } else {
        const int d = dist(s, t);
        hop(s, t) = (d < 0 || d > kMaxHops) ? kMaxHops : d;
      }
    }
  }
  return hop;
}

std::vector<std::vector<int>> hop_paths(const LocalMobilityGraph& g) {
  const int n = g.node_count();
  const int m = static_cast<int>(g.nodes.size());
  const IntMatrix dist = bfs_distances(g);
  const auto adj = undirected_neighbors(g);
  std::vector<std::vector<int>> paths(static_cast<std::size_t>(n * n));
  for (int s = 0; s < m; ++s) {
    for (int t = 0; t < m; ++t) {
      if (s == t || dist(s, t) < 0) continue;
      auto& path = paths[static_cast<std::size_t>(s * n + t)];
      int cur = s;
      while (cur != t) {
        int next = -1;
        for (const int v : adj[static_cast<std::size_t>(cur)]) {
          if (dist(v, t) == dist(cur, t) - 1) {
            next = v;
            break;
          }
        }
        int e = g.find_edge(cur, next);
        if (e < 0) e = g.find_edge(next, cur);
        path.push_back(e);
        cur = next;
      }
    }
  }
  return paths;
}

void pairwise_distances(LocalMobilityGraph& g, std::span<const geo::LatLon> node_coords,
                        const geo::BinSpec& bins) {
  const int n = g.node_count();
  const int c = g.center();
  if (node_coords.size() != g.nodes.size()) {
    throw DataError("pairwise_distances: expected " + std::to_string(g.nodes.size()) +
                    " coordinates, got " + std::to_string(node_coords.size()));
  }
  g.dist_km = RealMatrix::Zero(n, n);
  g.dist_bin = IntMatrix::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t) continue;
      if (s == c || t == c) {
        g.dist_bin(s, t) = bins.count;
        continue;
      }
      // Computed once per unordered pair so the matrix is exactly symmetric.
      if (t < s) {
        g.dist_km(s, t) = g.dist_km(t, s);
        g.dist_bin(s, t) = g.dist_bin(t, s);
        continue;
      }
      const double d = geo::haversine(node_coords[static_cast<std::size_t>(s)],
                                      node_coords[static_cast<std::size_t>(t)]);
      g.dist_km(s, t) = d;
      g.dist_bin(s, t) = geo::bin_index(d, bins);
    }
  }
}

LocalMobilityGraph build_local_graph(const Trajectory& traj, std::size_t prefix_len,
                                     const Vocab& vocab, const geo::BinSpec& bins) {
  if (prefix_len < 2 || prefix_len > traj.size()) {
    throw DataError("build_local_graph: prefix length " + std::to_string(prefix_len) +
                    " outside [2, " + std::to_string(traj.size()) + "]");
  }
  std::vector<int> labels;
  std::vector<std::int64_t> stamps;
  for (std::size_t i = 0; i < prefix_len; ++i) {
    const auto& c = traj.checkins[i];
    const auto idx = vocab.poi_index(c.poi);
    if (!idx) throw DataError("POI " + std::to_string(c.poi) + " is not in the vocabulary");
    labels.push_back(*idx);
    stamps.push_back(c.timestamp);
  }
  LocalMobilityGraph g = trajectory_to_graph(labels, stamps);
  g.user = traj.user;
  std::vector<geo::LatLon> coords;
  coords.reserve(g.nodes.size());
  for (const int label : g.nodes) coords.push_back(vocab.poi_coords[static_cast<std::size_t>(label)]);
  pairwise_distances(g, coords, bins);
  if (prefix_len < traj.size()) {
    const auto target = vocab.poi_index(traj.checkins[prefix_len].poi);
    if (target) {
      g.target_label = *target;
      g.target_category = vocab.poi_to_category[static_cast<std::size_t>(*target)];
    }
  }
  return g;
}

std::vector<double> pairwise_distance_sample(const std::vector<Trajectory>& trajs) {
  std::vector<double> sample;
  for (const auto& t : trajs) {
    std::vector<const CheckIn*> distinct;
    for (const auto& c : t.checkins) {
      const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                    [&c](const CheckIn* d) { return d->poi == c.poi; });
      if (!seen) distinct.push_back(&c);
    }
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      for (std::size_t j = i + 1; j < distinct.size(); ++j) {
        sample.push_back(geo::haversine(distinct[i]->coords(), distinct[j]->coords()));
      }
    }
  }
  return sample;
}

void dump_graph(std::ostream& out, const LocalMobilityGraph& g) {
  const int n = g.node_count();
  out << "# local-graph nodes=" << n << " center=" << g.center() << " length=" << g.length()
      << " user=" << g.user << " target=" << g.target_label << '\n';
  for (int v = 0; v < n; ++v) {
    const auto i = static_cast<std::size_t>(v);
    out << "node\t" << v << '\t' << (v == g.center() ? std::string("center") : std::to_string(g.nodes[i]))
        << "\tin=" << g.in_deg[i] << "\tout=" << g.out_deg[i] << "\tlast=" << g.last_pos[i];
    if (v != g.center()) out << "\tself=" << g.self_counts[i];
    out << '\n';
  }
  for (const auto& e : g.edges) out << "edge\t" << e.src << '\t' << e.dst << '\t' << e.count << '\n';
  const auto matrix = [&out, n](const char* name, const auto& m) {
    out << name << '\n';
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) out << (t ? "\t" : "") << m(s, t);
      out << '\n';
    }
  };
  matrix("hop", g.hop);
  matrix("dist_km", g.dist_km);
  matrix("dist_bin", g.dist_bin);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      const auto& p = g.path(s, t);
      if (p.empty()) continue;
      out << "path\t" << s << '\t' << t;
      for (const int e : p) out << '\t' << e;
      out << '\n';
    }
  }
}

}  // namespace mobgt::local
