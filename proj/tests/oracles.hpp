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

#ifndef MOBGT_TESTS_ORACLES_HPP
#define MOBGT_TESTS_ORACLES_HPP

// Brute-force reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mobgt/geo.hpp"
#include "mobgt/local_graph.hpp"

namespace mobgt::testing {

// Angle between unit vectors via atan2(|a x b|, a . b) in long double.
inline double great_circle_oracle(geo::LatLon a, geo::LatLon b) {
  const long double k = std::numbers::pi_v<long double> / 180.0L;
  const auto vec = [k](geo::LatLon p) {
    const long double la = p.lat * k;
    const long double lo = p.lon * k;
    return std::array<long double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  };
  const auto u = vec(a);
  const auto v = vec(b);
  const long double cx = u[1] * v[2] - u[2] * v[1];
  const long double cy = u[2] * v[0] - u[0] * v[2];
  const long double cz = u[0] * v[1] - u[1] * v[0];
  const long double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const long double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return static_cast<double>(6371.0L * std::atan2(cross, dot));
}

// Inverse empirical CDF with averaging at the jumps, computed from the
// 1-based definition.
inline double inverse_ecdf_avg(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double np = p * static_cast<double>(xs.size());
  const double j = std::floor(np + 1e-12);
  if (std::abs(np - j) < 1e-9) {
    const auto jj = static_cast<std::size_t>(j);
    return 0.5 * (xs[jj - 1] + xs[jj]);
  }
  return xs[static_cast<std::size_t>(std::ceil(np)) - 1];
}

inline int linear_scan_bin(double d, const geo::BinSpec& spec) {
  int bin = 0;
  for (double e : spec.edges) {
    if (d >= e) ++bin;
  }
  return bin;
}

inline geo::LatLon random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(-89.0, 89.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  return {lat(rng), lon(rng)};
}

// All-pairs shortest hops on the undirected non-center edge set.
inline local::IntMatrix floyd_warshall(const local::LocalMobilityGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  const int inf = 1 << 20;
  local::IntMatrix d = local::IntMatrix::Constant(n, n, inf);
  for (int v = 0; v < n; ++v) d(v, v) = 0;
  for (const auto& e : g.edges) {
    d(e.src, e.dst) = std::min(d(e.src, e.dst), 1);
    d(e.dst, e.src) = std::min(d(e.dst, e.src), 1);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    }
  }
  return d;
}

inline std::vector<int> random_walk_labels(std::mt19937_64& rng, int alphabet, int length) {
  std::vector<int> labels(static_cast<std::size_t>(length));
  for (auto& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(alphabet)) * 7 + 3;
  return labels;
}

}  // namespace mobgt::testing

#endif  // MOBGT_TESTS_ORACLES_HPP
