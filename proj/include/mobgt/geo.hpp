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

#ifndef MOBGT_GEO_HPP
#define MOBGT_GEO_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mobgt::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Great-circle distance in km on a sphere of radius kEarthRadiusKm.
double haversine(LatLon a, LatLon b);

/// Distance bins. `edges` are the interior thresholds, so a BinSpec with
/// `count` bins carries `count - 1` strictly ascending edges.
struct BinSpec {
  std::vector<double> edges;
  int count = 1;
};

/// Quartile by linear interpolation between order statistics. `sorted`
/// must be ascending and non-empty; q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Freedman-Diaconis bin count: ceil(range / (2 * IQR / cbrt(n))), at least
/// 1. Returns 1 when n < 4, IQR == 0 or the range is empty. Throws
/// DataError on empty input.
int fd_bin_count(std::span<const double> dists);

/// Equal-frequency bins whose count comes from fd_bin_count. Duplicate
/// quantile cut points are merged, so heavily tied samples may yield fewer
/// bins than the Freedman-Diaconis count.
BinSpec make_bins(std::span<const double> dists);

/// Half-open intervals [edge_{i-1}, edge_i), clamped to [0, count).
int bin_index(double d, const BinSpec& spec);

}  // namespace mobgt::geo

#endif  // MOBGT_GEO_HPP
