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

#include "mobgt/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mobgt/error.hpp"

namespace mobgt::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double haversine(LatLon a, LatLon b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

int fd_bin_count(std::span<const double> dists) {
  if (dists.empty()) {
    throw DataError("fd_bin_count: empty distance sample");
  }
  if (dists.size() < 4) return 1;
  std::vector<double> sorted(dists.begin(), dists.end());
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  if (range <= 0.0 || iqr <= 0.0) return 1;
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
  return std::max(1, static_cast<int>(std::ceil(range / width)));
}

BinSpec make_bins(std::span<const double> dists) {
  const int b = fd_bin_count(dists);
  BinSpec spec;
  if (b == 1) return spec;
  std::vector<double> sorted(dists.begin(), dists.end());
  std::sort(sorted.begin(), sorted.end());
  // Cut points invert the empirical CDF, averaging at jumps: exactly
  // floor(i * n / b) distinct samples fall below edge i.
  const std::size_t n = sorted.size();
  for (int i = 1; i < b; ++i) {
    const std::size_t scaled = static_cast<std::size_t>(i) * n;
    const std::size_t k = scaled / static_cast<std::size_t>(b);
    const double edge = scaled % static_cast<std::size_t>(b) == 0 ? 0.5 * (sorted[k - 1] + sorted[k]) : sorted[k];
    if (edge > sorted.front() && (spec.edges.empty() || edge > spec.edges.back())) {
      spec.edges.push_back(edge);
    }
  }
  spec.count = static_cast<int>(spec.edges.size()) + 1;
  return spec;
}

int bin_index(double d, const BinSpec& spec) {
  // upper_bound gives the first edge strictly greater than d, which is the
  // half-open bin id; values past the last edge land in count - 1.
  const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), d);
  return static_cast<int>(it - spec.edges.begin());
}

}  // namespace mobgt::geo
