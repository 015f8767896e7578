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

#ifndef MOBGT_DATA_HPP
#define MOBGT_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mobgt/geo.hpp"

namespace mobgt {

using UserId = int;
using PoiId = int;
using CategoryId = int;

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// A single visit. Ids are dense corpus ids assigned at parse time.
struct CheckIn {
  UserId user = 0;
  PoiId poi = 0;
  CategoryId category = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t timestamp = 0;  // UTC seconds

  geo::LatLon coords() const { return {lat, lon}; }
  std::int64_t day() const;  // UTC calendar day index since the epoch
  friend bool operator==(const CheckIn&, const CheckIn&) = default;
};

/// One user's check-ins within a single UTC calendar day.
struct Trajectory {
  UserId user = 0;
  std::int64_t session_day = 0;
  std::vector<CheckIn> checkins;

  std::size_t size() const { return checkins.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Raw string ids in dense-id order.
struct RawIds {
  std::vector<std::string> users;
  std::vector<std::string> pois;
  std::vector<std::string> categories;

  std::optional<PoiId> find_poi(const std::string& raw) const;
  std::optional<UserId> find_user(const std::string& raw) const;
};

struct ParsedCheckins {
  std::vector<CheckIn> checkins;
  RawIds ids;
};

/// Parses `user \t poi \t category \t lat \t lon \t timestamp` lines. The
/// timestamp is epoch seconds or ISO-8601 (`YYYY-MM-DD[T ]HH:MM:SS[Z|+hh:mm]`).
/// Blank lines and lines starting with '#' are skipped. Output is stably
/// sorted by (user, timestamp). Throws DataError naming the line.
ParsedCheckins parse_checkins(std::istream& source, const std::string& origin = "<input>");

/// Like parse_checkins, but dense ids extend `ids` instead of starting empty.
std::vector<CheckIn> parse_checkins_with(std::istream& source, RawIds& ids,
                                         const std::string& origin = "<input>");

std::int64_t parse_timestamp(const std::string& text);

struct Segmentation {
  std::vector<Trajectory> trajectories;
  std::size_t discarded_sessions = 0;
  std::size_t discarded_checkins = 0;
};

/// Groups check-ins by (user, UTC day) and drops groups shorter than
/// `min_len`. Output ordered by (user, session_day).
Segmentation segment_trajectories(const std::vector<CheckIn>& checkins, std::size_t min_len = 3);

struct SplitCorpus {
  std::vector<Trajectory> train;
  std::vector<Trajectory> test;
};

/// Per user, the earliest ceil(ratio * n_u) sessions go to train.
SplitCorpus chronological_split(const std::vector<Trajectory>& trajectories, double ratio = 0.8);

/// Holds the last floor(fraction * n_u) trajectories of each user out of
/// `train`. Returns {fit, held_out}.
SplitCorpus holdout_tail(const std::vector<Trajectory>& train, double fraction);

/// Catalog of POIs, categories and users seen in training. POIs and
/// categories get their own dense vocab indices (ascending corpus id); users
/// keep corpus ids.
struct Vocab {
  std::vector<PoiId> poi_ids;                // vocab poi -> corpus poi
  std::vector<CategoryId> category_ids;      // vocab category -> corpus category
  std::vector<int> poi_to_category;          // vocab poi -> vocab category
  std::vector<geo::LatLon> poi_coords;       // vocab poi -> coordinates
  std::vector<std::int64_t> poi_freq;        // vocab poi -> training visits
  int user_count = 0;
  std::size_t coord_conflicts = 0;           // records disagreeing with an earlier one

  int poi_count() const { return static_cast<int>(poi_ids.size()); }
  int category_count() const { return static_cast<int>(category_ids.size()); }

  std::optional<int> poi_index(PoiId corpus_poi) const;
  std::optional<int> category_index(CategoryId corpus_category) const;

  /// Rebuilds the corpus-id lookup tables after the public vectors change.
  void reindex();

 private:
  std::vector<int> poi_lookup_;
  std::vector<int> category_lookup_;
};

Vocab build_vocab(const std::vector<Trajectory>& train);

struct SyntheticConfig {
  int users = 10;
  int pois = 100;
  int categories = 10;
  double min_lat = 35.60;
  double max_lat = 35.80;
  double min_lon = 139.60;
  double max_lon = 139.90;
  int days = 10;
  double regularity = 1.0;
  int loop_len = 4;
  int checkins_per_day = 0;   // 0 means loop_len
  int clusters = 5;
  double cluster_radius_km = 1.0;
  std::int64_t start_epoch = 1609459200;  // 2021-01-01T00:00:00Z
};

/// Deterministic synthetic corpus. Each user walks a fixed loop of nearby
/// POIs once per day; each step follows the loop with probability
/// `regularity` and otherwise jumps to a uniformly random POI.
std::vector<CheckIn> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Writes check-ins as parser-compatible TSV with raw ids `u<id>`, `p<id>`
/// and `c<id>`.
void write_checkins_tsv(std::ostream& out, const std::vector<CheckIn>& checkins);

/// Prepared corpus as persisted by the `prepare` command.
struct Corpus {
  RawIds ids;
  SplitCorpus split;
  std::size_t discarded_sessions = 0;
  std::size_t discarded_checkins = 0;
};

inline constexpr const char* kCorpusMagic = "MOBGT-CORPUS";
inline constexpr int kCorpusVersion = 1;
inline constexpr const char* kCorpusFileName = "corpus.tsv";

void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in, const std::string& origin = "<corpus>");
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

/// Rewrites trajectories parsed under `from` into the id space of `to`. Raw
/// ids unknown to `to` receive fresh ids past its range, so they never match
/// a vocabulary built under `to`.
std::vector<Trajectory> align_ids(const std::vector<Trajectory>& trajs, const RawIds& from, const RawIds& to);

}  // namespace mobgt

#endif  // MOBGT_DATA_HPP
