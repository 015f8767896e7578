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

#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mobgt/data.hpp"
#include "mobgt/error.hpp"
#include "support.hpp"

using namespace mobgt;
using mobgt::testing::make_trajectory;

namespace {

ParsedCheckins parse(const std::string& text) {
  std::istringstream in(text);
  return parse_checkins(in, "input.tsv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

std::vector<CheckIn> flatten(const std::vector<Trajectory>& trajs) {
  std::vector<CheckIn> out;
  for (const auto& t : trajs) out.insert(out.end(), t.checkins.begin(), t.checkins.end());
  return out;
}

// One check-in at hour `hour` of UTC day `day`.
CheckIn at(UserId u, PoiId p, std::int64_t day, int hour) {
  return CheckIn{u, p, 0, 10.0, 20.0, day * kSecondsPerDay + hour * 3600};
}

}  // namespace

TEST_CASE("parse_checkins basics") {
  CHECK(parse("").checkins.empty());
  CHECK(parse("# header only\n\n").checkins.empty());

  const auto one = parse("alice\tcafe\tfood\t35.1\t139.2\t1609459200\n");
  REQUIRE(one.checkins.size() == 1);
  const CheckIn& c = one.checkins[0];
  CHECK(c.user == 0);
  CHECK(c.poi == 0);
  CHECK(c.category == 0);
  CHECK(c.lat == 35.1);
  CHECK(c.lon == 139.2);
  CHECK(c.timestamp == 1609459200);
  CHECK(one.ids.users == std::vector<std::string>{"alice"});

  const auto two = parse("a\tX\tk\t1\t2\t100\nb\tX\tk\t1\t2\t200\n");
  REQUIRE(two.checkins.size() == 2);
  CHECK(two.checkins[0].poi == 0);
  CHECK(two.checkins[1].poi == 0);
  CHECK(two.checkins[1].user == 1);
}

TEST_CASE("parse_checkins sorts by user then time and keeps input order on ties") {
  const auto parsed = parse(
      "b\tp1\tc\t0\t0\t300\n"
      "a\tp2\tc\t0\t0\t200\n"
      "a\tp3\tc\t0\t0\t100\n"
      "a\tp4\tc\t0\t0\t100\n");
  REQUIRE(parsed.checkins.size() == 4);
  CHECK(parsed.ids.users == std::vector<std::string>{"b", "a"});
  CHECK(parsed.checkins[0].user == 0);
  CHECK(parsed.ids.pois[static_cast<std::size_t>(parsed.checkins[1].poi)] == "p3");
  CHECK(parsed.ids.pois[static_cast<std::size_t>(parsed.checkins[2].poi)] == "p4");
  CHECK(parsed.ids.pois[static_cast<std::size_t>(parsed.checkins[3].poi)] == "p2");
}

TEST_CASE("parse_checkins errors carry the line and field") {
  CHECK(error_of("a\tb\tc\t1\t2\n").find("input.tsv:1") != std::string::npos);
  CHECK(error_of("# c\na\tb\tc\t1\t2\t3\na\tb\n").find("input.tsv:3") != std::string::npos);
  CHECK(error_of("a\tb\tc\t91\t2\t3\n").find("lat") != std::string::npos);
  CHECK(error_of("a\tb\tc\t1\t-181\t3\n").find("lon") != std::string::npos);
  CHECK(error_of("a\tb\tc\tx\t2\t3\n").find("lat") != std::string::npos);
  CHECK(error_of("a\tb\tc\t1\t2\t0\n").find("timestamp") != std::string::npos);
  CHECK(error_of("a\tb\tc\t1\t2\tyesterday\n").find("input.tsv:1") != std::string::npos);
}

TEST_CASE("parse_timestamp accepts epoch and ISO-8601 forms") {
  CHECK(parse_timestamp("1609459200") == 1609459200);
  CHECK(parse_timestamp("2021-01-01T00:00:00Z") == 1609459200);
  CHECK(parse_timestamp("2021-01-01 00:00:00") == 1609459200);
  CHECK(parse_timestamp("2021-01-01T09:00:00+09:00") == 1609459200);
  CHECK(parse_timestamp("2020-12-31T19:00:00-0500") == 1609459200);
  CHECK(parse_timestamp("2021-01-01T00:00:00.750Z") == 1609459200);
  CHECK_THROWS_AS(parse_timestamp("2021-02-30T00:00:00Z"), DataError);
  CHECK_THROWS_AS(parse_timestamp("soon"), DataError);
}

TEST_CASE("segment_trajectories reference cases") {
  SUBCASE("one day of three") {
    const auto seg = segment_trajectories({at(0, 1, 10, 8), at(0, 2, 10, 9), at(0, 3, 10, 10)});
    REQUIRE(seg.trajectories.size() == 1);
    CHECK(seg.trajectories[0].size() == 3);
    CHECK(seg.trajectories[0].session_day == 10);
    CHECK(seg.discarded_sessions == 0);
  }
  SUBCASE("short second day is dropped") {
    const auto seg = segment_trajectories(
        {at(0, 1, 10, 8), at(0, 2, 10, 9), at(0, 3, 10, 10), at(0, 1, 11, 8), at(0, 2, 11, 9)});
    REQUIRE(seg.trajectories.size() == 1);
    CHECK(seg.discarded_sessions == 1);
    CHECK(seg.discarded_checkins == 2);
  }
  SUBCASE("midnight split leaves two short sessions") {
    const auto seg = segment_trajectories({at(0, 1, 10, 22), at(0, 2, 10, 23), at(0, 3, 11, 0), at(0, 4, 11, 1)});
    CHECK(seg.trajectories.empty());
    CHECK(seg.discarded_sessions == 2);
  }
}

TEST_CASE("segmentation invariants and idempotence") {
  SyntheticConfig cfg;
  cfg.users = 6;
  cfg.days = 8;
  cfg.regularity = 0.5;
  cfg.checkins_per_day = 5;
  auto checkins = generate_synthetic(cfg, 3);
  // Drop some check-ins so a few sessions fall under the minimum length.
  std::vector<CheckIn> thinned;
  for (std::size_t i = 0; i < checkins.size(); ++i) {
    if (i % 3 != 0 && i % 5 != 0) thinned.push_back(checkins[i]);
  }
  const auto seg = segment_trajectories(thinned);
  CHECK(seg.discarded_sessions > 0);
  for (const auto& t : seg.trajectories) {
    CHECK(t.size() >= 3);
    for (const auto& c : t.checkins) {
      CHECK(c.user == t.user);
      CHECK(c.day() == t.session_day);
    }
    CHECK(std::is_sorted(t.checkins.begin(), t.checkins.end(),
                         [](const CheckIn& a, const CheckIn& b) { return a.timestamp < b.timestamp; }));
  }
  const auto again = segment_trajectories(flatten(seg.trajectories));
  CHECK(again.trajectories == seg.trajectories);
  CHECK(again.discarded_sessions == 0);
}

TEST_CASE("chronological_split reference cases") {
  std::vector<Trajectory> five;
  for (int d = 0; d < 5; ++d) five.push_back(make_trajectory(0, d, {1, 2, 3}));
  auto split = chronological_split(five);
  CHECK(split.train.size() == 4);
  CHECK(split.test.size() == 1);

  split = chronological_split({make_trajectory(0, 1, {1, 2, 3})});
  CHECK(split.train.size() == 1);
  CHECK(split.test.empty());

  std::vector<Trajectory> ten;
  for (int d = 9; d >= 0; --d) ten.push_back(make_trajectory(0, d, {1, 2, 3}));
  split = chronological_split(ten);
  REQUIRE(split.train.size() == 8);
  REQUIRE(split.test.size() == 2);
  for (int i = 0; i < 8; ++i) CHECK(split.train[static_cast<std::size_t>(i)].session_day == i);
  CHECK(split.test[0].session_day == 8);
  CHECK(split.test[1].session_day == 9);

  CHECK_THROWS_AS(chronological_split(five, 0.0), UsageError);
  CHECK_THROWS_AS(chronological_split(five, 1.0), UsageError);
}

TEST_CASE("chronological_split is per user and chronological") {
  std::mt19937_64 rng(1);
  std::vector<Trajectory> trajs;
  std::map<UserId, int> per_user;
  for (UserId u = 0; u < 7; ++u) {
    const int n = 1 + static_cast<int>(rng() % 12);
    per_user[u] = n;
    for (int d = 0; d < n; ++d) trajs.push_back(make_trajectory(u, 100 + 2 * d, {1, 2, 3}));
  }
  const auto split = chronological_split(trajs, 0.8);
  for (const auto& [u, n] : per_user) {
    const auto count = [u = u](const std::vector<Trajectory>& v) {
      return std::count_if(v.begin(), v.end(), [u](const Trajectory& t) { return t.user == u; });
    };
    const auto n_train = count(split.train);
    CHECK(n_train == static_cast<long>(std::ceil(0.8 * n - 1e-9)));
    CHECK(n_train + count(split.test) == n);
    CHECK(std::abs(static_cast<double>(n_train) - 0.8 * n) <= 1.0);
    for (const auto& a : split.train) {
      for (const auto& b : split.test) {
        if (a.user == u && b.user == u) CHECK(a.session_day <= b.session_day);
      }
    }
  }
}

TEST_CASE("holdout_tail carves the last sessions of each user") {
  std::vector<Trajectory> train;
  for (int d = 0; d < 20; ++d) train.push_back(make_trajectory(0, d, {1, 2, 3}));
  for (int d = 0; d < 5; ++d) train.push_back(make_trajectory(1, d, {1, 2, 3}));
  const auto parts = holdout_tail(train, 0.1);
  CHECK(parts.train.size() == 23);
  REQUIRE(parts.test.size() == 2);
  CHECK(parts.test[0].session_day == 18);
  CHECK(parts.test[1].session_day == 19);
}

TEST_CASE("build_vocab counts and last-record-wins") {
  const auto v = build_vocab({make_trajectory(0, 0, {5, 9, 5})});
  REQUIRE(v.poi_count() == 2);
  CHECK(v.poi_freq[static_cast<std::size_t>(*v.poi_index(5))] == 2);
  CHECK(v.poi_freq[static_cast<std::size_t>(*v.poi_index(9))] == 1);
  CHECK_FALSE(v.poi_index(7).has_value());

  const auto two_users = build_vocab({make_trajectory(0, 0, {4, 1, 2}), make_trajectory(1, 0, {4, 2, 3})});
  CHECK(two_users.poi_freq[static_cast<std::size_t>(*two_users.poi_index(4))] == 2);
  CHECK(two_users.user_count == 2);

  auto a = make_trajectory(0, 0, {1, 2, 3});
  auto b = make_trajectory(0, 1, {1, 2, 3});
  b.checkins[0].lat = 40.0;
  b.checkins[0].category = 2;
  const auto moved = build_vocab({a, b});
  const auto idx = static_cast<std::size_t>(*moved.poi_index(1));
  CHECK(moved.poi_coords[idx].lat == 40.0);
  CHECK(moved.category_ids[static_cast<std::size_t>(moved.poi_to_category[idx])] == 2);
  CHECK(moved.coord_conflicts == 1);
}

TEST_CASE("vocab frequencies sum to the training check-in count") {
  SyntheticConfig cfg;
  cfg.users = 8;
  cfg.regularity = 0.6;
  const auto seg = segment_trajectories(generate_synthetic(cfg, 17));
  const auto split = chronological_split(seg.trajectories);
  const auto v = build_vocab(split.train);
  const auto total = std::accumulate(v.poi_freq.begin(), v.poi_freq.end(), std::int64_t{0});
  std::int64_t expect = 0;
  for (const auto& t : split.train) expect += static_cast<std::int64_t>(t.size());
  CHECK(total == expect);
  for (auto f : v.poi_freq) CHECK(f >= 1);
  CHECK(std::is_sorted(v.poi_ids.begin(), v.poi_ids.end()));
  for (int i = 0; i < v.poi_count(); ++i) {
    CHECK(*v.poi_index(v.poi_ids[static_cast<std::size_t>(i)]) == i);
  }
}

TEST_CASE("synthetic generator determinism and routine loops") {
  SyntheticConfig cfg;
  cfg.users = 3;
  std::ostringstream a;
  std::ostringstream b;
  write_checkins_tsv(a, generate_synthetic(cfg, 123));
  write_checkins_tsv(b, generate_synthetic(cfg, 123));
  CHECK(a.str() == b.str());
  std::ostringstream c;
  write_checkins_tsv(c, generate_synthetic(cfg, 124));
  CHECK(a.str() != c.str());

  cfg.users = 1;
  cfg.days = 3;
  cfg.loop_len = 4;
  const auto loop = generate_synthetic(cfg, 9);
  REQUIRE(loop.size() == 12);
  std::set<PoiId> distinct;
  for (int i = 0; i < 4; ++i) distinct.insert(loop[static_cast<std::size_t>(i)].poi);
  CHECK(distinct.size() == 4);
  for (std::size_t i = 4; i < loop.size(); ++i) CHECK(loop[i].poi == loop[i - 4].poi);
  const auto seg = segment_trajectories(loop);
  CHECK(seg.trajectories.size() == 3);

  cfg.min_lat = 40.0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), UsageError);
}

TEST_CASE("synthetic r=0 transitions are uniform under a chi-square test") {
  SyntheticConfig cfg;
  cfg.users = 4;
  cfg.pois = 8;
  cfg.categories = 2;
  cfg.days = 600;
  cfg.checkins_per_day = 10;
  cfg.regularity = 0.0;
  const auto checkins = generate_synthetic(cfg, 2024);
  const int p = cfg.pois;
  std::vector<double> counts(static_cast<std::size_t>(p * p), 0.0);
  std::vector<double> row_totals(static_cast<std::size_t>(p), 0.0);
  for (std::size_t i = 1; i < checkins.size(); ++i) {
    const auto& prev = checkins[i - 1];
    const auto& cur = checkins[i];
    if (prev.user != cur.user || prev.day() != cur.day()) continue;
    counts[static_cast<std::size_t>(prev.poi * p + cur.poi)] += 1.0;
    row_totals[static_cast<std::size_t>(prev.poi)] += 1.0;
  }
  double chi2 = 0.0;
  for (int s = 0; s < p; ++s) {
    const double expected = row_totals[static_cast<std::size_t>(s)] / p;
    REQUIRE(expected > 20.0);
    for (int t = 0; t < p; ++t) {
      const double diff = counts[static_cast<std::size_t>(s * p + t)] - expected;
      chi2 += diff * diff / expected;
    }
  }
  // Wilson-Hilferty 0.999 quantile of chi-square with p (p - 1) degrees of freedom.
  const double df = p * (p - 1);
  const double z = 3.090232;
  const double critical = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
  CHECK(chi2 < critical);
}

TEST_CASE("TSV writer output parses back to the same records") {
  SyntheticConfig cfg;
  cfg.users = 2;
  const auto original = generate_synthetic(cfg, 5);
  std::stringstream buf;
  write_checkins_tsv(buf, original);
  const auto parsed = parse_checkins(buf);
  REQUIRE(parsed.checkins.size() == original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& o = original[i];
    const auto& r = parsed.checkins[i];
    CHECK(parsed.ids.pois[static_cast<std::size_t>(r.poi)] == "p" + std::to_string(o.poi));
    CHECK(r.lat == o.lat);
    CHECK(r.lon == o.lon);
    CHECK(r.timestamp == o.timestamp);
  }
}

TEST_CASE("corpus cache round trip is byte-identical") {
  SyntheticConfig cfg;
  cfg.users = 3;
  cfg.regularity = 0.7;
  std::stringstream tsv;
  write_checkins_tsv(tsv, generate_synthetic(cfg, 8));
  auto parsed = parse_checkins(tsv);
  auto seg = segment_trajectories(parsed.checkins);
  Corpus corpus{parsed.ids, chronological_split(seg.trajectories), seg.discarded_sessions, seg.discarded_checkins};

  std::stringstream first;
  write_corpus(first, corpus);
  const Corpus back = read_corpus(first);
  CHECK(back.split.train == corpus.split.train);
  CHECK(back.split.test == corpus.split.test);
  CHECK(back.ids.pois == corpus.ids.pois);
  std::stringstream second;
  write_corpus(second, back);
  CHECK(first.str() == second.str());

  std::istringstream bad("NOT-A-CORPUS\t1\n");
  CHECK_THROWS_AS(read_corpus(bad), DataError);
  std::string truncated = first.str();
  truncated.resize(truncated.size() / 2);
  truncated = truncated.substr(0, truncated.rfind('\n') + 1);
  std::istringstream cut(truncated);
  CHECK_THROWS_AS(read_corpus(cut), DataError);
}
