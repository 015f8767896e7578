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

#include "mobgt/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "mobgt/error.hpp"

namespace mobgt {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Reads a fixed-width unsigned field; returns -1 on failure.
int digits(const std::string& s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) return -1;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return -1;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

class IdTable {
 public:
  explicit IdTable(std::vector<std::string>& names) : names_(names) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      index_.emplace(names_[i], static_cast<int>(i));
    }
  }

  int intern(const std::string& raw) {
    const auto [it, inserted] = index_.emplace(raw, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(raw);
    return it->second;
  }

 private:
  std::vector<std::string>& names_;
  std::unordered_map<std::string, int> index_;
};

std::optional<int> find_raw(const std::vector<std::string>& names, const std::string& raw) {
  const auto it = std::find(names.begin(), names.end(), raw);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

}  // namespace

std::int64_t CheckIn::day() const {
  // Floor division so pre-epoch values would still group correctly.
  return timestamp >= 0 ? timestamp / kSecondsPerDay
                        : -((-timestamp + kSecondsPerDay - 1) / kSecondsPerDay);
}

std::optional<PoiId> RawIds::find_poi(const std::string& raw) const { return find_raw(pois, raw); }

std::optional<UserId> RawIds::find_user(const std::string& raw) const {
  return find_raw(users, raw);
}

std::int64_t parse_timestamp(const std::string& text) {
  std::int64_t epoch = 0;
  if (parse_number(text, epoch)) return epoch;

  // YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+hh:mm|+hhmm]
  const int year = digits(text, 0, 4);
  const int month = digits(text, 5, 2);
  const int day = digits(text, 8, 2);
  const int hour = digits(text, 11, 2);
  const int minute = digits(text, 14, 2);
  const int second = digits(text, 17, 2);
  if (year < 0 || month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 ||
      minute < 0 || minute > 59 || second < 0 || second > 60 || text[4] != '-' ||
      text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
      text[16] != ':') {
    throw DataError("unrecognized timestamp '" + text + "'");
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  std::int64_t offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if (sign == '+' || sign == '-') {
      const int oh = digits(text, pos + 1, 2);
      const bool colon = pos + 3 < text.size() && text[pos + 3] == ':';
      const int om = digits(text, pos + (colon ? 4 : 3), 2);
      const std::size_t end = pos + (colon ? 6 : 5);
      if (oh < 0 || om < 0 || end != text.size()) {
        throw DataError("unrecognized timestamp offset in '" + text + "'");
      }
      offset = (sign == '+' ? 1 : -1) * (oh * 3600 + om * 60);
    } else {
      throw DataError("unrecognized timestamp '" + text + "'");
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw DataError("invalid calendar date in '" + text + "'");
  const std::int64_t days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return days_since_epoch * kSecondsPerDay + hour * 3600 + minute * 60 + second - offset;
}

std::vector<CheckIn> parse_checkins_with(std::istream& source, RawIds& ids,
                                         const std::string& origin) {
  IdTable users(ids.users);
  IdTable pois(ids.pois);
  IdTable categories(ids.categories);
  std::vector<CheckIn> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto where = origin + ":" + std::to_string(line_no);
    const auto fields = split_tabs(line);
    if (fields.size() != 6) {
      throw DataError(where + ": expected 6 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    CheckIn c;
    if (!parse_number(fields[3], c.lat)) throw DataError(where + ": malformed lat '" + fields[3] + "'");
    if (!parse_number(fields[4], c.lon)) throw DataError(where + ": malformed lon '" + fields[4] + "'");
    if (!(c.lat >= -90.0 && c.lat <= 90.0)) throw DataError(where + ": lat out of range [-90, 90]");
    if (!(c.lon >= -180.0 && c.lon <= 180.0)) {
      throw DataError(where + ": lon out of range [-180, 180]");
    }
    try {
      c.timestamp = parse_timestamp(fields[5]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (c.timestamp <= 0) throw DataError(where + ": timestamp must be positive");
    c.user = users.intern(fields[0]);
    c.poi = pois.intern(fields[1]);
    c.category = categories.intern(fields[2]);
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const CheckIn& a, const CheckIn& b) {
    return a.user != b.user ? a.user < b.user : a.timestamp < b.timestamp;
  });
  return out;
}

ParsedCheckins parse_checkins(std::istream& source, const std::string& origin) {
  ParsedCheckins parsed;
  parsed.checkins = parse_checkins_with(source, parsed.ids, origin);
  return parsed;
}

Segmentation segment_trajectories(const std::vector<CheckIn>& checkins, std::size_t min_len) {
  std::vector<CheckIn> sorted = checkins;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CheckIn& a, const CheckIn& b) {
    return a.user != b.user ? a.user < b.user : a.timestamp < b.timestamp;
  });
  Segmentation seg;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    const UserId user = sorted[i].user;
    const std::int64_t day = sorted[i].day();
    while (j < sorted.size() && sorted[j].user == user && sorted[j].day() == day) ++j;
    if (j - i >= min_len) {
      Trajectory t;
      t.user = user;
      t.session_day = day;
      t.checkins.assign(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                        sorted.begin() + static_cast<std::ptrdiff_t>(j));
      seg.trajectories.push_back(std::move(t));
    } else {
      ++seg.discarded_sessions;
      seg.discarded_checkins += j - i;
    }
    i = j;
  }
  return seg;
}

namespace {

// Groups trajectories by user (ascending), each group sorted by day.
std::map<UserId, std::vector<const Trajectory*>> by_user(const std::vector<Trajectory>& trajs) {
  std::map<UserId, std::vector<const Trajectory*>> groups;
  for (const auto& t : trajs) groups[t.user].push_back(&t);
  for (auto& [user, list] : groups) {
    std::stable_sort(list.begin(), list.end(), [](const Trajectory* a, const Trajectory* b) {
      return a->session_day < b->session_day;
    });
  }
  return groups;
}

}  // namespace

SplitCorpus chronological_split(const std::vector<Trajectory>& trajectories, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw UsageError("chronological_split: ratio must lie in (0, 1)");
  }
  SplitCorpus split;
  for (const auto& [user, list] : by_user(trajectories)) {
    const auto n = list.size();
    // The epsilon keeps products such as 0.8 * 5 from rounding up past 4.
    auto n_train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? split.train : split.test).push_back(*list[i]);
    }
  }
  return split;
}

SplitCorpus holdout_tail(const std::vector<Trajectory>& train, double fraction) {
  SplitCorpus out;
  for (const auto& [user, list] : by_user(train)) {
    const auto n = list.size();
    const auto n_hold = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
      (i + n_hold < n ? out.train : out.test).push_back(*list[i]);
    }
  }
  return out;
}

std::optional<int> Vocab::poi_index(PoiId corpus_poi) const {
  if (corpus_poi < 0 || static_cast<std::size_t>(corpus_poi) >= poi_lookup_.size()) return std::nullopt;
  const int idx = poi_lookup_[static_cast<std::size_t>(corpus_poi)];
  if (idx < 0) return std::nullopt;
  return idx;
}

std::optional<int> Vocab::category_index(CategoryId corpus_category) const {
  if (corpus_category < 0 ||
      static_cast<std::size_t>(corpus_category) >= category_lookup_.size()) {
    return std::nullopt;
  }
  const int idx = category_lookup_[static_cast<std::size_t>(corpus_category)];
  if (idx < 0) return std::nullopt;
  return idx;
}

void Vocab::reindex() {
  const auto fill = [](const std::vector<int>& ids, std::vector<int>& lookup) {
    const int max_id = ids.empty() ? -1 : *std::max_element(ids.begin(), ids.end());
    lookup.assign(static_cast<std::size_t>(max_id + 1), -1);
    for (std::size_t i = 0; i < ids.size(); ++i) lookup[static_cast<std::size_t>(ids[i])] = static_cast<int>(i);
  };
  fill(poi_ids, poi_lookup_);
  fill(category_ids, category_lookup_);
}

Vocab build_vocab(const std::vector<Trajectory>& train) {
  struct PoiRecord {
    CategoryId category = 0;
    geo::LatLon coords;
    std::int64_t freq = 0;
  };
  std::map<PoiId, PoiRecord> pois;
  std::map<CategoryId, int> categories;
  Vocab vocab;
  for (const auto& t : train) {
    vocab.user_count = std::max(vocab.user_count, t.user + 1);
    for (const auto& c : t.checkins) {
      auto [it, inserted] = pois.try_emplace(c.poi);
      PoiRecord& rec = it->second;
      if (!inserted && (rec.category != c.category || rec.coords.lat != c.lat ||
                        rec.coords.lon != c.lon)) {
        ++vocab.coord_conflicts;
      }
      rec.category = c.category;
      rec.coords = c.coords();
      ++rec.freq;
    }
  }
  for (const auto& [poi, rec] : pois) categories.emplace(rec.category, 0);
  for (const auto& [cat, unused] : categories) vocab.category_ids.push_back(cat);
  for (const auto& [poi, rec] : pois) {
    vocab.poi_ids.push_back(poi);
    vocab.poi_coords.push_back(rec.coords);
    vocab.poi_freq.push_back(rec.freq);
  }
  vocab.reindex();
  for (const auto& [poi, rec] : pois) {
    vocab.poi_to_category.push_back(*vocab.category_index(rec.category));
  }
  return vocab;
}

std::vector<CheckIn> generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (!(cfg.min_lat < cfg.max_lat && cfg.min_lon < cfg.max_lon && cfg.min_lat >= -90.0 &&
        cfg.max_lat <= 90.0 && cfg.min_lon >= -180.0 && cfg.max_lon <= 180.0)) {
    throw UsageError("generate_synthetic: invalid bounding box");
  }
  if (cfg.users < 1 || cfg.pois < 1 || cfg.categories < 1 || cfg.days < 1 || cfg.loop_len < 1 ||
      cfg.clusters < 1) {
    throw UsageError("generate_synthetic: counts must be positive");
  }
  if (!(cfg.regularity >= 0.0 && cfg.regularity <= 1.0)) {
    throw UsageError("generate_synthetic: regularity must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double km_per_deg_lat = geo::kEarthRadiusKm * std::numbers::pi / 180.0;
  std::vector<geo::LatLon> centers(static_cast<std::size_t>(cfg.clusters));
  for (auto& c : centers) {
    c.lat = cfg.min_lat + unit(rng) * (cfg.max_lat - cfg.min_lat);
    c.lon = cfg.min_lon + unit(rng) * (cfg.max_lon - cfg.min_lon);
  }
  struct PoiSite {
    geo::LatLon where;
    CategoryId category = 0;
  };
  std::vector<PoiSite> sites(static_cast<std::size_t>(cfg.pois));
  std::vector<std::vector<PoiId>> cluster_members(centers.size());
  for (int p = 0; p < cfg.pois; ++p) {
    const auto k = static_cast<std::size_t>(p % cfg.clusters);
    const auto& center = centers[k];
    const double km_per_deg_lon = km_per_deg_lat * std::cos(center.lat * std::numbers::pi / 180.0);
    auto& s = sites[static_cast<std::size_t>(p)];
    s.where.lat = std::clamp(center.lat + normal(rng) * cfg.cluster_radius_km / km_per_deg_lat,
                             cfg.min_lat, cfg.max_lat);
    s.where.lon = std::clamp(center.lon + normal(rng) * cfg.cluster_radius_km / km_per_deg_lon,
                             cfg.min_lon, cfg.max_lon);
    s.category = static_cast<CategoryId>(rng() % static_cast<std::uint64_t>(cfg.categories));
    cluster_members[k].push_back(p);
  }

  // Routine loops draw distinct POIs from the user's home cluster while the
  // cluster has unused ones left.
  std::vector<std::size_t> next_unused(centers.size(), 0);
  std::vector<std::vector<PoiId>> loops(static_cast<std::size_t>(cfg.users));
  for (int u = 0; u < cfg.users; ++u) {
    const auto k = static_cast<std::size_t>(u % cfg.clusters);
    const auto& members = cluster_members[k];
    auto& loop = loops[static_cast<std::size_t>(u)];
    for (int i = 0; i < cfg.loop_len; ++i) {
      if (members.empty()) {
        loop.push_back(static_cast<PoiId>(rng() % static_cast<std::uint64_t>(cfg.pois)));
      } else if (next_unused[k] < members.size()) {
        loop.push_back(members[next_unused[k]++]);
      } else {
        loop.push_back(members[rng() % members.size()]);
      }
    }
  }

  const int per_day = cfg.checkins_per_day > 0 ? cfg.checkins_per_day : cfg.loop_len;
  const std::int64_t first_slot = 7 * 3600;
  const std::int64_t span = 14 * 3600;
  const std::int64_t step = span / per_day;
  const std::int64_t jitter = std::max<std::int64_t>(1, std::min<std::int64_t>(step, 1200));
  std::vector<CheckIn> out;
  out.reserve(static_cast<std::size_t>(cfg.users) * static_cast<std::size_t>(cfg.days) *
              static_cast<std::size_t>(per_day));
  for (int u = 0; u < cfg.users; ++u) {
    const auto& loop = loops[static_cast<std::size_t>(u)];
    for (int d = 0; d < cfg.days; ++d) {
      for (int i = 0; i < per_day; ++i) {
        PoiId poi = loop[static_cast<std::size_t>(i % cfg.loop_len)];
        if (unit(rng) >= cfg.regularity) {
          poi = static_cast<PoiId>(rng() % static_cast<std::uint64_t>(cfg.pois));
        }
        const auto& site = sites[static_cast<std::size_t>(poi)];
        CheckIn c;
        c.user = u;
        c.poi = poi;
        c.category = site.category;
        c.lat = site.where.lat;
        c.lon = site.where.lon;
        c.timestamp = cfg.start_epoch + d * kSecondsPerDay + first_slot + i * step +
                      static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(jitter));
        out.push_back(c);
      }
    }
  }
  return out;
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_checkins_tsv(std::ostream& out, const std::vector<CheckIn>& checkins) {
  for (const auto& c : checkins) {
    out << 'u' << c.user << "\tp" << c.poi << "\tc" << c.category << '\t' << shortest(c.lat) << '\t'
        << shortest(c.lon) << '\t' << c.timestamp << '\n';
  }
}

// Corpus cache layout (UTF-8, tab-separated, one record per line):
//   MOBGT-CORPUS <tab> 1
//   U <tab> raw-user          one line per dense user id, in order
//   P <tab> raw-poi           one line per dense poi id
//   K <tab> raw-category      one line per dense category id
//   D <tab> sessions <tab> checkins      discard counters
//   T <tab> train|test <tab> user <tab> day <tab> length
//   C <tab> poi <tab> category <tab> lat <tab> lon <tab> timestamp
// Each T line is followed by exactly `length` C lines. Doubles use 17
// significant digits so a reload is bit-exact.
void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << kCorpusMagic << '\t' << kCorpusVersion << '\n';
  for (const auto& u : corpus.ids.users) out << "U\t" << u << '\n';
  for (const auto& p : corpus.ids.pois) out << "P\t" << p << '\n';
  for (const auto& k : corpus.ids.categories) out << "K\t" << k << '\n';
  out << "D\t" << corpus.discarded_sessions << '\t' << corpus.discarded_checkins << '\n';
  const auto emit = [&out](const char* split, const std::vector<Trajectory>& trajs) {
    for (const auto& t : trajs) {
      out << "T\t" << split << '\t' << t.user << '\t' << t.session_day << '\t' << t.size() << '\n';
      for (const auto& c : t.checkins) {
        out << "C\t" << c.poi << '\t' << c.category << '\t' << std::setprecision(17) << c.lat
            << '\t' << c.lon << '\t' << c.timestamp << '\n';
      }
    }
  };
  emit("train", corpus.split.train);
  emit("test", corpus.split.test);
}

Corpus read_corpus(std::istream& in, const std::string& origin) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& msg) -> DataError {
    return DataError(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) throw DataError(origin + ": empty corpus file");
  ++line_no;
  if (line != std::string(kCorpusMagic) + "\t" + std::to_string(kCorpusVersion)) {
    throw fail("bad corpus header (expected " + std::string(kCorpusMagic) + " version " +
               std::to_string(kCorpusVersion) + ")");
  }
  Trajectory* open = nullptr;
  std::size_t remaining = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    const std::string& tag = f[0];
    if (remaining > 0 && tag != "C") throw fail("trajectory truncated");
    if (tag == "U" && f.size() == 2) {
      corpus.ids.users.push_back(f[1]);
    } else if (tag == "P" && f.size() == 2) {
      corpus.ids.pois.push_back(f[1]);
    } else if (tag == "K" && f.size() == 2) {
      corpus.ids.categories.push_back(f[1]);
    } else if (tag == "D" && f.size() == 3) {
      if (!parse_number(f[1], corpus.discarded_sessions) ||
          !parse_number(f[2], corpus.discarded_checkins)) {
        throw fail("malformed discard counters");
      }
    } else if (tag == "T" && f.size() == 5) {
      auto& dst = f[1] == "train" ? corpus.split.train : corpus.split.test;
      if (f[1] != "train" && f[1] != "test") throw fail("unknown split '" + f[1] + "'");
      Trajectory t;
      if (!parse_number(f[2], t.user) || !parse_number(f[3], t.session_day) ||
          !parse_number(f[4], remaining)) {
        throw fail("malformed trajectory header");
      }
      dst.push_back(std::move(t));
      open = &dst.back();
    } else if (tag == "C" && f.size() == 6) {
      if (open == nullptr || remaining == 0) throw fail("check-in outside a trajectory");
      CheckIn c;
      c.user = open->user;
      if (!parse_number(f[1], c.poi) || !parse_number(f[2], c.category) ||
          !parse_number(f[3], c.lat) || !parse_number(f[4], c.lon) ||
          !parse_number(f[5], c.timestamp)) {
        throw fail("malformed check-in record");
      }
      open->checkins.push_back(c);
      --remaining;
    } else {
      throw fail("unrecognized record '" + tag + "'");
    }
  }
  if (remaining > 0) throw fail("trajectory truncated at end of file");
  return corpus;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  const auto path = dir / kCorpusFileName;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_corpus(out, corpus);
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const auto path = dir / kCorpusFileName;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return read_corpus(in, path.string());
}

std::vector<Trajectory> align_ids(const std::vector<Trajectory>& trajs, const RawIds& from, const RawIds& to) {
  const auto index = [](const std::vector<std::string>& names) {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < names.size(); ++i) m.emplace(names[i], static_cast<int>(i));
    return m;
  };
  const auto users = index(to.users);
  const auto pois = index(to.pois);
  const auto cats = index(to.categories);
  const auto map_id = [](const std::unordered_map<std::string, int>& m, const std::vector<std::string>& names,
                         std::size_t known, int id) {
    const auto it = m.find(names[static_cast<std::size_t>(id)]);
    return it != m.end() ? it->second : static_cast<int>(known) + id;
  };
  std::vector<Trajectory> out = trajs;
  for (auto& t : out) {
    t.user = map_id(users, from.users, to.users.size(), t.user);
    for (auto& c : t.checkins) {
      c.user = t.user;
      c.poi = map_id(pois, from.pois, to.pois.size(), c.poi);
      c.category = map_id(cats, from.categories, to.categories.size(), c.category);
    }
  }
  return out;
}

}  // namespace mobgt
