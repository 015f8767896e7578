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

#include "mobgt/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "mobgt/error.hpp"

namespace mobgt {

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename T, typename F>
  void array(const std::vector<T>& v, F each) {
    u64(v.size());
    for (const auto& x : v) each(x);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(le(4))); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::uint64_t count(std::uint64_t limit = std::uint64_t{1} << 32) {
    const auto n = u64();
    if (n > limit) fail("implausible length " + std::to_string(n));
    return n;
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) fail("truncated file");
    return s;
  }
  template <typename T, typename F>
  std::vector<T> array(F each) {
    std::vector<T> v(count());
    for (auto& x : v) x = each();
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const { throw DataError(origin_ + ": " + what); }
  std::istream& stream() { return in_; }

 private:
  std::uint64_t le(int bytes) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), bytes);
    if (!in_) fail("truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
  std::string origin_;
};

void write_graph(Writer& w, const graphs::GlobalGraph& g) {
  w.u64(static_cast<std::uint64_t>(g.node_count));
  w.u8(g.directed ? 1 : 0);
  w.u8(g.count_weighted ? 1 : 0);
  w.u8(g.kind == graphs::NodeKind::kPoi ? 0 : 1);
  w.array(g.edges, [&](const graphs::Edge& e) {
    w.i32(e.src);
    w.i32(e.dst);
    w.f64(e.weight);
  });
  w.array(g.self_transitions, [&](double x) { w.f64(x); });
}

graphs::GlobalGraph read_graph(Reader& r) {
  graphs::GlobalGraph g;
  g.node_count = static_cast<int>(r.count());
  g.directed = r.u8() != 0;
  g.count_weighted = r.u8() != 0;
  g.kind = r.u8() == 0 ? graphs::NodeKind::kPoi : graphs::NodeKind::kCategory;
  g.edges = r.array<graphs::Edge>([&] {
    graphs::Edge e;
    e.src = r.i32();
    e.dst = r.i32();
    e.weight = r.f64();
    if (e.src < 0 || e.dst < 0 || e.src >= g.node_count || e.dst >= g.node_count) r.fail("edge out of range");
    return e;
  });
  g.self_transitions = r.array<double>([&] { return r.f64(); });
  return g;
}

}  // namespace

void write_checkpoint(std::ostream& out, const RunConfig& config, const RawIds& ids,
                      const model::MobGT& model) {
  Writer w(out);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.str(config.to_text());

  for (const auto* names : {&ids.users, &ids.pois, &ids.categories}) {
    w.array(*names, [&](const std::string& s) { w.str(s); });
  }

  const Vocab& v = model.vocab();
  w.array(v.poi_ids, [&](int x) { w.i32(x); });
  w.array(v.category_ids, [&](int x) { w.i32(x); });
  w.array(v.poi_to_category, [&](int x) { w.i32(x); });
  w.array(v.poi_coords, [&](const geo::LatLon& c) {
    w.f64(c.lat);
    w.f64(c.lon);
  });
  w.array(v.poi_freq, [&](std::int64_t x) { w.i64(x); });
  w.i32(v.user_count);
  w.u64(v.coord_conflicts);

  w.u64(static_cast<std::uint64_t>(model.bins().count));
  w.array(model.bins().edges, [&](double x) { w.f64(x); });

  write_graph(w, model.graphs().spatial);
  write_graph(w, model.graphs().temporal);
  write_graph(w, model.graphs().category);

  const auto& params = model.parameters();
  w.u64(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    w.str(p.name);
    w.u8(p.decay ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(p.value.rows()));
    w.u64(static_cast<std::uint64_t>(p.value.cols()));
    for (Eigen::Index k = 0; k < p.value.size(); ++k) w.f64(p.value.data()[k]);
  }
  if (!out) throw DataError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in, const std::string& origin) {
  Reader r(in, origin);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) r.fail("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

  RunConfig config;
  try {
    config = parse_config_text(r.str(), RunConfig{}, origin);
  } catch (const UsageError& e) {
    r.fail(e.what());
  }

  RawIds ids;
  for (auto* names : {&ids.users, &ids.pois, &ids.categories}) {
    *names = r.array<std::string>([&] { return r.str(); });
  }

  Vocab v;
  v.poi_ids = r.array<int>([&] { return r.i32(); });
  v.category_ids = r.array<int>([&] { return r.i32(); });
  v.poi_to_category = r.array<int>([&] { return r.i32(); });
  v.poi_coords = r.array<geo::LatLon>([&] {
    geo::LatLon c;
    c.lat = r.f64();
    c.lon = r.f64();
    return c;
  });
  v.poi_freq = r.array<std::int64_t>([&] { return r.i64(); });
  v.user_count = r.i32();
  v.coord_conflicts = r.u64();
  const auto n_poi = v.poi_ids.size();
  if (v.poi_to_category.size() != n_poi || v.poi_coords.size() != n_poi || v.poi_freq.size() != n_poi) {
    r.fail("inconsistent vocabulary tables");
  }
  for (int c : v.poi_to_category) {
    if (c < 0 || c >= v.category_count()) r.fail("POI category out of range");
  }
  v.reindex();

  geo::BinSpec bins;
  bins.count = static_cast<int>(r.count());
  bins.edges = r.array<double>([&] { return r.f64(); });
  if (bins.count < 1) r.fail("bin count must be positive");

  model::GraphSet graphs;
  graphs.spatial = read_graph(r);
  graphs.temporal = read_graph(r);
  graphs.category = read_graph(r);

  model::MobGT model(config.model, std::move(v), std::move(bins), std::move(graphs), 0);
  auto& params = model.parameters();
  const auto n_params = r.count();
  if (n_params != params.size()) r.fail("parameter count mismatch");
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    const bool decay = r.u8() != 0;
    const auto rows = static_cast<Eigen::Index>(r.count());
    const auto cols = static_cast<Eigen::Index>(r.count());
    ad::Parameter* p = params.find(name);
    if (p == nullptr) r.fail("unknown parameter " + name);
    if (p->value.rows() != rows || p->value.cols() != cols) r.fail("shape mismatch for parameter " + name);
    p->decay = decay;
    for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value.data()[k] = r.f64();
  }
  model.refresh();
  return Checkpoint{std::move(config), std::move(ids), std::move(model)};
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const RawIds& ids,
                     const model::MobGT& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, config, ids, model);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace mobgt
