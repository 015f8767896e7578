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

#include "mobgt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <thread>
#include <tuple>

#include "mobgt/error.hpp"

namespace mobgt::eval {

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["acc1"] = acc1;
  j["acc5"] = acc5;
  j["acc10"] = acc10;
  j["ndcg5"] = ndcg5;
  j["ndcg10"] = ndcg10;
  j["mrr"] = mrr;
  j["n_examples"] = n_examples;
  j["n_unreachable"] = n_unreachable;
  j["config_digest"] = config_digest;
  return j.dump();
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  char buf[64];
  const auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%-14s %.4f\n", name, v);
    out << buf;
  };
  row("Acc@1", acc1);
  row("Acc@5", acc5);
  row("Acc@10", acc10);
  row("NDCG@5", ndcg5);
  row("NDCG@10", ndcg10);
  row("MRR", mrr);
  out << "examples       " << n_examples << "\nunreachable    " << n_unreachable << '\n';
  return out.str();
}

ExampleMetrics metrics_for_rank(std::optional<std::size_t> rank) {
  ExampleMetrics m;
  if (!rank) return m;
  const auto r = static_cast<double>(*rank);
  const double gain = 1.0 / std::log2(r + 1.0);
  m.acc1 = *rank <= 1 ? 1.0 : 0.0;
  m.acc5 = *rank <= 5 ? 1.0 : 0.0;
  m.acc10 = *rank <= 10 ? 1.0 : 0.0;
  m.ndcg1 = *rank <= 1 ? gain : 0.0;
  m.ndcg5 = *rank <= 5 ? gain : 0.0;
  m.ndcg10 = *rank <= 10 ? gain : 0.0;
  m.mrr = 1.0 / r;
  return m;
}

ExampleMetrics metrics_for_example(std::span<const PoiId> ranking, PoiId target) {
  const auto it = std::find(ranking.begin(), ranking.end(), target);
  if (it == ranking.end()) {
    throw DataError("metrics_for_example: target " + std::to_string(target) + " missing from ranking");
  }
  return metrics_for_rank(static_cast<std::size_t>(it - ranking.begin()) + 1);
}

namespace {

struct Example {
  const Trajectory* traj = nullptr;
  std::size_t prefix_len = 0;
};

}  // namespace

MetricsReport evaluate(const Ranker& ranker, const std::vector<Trajectory>& test, EvalMode mode, int threads) {
  std::vector<Example> examples;
  for (const auto& t : test) {
    if (t.size() < 3) continue;
    if (mode == EvalMode::kLast) {
      examples.push_back({&t, t.size() - 1});
    } else {
      for (std::size_t len = 2; len < t.size(); ++len) examples.push_back({&t, len});
    }
  }
  if (examples.empty()) throw DataError("evaluate: test set yields no examples");
  // Canonical order so the floating-point sums do not depend on input order.
  const auto key = [](const CheckIn& c) { return std::tuple(c.timestamp, c.poi, c.category, c.lat, c.lon); };
  std::sort(examples.begin(), examples.end(), [&key](const Example& a, const Example& b) {
    if (a.traj->user != b.traj->user) return a.traj->user < b.traj->user;
    if (a.traj->session_day != b.traj->session_day) return a.traj->session_day < b.traj->session_day;
    if (a.prefix_len != b.prefix_len) return a.prefix_len < b.prefix_len;
    const auto& x = a.traj->checkins;
    const auto& y = b.traj->checkins;
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                        [&key](const CheckIn& l, const CheckIn& r) { return key(l) < key(r); });
  });

  std::vector<ExampleMetrics> per(examples.size());
  std::vector<char> unreachable(examples.size(), 0);
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& ex = examples[i];
      Trajectory prefix{ex.traj->user, ex.traj->session_day,
                        {ex.traj->checkins.begin(), ex.traj->checkins.begin() + static_cast<std::ptrdiff_t>(ex.prefix_len)}};
      const PoiId target = ex.traj->checkins[ex.prefix_len].poi;
      if (!ranker.in_catalog(target) || !ranker.can_rank(prefix)) {
        unreachable[i] = 1;
        continue;
      }
      per[i] = metrics_for_rank(ranker.rank_of(prefix, target));
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, threads));
  if (n_threads == 1) {
    work(0, examples.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (examples.size() + n_threads - 1) / n_threads;
    for (std::size_t begin = 0; begin < examples.size(); begin += chunk) {
      pool.emplace_back(work, begin, std::min(examples.size(), begin + chunk));
    }
  }

  MetricsReport report;
  for (std::size_t i = 0; i < per.size(); ++i) {
    report.acc1 += per[i].acc1;
    report.acc5 += per[i].acc5;
    report.acc10 += per[i].acc10;
    report.ndcg5 += per[i].ndcg5;
    report.ndcg10 += per[i].ndcg10;
    report.mrr += per[i].mrr;
    report.n_unreachable += unreachable[i];
  }
  const auto n = static_cast<double>(per.size());
  report.acc1 /= n;
  report.acc5 /= n;
  report.acc10 /= n;
  report.ndcg5 /= n;
  report.ndcg10 /= n;
  report.mrr /= n;
  report.n_examples = per.size();
  return report;
}

bool ModelRanker::in_catalog(PoiId poi) const { return model_.vocab().poi_index(poi).has_value(); }

bool ModelRanker::can_rank(const Trajectory& prefix) const {
  return std::all_of(prefix.checkins.begin(), prefix.checkins.end(),
                     [this](const CheckIn& c) { return in_catalog(c.poi); });
}

std::size_t ModelRanker::rank_of(const Trajectory& prefix, PoiId target) const {
  const Eigen::RowVectorXd scores = model_.score(prefix);
  const int t = *model_.vocab().poi_index(target);
  const double s = scores(t);
  std::size_t rank = 1;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (scores(j) > s || (scores(j) == s && j < t)) ++rank;
  }
  return rank;
}

MarkovModel mc_train(const std::vector<Trajectory>& train) {
  if (train.empty()) throw DataError("mc_train: no training trajectories");
  MarkovModel mc;
  std::map<PoiId, std::map<PoiId, std::int64_t>> counts;
  for (const auto& t : train) {
    for (std::size_t i = 0; i < t.checkins.size(); ++i) {
      ++mc.visits[t.checkins[i].poi];
      if (i + 1 < t.checkins.size()) ++counts[t.checkins[i].poi][t.checkins[i + 1].poi];
    }
  }
  for (const auto& [poi, v] : mc.visits) mc.popularity.push_back(poi);
  std::stable_sort(mc.popularity.begin(), mc.popularity.end(),
                   [&mc](PoiId a, PoiId b) { return mc.visits.at(a) > mc.visits.at(b); });
  std::map<PoiId, std::size_t> pop_rank;
  for (std::size_t i = 0; i < mc.popularity.size(); ++i) pop_rank[mc.popularity[i]] = i;
  for (const auto& [src, row] : counts) {
    std::int64_t total = 0;
    for (const auto& [dst, c] : row) total += c;
    auto& succ = mc.transition[src];
    for (const auto& [dst, c] : row) {
      succ.push_back({dst, static_cast<double>(c) / static_cast<double>(total)});
    }
    std::sort(succ.begin(), succ.end(), [&pop_rank](const auto& a, const auto& b) {
      if (a.prob != b.prob) return a.prob > b.prob;
      return pop_rank.at(a.poi) < pop_rank.at(b.poi);
    });
  }
  return mc;
}

std::vector<PoiId> mc_predict(const MarkovModel& model, const Trajectory& prefix, std::size_t k) {
  if (prefix.checkins.empty()) throw DataError("mc_predict: empty prefix");
  const std::size_t limit = k == 0 ? model.popularity.size() : k;
  std::vector<PoiId> out;
  std::vector<PoiId> taken;
  const auto it = model.transition.find(prefix.checkins.back().poi);
  if (it != model.transition.end()) {
    for (const auto& s : it->second) {
      if (out.size() >= limit) break;
      out.push_back(s.poi);
    }
  }
  taken = out;
  std::sort(taken.begin(), taken.end());
  for (const PoiId p : model.popularity) {
    if (out.size() >= limit) break;
    if (!std::binary_search(taken.begin(), taken.end(), p)) out.push_back(p);
  }
  return out;
}

std::size_t MarkovRanker::rank_of(const Trajectory& prefix, PoiId target) const {
  const auto ranking = mc_predict(model_, prefix);
  const auto it = std::find(ranking.begin(), ranking.end(), target);
  return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

std::string digest(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mobgt::eval
