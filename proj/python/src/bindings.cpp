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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "mobgt/checkpoint.hpp"
#include "mobgt/config.hpp"
#include "mobgt/data.hpp"
#include "mobgt/error.hpp"
#include "mobgt/eval.hpp"
#include "mobgt/geo.hpp"
#include "mobgt/local_graph.hpp"
#include "mobgt/model.hpp"

namespace py = pybind11;
using namespace mobgt;

namespace {

py::dict report_dict(const eval::MetricsReport& r) {
  py::dict d;
  d["acc1"] = r.acc1;
  d["acc5"] = r.acc5;
  d["acc10"] = r.acc10;
  d["ndcg5"] = r.ndcg5;
  d["ndcg10"] = r.ndcg10;
  d["mrr"] = r.mrr;
  d["n_examples"] = r.n_examples;
  d["n_unreachable"] = r.n_unreachable;
  d["config_digest"] = r.config_digest;
  return d;
}

eval::EvalMode parse_mode(const std::string& mode) {
  if (mode == "prefix") return eval::EvalMode::kPrefix;
  if (mode == "last") return eval::EvalMode::kLast;
  throw UsageError("eval mode must be 'prefix' or 'last', got '" + mode + "'");
}

using Row = std::tuple<std::string, std::string, std::string, double, double, std::string>;

class PyCheckpoint {
 public:
  explicit PyCheckpoint(const std::filesystem::path& path) : ckpt_(load_checkpoint(path)) {}

  std::string config_text() const { return ckpt_.config.to_text(); }
  int poi_count() const { return ckpt_.model.vocab().poi_count(); }

  std::vector<std::pair<std::string, double>> predict(const std::vector<Row>& rows, std::size_t k) const {
    std::ostringstream tsv;
    tsv.precision(17);
    for (const auto& [user, poi, cat, lat, lon, ts] : rows) {
      tsv << user << '\t' << poi << '\t' << cat << '\t' << lat << '\t' << lon << '\t' << ts << '\n';
    }
    RawIds ids = ckpt_.ids;
    std::istringstream in(tsv.str());
    const auto checkins = parse_checkins_with(in, ids, "<prefix>");
    if (checkins.empty()) throw DataError("predict: empty prefix");
    for (const auto& c : checkins) {
      if (c.user != checkins.front().user) throw UsageError("predict: prefix mixes several users");
      if (!ckpt_.model.vocab().poi_index(c.poi)) {
        throw DataError("predict: unknown POI '" + ids.pois[static_cast<std::size_t>(c.poi)] + "' in prefix");
      }
    }
    const Trajectory prefix{checkins.front().user, checkins.front().day(), checkins};
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : model::predict_topk(ckpt_.model, prefix, k)) {
      out.emplace_back(ids.pois[static_cast<std::size_t>(s.poi)], s.score);
    }
    return out;
  }

  py::dict evaluate(const std::filesystem::path& corpus_dir, const std::string& mode) const {
    const Corpus corpus = load_corpus(corpus_dir);
    const auto test = align_ids(corpus.split.test, corpus.ids, ckpt_.ids);
    auto report = eval::evaluate(eval::ModelRanker(ckpt_.model), test, parse_mode(mode), ckpt_.config.threads);
    report.config_digest = eval::digest("mobgt\n" + ckpt_.config.to_text());
    return report_dict(report);
  }

 private:
  Checkpoint ckpt_;
};

}  // namespace

PYBIND11_MODULE(_mobgt, m) {
  m.doc() = "MobGT next-POI recommendation core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "haversine", [](double lat1, double lon1, double lat2, double lon2) {
        return geo::haversine({lat1, lon1}, {lat2, lon2});
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"), "Great-circle distance in km.");
  m.def("fd_bin_count", [](const std::vector<double>& d) { return geo::fd_bin_count(d); }, py::arg("dists"));
  m.def(
      "make_bins",
      [](const std::vector<double>& d) {
        const auto spec = geo::make_bins(d);
        return py::make_tuple(spec.edges, spec.count);
      },
      py::arg("dists"), "Equal-frequency distance bins as (edges, count).");
  m.def(
      "bin_index",
      [](double d, const std::vector<double>& edges) {
        return geo::bin_index(d, geo::BinSpec{edges, static_cast<int>(edges.size()) + 1});
      },
      py::arg("d"), py::arg("edges"));

  m.def(
      "local_graph",
      [](const std::vector<int>& labels) {
        const auto g = local::trajectory_to_graph(labels);
        py::dict d;
        d["nodes"] = g.nodes;
        std::vector<std::tuple<int, int, int>> edges;
        for (const auto& e : g.edges) {
          edges.emplace_back(g.nodes[static_cast<std::size_t>(e.src)], g.nodes[static_cast<std::size_t>(e.dst)],
                             e.count);
        }
        d["edges"] = edges;
        d["self_counts"] = g.self_counts;
        d["in_deg"] = g.in_deg;
        d["out_deg"] = g.out_deg;
        d["hops"] = Eigen::MatrixXi(g.hop);
        return d;
      },
      py::arg("labels"),
      "Local mobility graph of a label sequence. Node i carries nodes[i]; the center is the last index.");

  m.def(
      "tail_loss",
      [](const Eigen::MatrixXd& logits, const std::vector<int>& targets, double alpha, double beta, double k) {
        return model::tail_loss(ad::Matrix(logits), targets, model::LossConfig{alpha, beta, k, 1.0});
      },
      py::arg("logits"), py::arg("targets"), py::arg("alpha") = 0.2, py::arg("beta") = 1.0, py::arg("k") = 1.2);

  m.def(
      "metrics_for_rank",
      [](std::optional<std::size_t> rank) {
        const auto e = eval::metrics_for_rank(rank);
        py::dict d;
        d["acc1"] = e.acc1;
        d["acc5"] = e.acc5;
        d["acc10"] = e.acc10;
        d["ndcg1"] = e.ndcg1;
        d["ndcg5"] = e.ndcg5;
        d["ndcg10"] = e.ndcg10;
        d["mrr"] = e.mrr;
        return d;
      },
      py::arg("rank"), "Per-example metrics for a 1-based rank, or None when unreachable.");

  m.def(
      "markov_baseline",
      [](const std::filesystem::path& corpus_dir, const std::string& mode) {
        const Corpus corpus = load_corpus(corpus_dir);
        const auto mc = eval::mc_train(corpus.split.train);
        return report_dict(eval::evaluate(eval::MarkovRanker(mc), corpus.split.test, parse_mode(mode)));
      },
      py::arg("corpus_dir"), py::arg("mode") = "prefix");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::class_<PyCheckpoint>(m, "Checkpoint")
      .def(py::init<const std::filesystem::path&>(), py::arg("path"))
      .def_property_readonly("config_text", &PyCheckpoint::config_text)
      .def_property_readonly("poi_count", &PyCheckpoint::poi_count)
      .def("predict", &PyCheckpoint::predict, py::arg("prefix"), py::arg("k") = 10,
           "Top-k (raw POI id, score) pairs after a prefix of (user, poi, category, lat, lon, timestamp) rows.")
      .def("evaluate", &PyCheckpoint::evaluate, py::arg("corpus_dir"), py::arg("mode") = "prefix");
}
