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

#include "mobgt/encoder.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <limits>
#include <string>

#include "mobgt/error.hpp"

namespace mobgt::encoder {

using ad::Matrix;
using ad::Var;

int freq_bucket(std::int64_t freq) {
  if (freq <= 0) return 0;
  const int b = static_cast<int>(std::floor(std::log2(static_cast<double>(freq) + 1.0)));
  return std::min(b, kFreqBuckets - 1);
}

int edge_count_bucket(int count) { return std::clamp(count, 0, kMaxEdgeCountBucket); }

std::vector<std::string> EncoderConfig::validate() const {
  std::vector<std::string> errors;
  if (model_dim <= 0) errors.emplace_back("d must be positive");
  if (heads <= 0) errors.emplace_back("heads must be positive");
  if (heads > 0 && model_dim % heads != 0) errors.emplace_back("heads must divide d");
  if (layers < 0) errors.emplace_back("layers must be non-negative");
  if (edge_dim <= 0 || edge_dim % 2 != 0) errors.emplace_back("edge-dim must be positive and even");
  if (time_dim <= 0) errors.emplace_back("d-ti must be positive");
  if (poi_width <= 0) errors.emplace_back("POI embedding width must be positive");
  if (max_deg < 0 || max_pos < 0) errors.emplace_back("max-deg and max-pos must be non-negative");
  if (distance_bins < 1) errors.emplace_back("distance bin count must be at least 1");
  if (ffn_mult < 1) errors.emplace_back("ffn multiplier must be at least 1");
  return errors;
}

EncoderParams EncoderParams::create(ad::ParameterSet& set, const EncoderConfig& cfg, std::mt19937_64& rng,
                                    const std::string& prefix) {
  const int d = cfg.model_dim;
  const int w = cfg.context_width();
  const int half_edge = cfg.edge_dim / 2;
  const auto zeros = [](int r, int c) { return Matrix::Zero(r, c); };
  const auto emb = [&rng](int r, int c) { return ad::uniform(r, c, 0.1, rng); };
  EncoderParams p;
  p.time_table = &set.add(prefix + "time_table", emb(local::kTimeSlots, cfg.time_dim), false);
  p.freq_table = &set.add(prefix + "freq_table", emb(kFreqBuckets, w), false);
  p.time_fuse_w = &set.add(prefix + "time_fuse.w", ad::xavier_uniform(w, w, rng));
  p.time_fuse_b = &set.add(prefix + "time_fuse.b", zeros(1, w), false);
  p.input_w = &set.add(prefix + "input.w", ad::xavier_uniform(w, d, rng));
  p.input_b = &set.add(prefix + "input.b", zeros(1, d), false);
  p.indeg_table = &set.add(prefix + "indeg_table", emb(cfg.max_deg + 1, d), false);
  p.outdeg_table = &set.add(prefix + "outdeg_table", emb(cfg.max_deg + 1, d), false);
  p.pos_table = &set.add(prefix + "pos_table", emb(cfg.max_pos + 1, d), false);
  p.center_token = &set.add(prefix + "center_token", emb(1, d), false);
  p.hop_bias = &set.add(prefix + "hop_bias", zeros(cfg.heads, local::kMaxHops + 2), false);
  p.dist_bias = &set.add(prefix + "dist_bias", zeros(cfg.heads, cfg.distance_bins + 1), false);
  p.count_table = &set.add(prefix + "edge_count_table", emb(kMaxEdgeCountBucket + 1, half_edge), false);
  p.bin_table = &set.add(prefix + "edge_bin_table", emb(cfg.distance_bins, half_edge), false);
  p.trend_proj = &set.add(prefix + "trend_proj", ad::xavier_uniform(cfg.edge_dim, cfg.heads, rng));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lp = prefix + "layer" + std::to_string(l) + ".";
    EncoderLayerParams layer;
    layer.ln1_gain = &set.add(lp + "ln1.gain", Matrix::Ones(1, d), false);
    layer.ln1_bias = &set.add(lp + "ln1.bias", zeros(1, d), false);
    layer.wq = &set.add(lp + "attn.wq", ad::xavier_uniform(d, d, rng));
    layer.bq = &set.add(lp + "attn.bq", zeros(1, d), false);
    layer.wk = &set.add(lp + "attn.wk", ad::xavier_uniform(d, d, rng));
    layer.bk = &set.add(lp + "attn.bk", zeros(1, d), false);
    layer.wv = &set.add(lp + "attn.wv", ad::xavier_uniform(d, d, rng));
    layer.bv = &set.add(lp + "attn.bv", zeros(1, d), false);
    layer.wo = &set.add(lp + "attn.wo", ad::xavier_uniform(d, d, rng));
    layer.bo = &set.add(lp + "attn.bo", zeros(1, d), false);
    layer.ln2_gain = &set.add(lp + "ln2.gain", Matrix::Ones(1, d), false);
    layer.ln2_bias = &set.add(lp + "ln2.bias", zeros(1, d), false);
    layer.ff1_w = &set.add(lp + "ff1.w", ad::xavier_uniform(d, cfg.ffn_mult * d, rng));
    layer.ff1_b = &set.add(lp + "ff1.b", zeros(1, cfg.ffn_mult * d), false);
    layer.ff2_w = &set.add(lp + "ff2.w", ad::xavier_uniform(cfg.ffn_mult * d, d, rng));
    layer.ff2_b = &set.add(lp + "ff2.b", zeros(1, d), false);
    p.layers.push_back(layer);
  }
  return p;
}

Var embed_time(Var time_table, int slot) {
  if (slot < 0 || slot >= local::kTimeSlots) {
    throw DataError("time slot " + std::to_string(slot) + " outside [0, 48)");
  }
  const int rows[] = {slot};
  return ad::gather_rows(time_table, rows);
}

Var assemble_node_embedding(Var poi_rows, std::span<const int> time_slots,
                            std::span<const int> freq_buckets, const EncoderParams& params,
                            const EncoderConfig& cfg) {
  ad::Tape& tape = poi_rows.tape();
  if (poi_rows.cols() != cfg.poi_width) {
    throw DataError("assemble_node_embedding: POI embedding width " + std::to_string(poi_rows.cols()) +
                    " != " + std::to_string(cfg.poi_width));
  }
  const auto m = static_cast<std::size_t>(poi_rows.rows());
  if (time_slots.size() != m || freq_buckets.size() != m) {
    throw DataError("assemble_node_embedding: slot/bucket count does not match node count");
  }
  Var times;
  if (cfg.use_context) {
    Var table = tape.param(*params.time_table);
    std::vector<Var> rows;
    for (const int slot : time_slots) rows.push_back(embed_time(table, slot));
    times = ad::concat_rows(rows);
  } else {
    times = tape.constant(Matrix::Zero(poi_rows.rows(), cfg.time_dim));
  }
  const std::array<Var, 2> parts{poi_rows, times};
  Var e_pti = ad::leaky_relu(ad::linear(ad::concat_cols(parts), tape.param(*params.time_fuse_w),
                                        tape.param(*params.time_fuse_b)));
  if (!cfg.use_context) return e_pti;
  for (const int b : freq_buckets) {
    if (b < 0 || b >= kFreqBuckets) throw DataError("frequency bucket out of range");
  }
  return ad::add(e_pti, ad::gather_rows(tape.param(*params.freq_table), freq_buckets));
}

Var structure_encode(Var e_o, const local::LocalMobilityGraph& g, const EncoderParams& params,
                     const EncoderConfig& cfg) {
  ad::Tape& tape = e_o.tape();
  const int n = g.node_count();
  if (e_o.rows() != n - 1) {
    throw DataError("structure_encode: expected " + std::to_string(n - 1) + " node rows");
  }
  Var center = tape.param(*params.center_token);
  Var h;
  if (n > 1) {
    Var proj = ad::linear(e_o, tape.param(*params.input_w), tape.param(*params.input_b));
    const std::array<Var, 2> rows{proj, center};
    h = ad::concat_rows(rows);
  } else {
    h = center;
  }
  std::vector<int> in(static_cast<std::size_t>(n));
  std::vector<int> out(static_cast<std::size_t>(n));
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (std::size_t v = 0; v < in.size(); ++v) {
    in[v] = std::clamp(g.in_deg[v], 0, cfg.max_deg);
    out[v] = std::clamp(g.out_deg[v], 0, cfg.max_deg);
    pos[v] = std::clamp(g.last_pos[v], 0, cfg.max_pos);
  }
  h = ad::add(h, ad::gather_rows(tape.param(*params.indeg_table), in));
  h = ad::add(h, ad::gather_rows(tape.param(*params.outdeg_table), out));
  return ad::add(h, ad::gather_rows(tape.param(*params.pos_table), pos));
}

namespace {

// out[s][t] = table[head][index[s][t]].
Var lookup_bias(Var table, int head, const local::IntMatrix& index) {
  const Matrix& tv = table.value();
  Matrix out(index.rows(), index.cols());
  for (Eigen::Index s = 0; s < index.rows(); ++s) {
    for (Eigen::Index t = 0; t < index.cols(); ++t) {
      const int slot = index(s, t);
      if (slot < 0 || slot >= tv.cols()) throw DataError("attention bias slot out of range");
      out(s, t) = tv(head, slot);
    }
  }
  return table.tape().push(std::move(out), {table}, [table, head, index](ad::Tape& tp, const Matrix& g) {
    Matrix grad = Matrix::Zero(table.rows(), table.cols());
    for (Eigen::Index s = 0; s < index.rows(); ++s) {
      for (Eigen::Index t = 0; t < index.cols(); ++t) grad(head, index(s, t)) += g(s, t);
    }
    tp.accumulate(table, grad);
  });
}

using PathTable = std::vector<std::vector<int>>;

// out[s][t] = mean over the edges e of path(s, t) of proj[e][head].
Var path_mean(Var proj, int head, int n, std::shared_ptr<const PathTable> paths) {
  const Matrix& pv = proj.value();
  Matrix out = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      const auto& path = (*paths)[static_cast<std::size_t>(s * n + t)];
      if (path.empty()) continue;
      double acc = 0.0;
      for (const int e : path) acc += pv(e, head);
      out(s, t) = acc / static_cast<double>(path.size());
    }
  }
  return proj.tape().push(std::move(out), {proj}, [proj, head, n, paths](ad::Tape& tp, const Matrix& gr) {
    Matrix grad = Matrix::Zero(proj.rows(), proj.cols());
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) {
        const auto& path = (*paths)[static_cast<std::size_t>(s * n + t)];
        if (path.empty()) continue;
        const double w = gr(s, t) / static_cast<double>(path.size());
        for (const int e : path) grad(e, head) += w;
      }
    }
    tp.accumulate(proj, grad);
  });
}

}  // namespace

std::vector<Var> trending_bias(ad::Tape& tape, const local::LocalMobilityGraph& g,
                               const EncoderParams& params, const EncoderConfig& cfg) {
  const int n = g.node_count();
  std::vector<Var> out;
  if (g.edges.empty()) {
    for (int h = 0; h < cfg.heads; ++h) out.push_back(tape.constant(Matrix::Zero(n, n)));
    return out;
  }
  std::vector<int> buckets;
  std::vector<int> bins;
  for (const auto& e : g.edges) {
    buckets.push_back(edge_count_bucket(e.count));
    bins.push_back(std::clamp(g.dist_bin(e.src, e.dst), 0, cfg.distance_bins - 1));
  }
  const std::array<Var, 2> parts{ad::gather_rows(tape.param(*params.count_table), buckets),
                                 ad::gather_rows(tape.param(*params.bin_table), bins)};
  Var proj = ad::matmul(ad::concat_cols(parts), tape.param(*params.trend_proj));  // E x heads
  auto paths = std::make_shared<const PathTable>(g.paths);
  for (int h = 0; h < cfg.heads; ++h) out.push_back(path_mean(proj, h, n, paths));
  return out;
}

std::vector<Var> attention_bias(ad::Tape& tape, const local::LocalMobilityGraph& g,
                                const EncoderParams& params, const EncoderConfig& cfg) {
  const int n = g.node_count();
  std::vector<Var> out;
  if (!cfg.use_st_bias) {
    for (int h = 0; h < cfg.heads; ++h) out.push_back(tape.constant(Matrix::Zero(n, n)));
    return out;
  }
  Var hop_table = tape.param(*params.hop_bias);
  Var dist_table = tape.param(*params.dist_bias);
  const auto trend = trending_bias(tape, g, params, cfg);
  for (int h = 0; h < cfg.heads; ++h) {
    Var b = ad::add(lookup_bias(hop_table, h, g.hop), lookup_bias(dist_table, h, g.dist_bin));
    out.push_back(ad::add(b, trend[static_cast<std::size_t>(h)]));
  }
  return out;
}

namespace {

void check_finite(Var v, const std::string& where) {
  if (!v.value().allFinite()) throw NumericError("non-finite activations in encoder " + where);
}

}  // namespace

Var encoder_forward(Var h, std::span<const Var> head_bias, const EncoderParams& params,
                    const EncoderConfig& cfg, int valid_nodes) {
  ad::Tape& tape = h.tape();
  const Eigen::Index n = h.rows();
  if (h.cols() != cfg.model_dim) throw DataError("encoder_forward: input width does not match d");
  if (static_cast<int>(head_bias.size()) != cfg.heads) {
    throw DataError("encoder_forward: expected one bias matrix per head");
  }
  if (valid_nodes < 0) valid_nodes = static_cast<int>(n);
  std::vector<Var> biases(head_bias.begin(), head_bias.end());
  if (valid_nodes < n) {
    Matrix mask = Matrix::Zero(n, n);
    mask.rightCols(n - valid_nodes).setConstant(-std::numeric_limits<double>::infinity());
    Var mask_var = tape.constant(std::move(mask));
    for (auto& b : biases) b = ad::add(b, mask_var);
  }
  const int dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Var x = h;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    Var normed = ad::layer_norm(x, tape.param(*p.ln1_gain), tape.param(*p.ln1_bias));
    Var q = ad::linear(normed, tape.param(*p.wq), tape.param(*p.bq));
    Var k = ad::linear(normed, tape.param(*p.wk), tape.param(*p.bk));
    Var v = ad::linear(normed, tape.param(*p.wv), tape.param(*p.bv));
    std::vector<Var> heads;
    for (int hd = 0; hd < cfg.heads; ++hd) {
      const Eigen::Index off = static_cast<Eigen::Index>(hd) * dh;
      Var scores = ad::scale(ad::matmul_transposed(ad::slice_cols(q, off, dh), ad::slice_cols(k, off, dh)),
                             inv_sqrt);
      scores = ad::add(scores, biases[static_cast<std::size_t>(hd)]);
      heads.push_back(ad::matmul(ad::softmax_rows(scores), ad::slice_cols(v, off, dh)));
    }
    Var attn = ad::linear(ad::concat_cols(heads), tape.param(*p.wo), tape.param(*p.bo));
    x = ad::add(x, attn);
    check_finite(x, "layer " + std::to_string(l) + " attention");
    Var normed2 = ad::layer_norm(x, tape.param(*p.ln2_gain), tape.param(*p.ln2_bias));
    Var ff = ad::gelu(ad::linear(normed2, tape.param(*p.ff1_w), tape.param(*p.ff1_b)));
    x = ad::add(x, ad::linear(ff, tape.param(*p.ff2_w), tape.param(*p.ff2_b)));
    check_finite(x, "layer " + std::to_string(l) + " feed-forward");
  }
  return x;
}

}  // namespace mobgt::encoder
