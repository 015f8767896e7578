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

#ifndef MOBGT_ENCODER_HPP
#define MOBGT_ENCODER_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mobgt/autodiff.hpp"
#include "mobgt/local_graph.hpp"

namespace mobgt::encoder {

inline constexpr int kFreqBuckets = 16;
inline constexpr int kMaxEdgeCountBucket = 8;

/// min(floor(log2(freq + 1)), 15).
int freq_bucket(std::int64_t freq);
/// min(count, 8).
int edge_count_bucket(int count);

struct EncoderConfig {
  int poi_width = 96;   // width of the fused global POI embedding
  int time_dim = 32;
  int model_dim = 128;
  int heads = 4;
  int layers = 3;
  int edge_dim = 32;    // d_e, split evenly between count and distance features
  int max_deg = 32;
  int max_pos = 64;
  int distance_bins = 1;
  int ffn_mult = 4;
  bool use_st_bias = true;
  bool use_context = true;

  int context_width() const { return poi_width + time_dim; }
  int head_dim() const { return model_dim / heads; }
  /// Empty when valid, otherwise one message per violated constraint.
  std::vector<std::string> validate() const;
};

struct EncoderLayerParams {
  ad::Parameter* ln1_gain = nullptr;
  ad::Parameter* ln1_bias = nullptr;
  ad::Parameter* wq = nullptr;
  ad::Parameter* bq = nullptr;
  ad::Parameter* wk = nullptr;
  ad::Parameter* bk = nullptr;
  ad::Parameter* wv = nullptr;
  ad::Parameter* bv = nullptr;
  ad::Parameter* wo = nullptr;
  ad::Parameter* bo = nullptr;
  ad::Parameter* ln2_gain = nullptr;
  ad::Parameter* ln2_bias = nullptr;
  ad::Parameter* ff1_w = nullptr;
  ad::Parameter* ff1_b = nullptr;
  ad::Parameter* ff2_w = nullptr;
  ad::Parameter* ff2_b = nullptr;
};

struct EncoderParams {
  ad::Parameter* time_table = nullptr;    // 48 x time_dim
  ad::Parameter* freq_table = nullptr;    // 16 x context_width
  ad::Parameter* time_fuse_w = nullptr;   // context_width x context_width
  ad::Parameter* time_fuse_b = nullptr;
  ad::Parameter* input_w = nullptr;       // context_width x model_dim
  ad::Parameter* input_b = nullptr;
  ad::Parameter* indeg_table = nullptr;   // (max_deg + 1) x model_dim
  ad::Parameter* outdeg_table = nullptr;
  ad::Parameter* pos_table = nullptr;     // (max_pos + 1) x model_dim
  ad::Parameter* center_token = nullptr;  // 1 x model_dim
  ad::Parameter* hop_bias = nullptr;      // heads x (kMaxHops + 2)
  ad::Parameter* dist_bias = nullptr;     // heads x (distance_bins + 1)
  ad::Parameter* count_table = nullptr;   // (kMaxEdgeCountBucket + 1) x edge_dim / 2
  ad::Parameter* bin_table = nullptr;     // distance_bins x edge_dim / 2
  ad::Parameter* trend_proj = nullptr;    // edge_dim x heads (one W_d column per head)
  std::vector<EncoderLayerParams> layers;

  /// Registers every encoder parameter under `prefix` with randomized
  /// initial values.
  static EncoderParams create(ad::ParameterSet& set, const EncoderConfig& cfg, std::mt19937_64& rng,
                              const std::string& prefix = "encoder.");
};

/// Row lookup in the time table. Throws DataError outside [0, 48).
ad::Var embed_time(ad::Var time_table, int slot);

/// e_o = LeakyReLU([e_p | e_ti] W + b) + e_f per non-center node. With
/// use_context off the time and frequency terms are dropped (zero time
/// embedding, no frequency embedding).
ad::Var assemble_node_embedding(ad::Var poi_rows, std::span<const int> time_slots,
                                std::span<const int> freq_buckets, const EncoderParams& params,
                                const EncoderConfig& cfg);

/// h_s = proj(e_o) + e_indeg + e_outdeg + e_pos for every node, with the
/// center token standing in for proj(e_o) on the center row.
ad::Var structure_encode(ad::Var e_o, const local::LocalMobilityGraph& g, const EncoderParams& params,
                         const EncoderConfig& cfg);

/// T_st per head: mean of W_d^{(h)} d_n over the canonical path edges.
/// Zero on the diagonal and for center pairs.
std::vector<ad::Var> trending_bias(ad::Tape& tape, const local::LocalMobilityGraph& g,
                                   const EncoderParams& params, const EncoderConfig& cfg);

/// hop_bias[h][hop] + dist_bias[h][bin] + T_st per head (n x n each). All
/// zeros when use_st_bias is off.
std::vector<ad::Var> attention_bias(ad::Tape& tape, const local::LocalMobilityGraph& g,
                                    const EncoderParams& params, const EncoderConfig& cfg);

/// Pre-norm transformer stack with additive per-head attention bias shared
/// across layers. Rows at index >= valid_nodes are padding: they are masked
/// out of every attention row. Throws NumericError naming the layer on
/// non-finite activations.
ad::Var encoder_forward(ad::Var h, std::span<const ad::Var> head_bias, const EncoderParams& params,
                        const EncoderConfig& cfg, int valid_nodes = -1);

}  // namespace mobgt::encoder

#endif  // MOBGT_ENCODER_HPP
