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

#ifndef MOBGT_CHECKPOINT_HPP
#define MOBGT_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mobgt/config.hpp"
#include "mobgt/data.hpp"
#include "mobgt/model.hpp"

namespace mobgt {

// Layout (all integers little-endian, doubles IEEE-754 binary64 little-endian):
//   magic "MOBGTCKP" | u32 version
//   str config text (key = value lines)
//   raw ids: 3 x (u64 n, n x str)
//   vocab: poi_ids, category_ids, poi_to_category (i32 arrays), coords (f64 pairs),
//          poi_freq (i64 array), i32 user_count, u64 coord_conflicts
//   bins: u64 count, f64 array edges
//   3 graphs (spatial, temporal, category): u64 nodes, u8 directed, u8 weighted,
//          u8 kind, u64 m, m x (i32 src, i32 dst, f64 w), f64 array self_transitions
//   u64 p, p x (str name, u8 decay, u64 rows, u64 cols, rows*cols f64 row-major)
// where str = u64 length + bytes and "array" = u64 length + elements.
inline constexpr char kCheckpointMagic[8] = {'M', 'O', 'B', 'G', 'T', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  RawIds ids;
  model::MobGT model;
};

void write_checkpoint(std::ostream& out, const RunConfig& config, const RawIds& ids,
                      const model::MobGT& model);
Checkpoint read_checkpoint(std::istream& in, const std::string& origin = "<checkpoint>");

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const RawIds& ids,
                     const model::MobGT& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mobgt

#endif  // MOBGT_CHECKPOINT_HPP
