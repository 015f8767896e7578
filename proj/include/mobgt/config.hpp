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

#ifndef MOBGT_CONFIG_HPP
#define MOBGT_CONFIG_HPP

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mobgt/data.hpp"
#include "mobgt/eval.hpp"
#include "mobgt/model.hpp"

namespace mobgt {

/// Every tunable of a run. Defaults follow the published settings: d = 128,
/// 3 attention layers, lr0 = 0.0002, 200 epochs, lambda = 10, alpha = 0.2,
/// beta = 1, k = 1.2 and a 2.5 km spatial threshold.
struct RunConfig {
  std::size_t min_len = 3;
  double split_ratio = 0.8;
  model::ModelConfig model;
  model::TrainConfig train;
  eval::EvalMode eval_mode = eval::EvalMode::kPrefix;
  int threads = 1;
  SyntheticConfig synth;
  std::uint64_t synth_seed = 7;

  /// All violated constraints, one message each.
  std::vector<std::string> validate() const;
  /// `key = value` lines for every registered key, in registry order.
  std::string to_text() const;
};

struct ConfigKey {
  std::string name;  // hyphenated; files may also use underscores
  std::string help;
  bool is_flag = false;  // boolean that defaults to false and is set by presence
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;  // throws UsageError
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_config_key(std::string_view name);

/// Applies `key = value` lines ('#' comments, blank lines allowed) on top
/// of `base`. Collects every bad line and throws one UsageError listing them.
RunConfig parse_config_text(std::string_view text, RunConfig base = {},
                            const std::string& origin = "<config>");
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

}  // namespace mobgt

#endif  // MOBGT_CONFIG_HPP
