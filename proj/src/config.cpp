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

#include "mobgt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mobgt/error.hpp"

namespace mobgt {

namespace {

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

ConfigKey real_key(std::string name, std::string help, auto accessor) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.get = [accessor](const RunConfig& c) { return format_double(accessor(const_cast<RunConfig&>(c))); };
  k.set = [accessor, name](RunConfig& c, const std::string& v) { accessor(c) = to_double(name, v); };
  return k;
}

template <typename Int>
ConfigKey int_key(std::string name, std::string help, auto accessor) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.get = [accessor](const RunConfig& c) { return std::to_string(accessor(const_cast<RunConfig&>(c))); };
  k.set = [accessor, name](RunConfig& c, const std::string& v) { accessor(c) = to_int<Int>(name, v); };
  return k;
}

ConfigKey bool_key(std::string name, std::string help, bool is_flag, auto accessor) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.is_flag = is_flag;
  k.get = [accessor](const RunConfig& c) { return accessor(const_cast<RunConfig&>(c)) ? "true" : "false"; };
  k.set = [accessor, name](RunConfig& c, const std::string& v) { accessor(c) = to_bool(name, v); };
  return k;
}

// Ablation flags are stored as "use_x" switches but exposed as "disable-x".
ConfigKey disable_key(std::string name, std::string help, auto accessor) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.is_flag = true;
  k.get = [accessor](const RunConfig& c) { return accessor(const_cast<RunConfig&>(c)) ? "false" : "true"; };
  k.set = [accessor, name](RunConfig& c, const std::string& v) { accessor(c) = !to_bool(name, v); };
  return k;
}

#define FIELD(expr) [](RunConfig & c) -> auto& { return c.expr; }

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back(int_key<std::size_t>("min-len", "minimum check-ins per day session", FIELD(min_len)));
  keys.push_back(real_key("split-ratio", "per-user chronological train share", FIELD(split_ratio)));
  keys.push_back(real_key("spatial-threshold-km", "spatial graph distance threshold (km)",
                          FIELD(model.spatial_threshold_km)));
  keys.push_back(int_key<int>("gcn-layers", "GCN depth per global graph", FIELD(model.gcn_layers)));
  keys.push_back(bool_key("log-edge-weights", "log(1+w) scaling of count-weighted edges", false,
                          FIELD(model.log_edge_weights)));
  keys.push_back(int_key<int>("d-p", "POI embedding width", FIELD(model.poi_dim)));
  keys.push_back(int_key<int>("d-c", "category embedding width", FIELD(model.category_dim)));
  keys.push_back(int_key<int>("d-ti", "time-slot embedding width", FIELD(model.encoder.time_dim)));
  keys.push_back(int_key<int>("d-u", "user embedding width", FIELD(model.user_dim)));
  keys.push_back(int_key<int>("d", "encoder hidden width", FIELD(model.encoder.model_dim)));
  keys.push_back(int_key<int>("heads", "attention heads", FIELD(model.encoder.heads)));
  keys.push_back(int_key<int>("layers", "attention layers", FIELD(model.encoder.layers)));
  keys.push_back(int_key<int>("edge-dim", "edge feature width for trending encoding", FIELD(model.encoder.edge_dim)));
  keys.push_back(int_key<int>("max-deg", "degree embedding clamp", FIELD(model.encoder.max_deg)));
  keys.push_back(int_key<int>("max-pos", "position embedding clamp", FIELD(model.encoder.max_pos)));
  keys.push_back(int_key<int>("ffn-mult", "feed-forward inner width multiplier", FIELD(model.encoder.ffn_mult)));
  keys.push_back(real_key("alpha", "tail loss positive weight", FIELD(model.loss.alpha)));
  keys.push_back(real_key("beta", "tail loss negative weight", FIELD(model.loss.beta)));
  keys.push_back(real_key("k", "tail loss exponent", FIELD(model.loss.k)));
  keys.push_back(real_key("lambda", "tail loss balance factor", FIELD(model.loss.lambda)));
  keys.push_back(real_key("lr0", "initial learning rate (linear decay to 0)", FIELD(train.lr0)));
  keys.push_back(int_key<int>("epochs", "maximum training epochs", FIELD(train.max_epochs)));
  keys.push_back(int_key<int>("patience", "early-stop patience (epochs)", FIELD(train.patience)));
  keys.push_back(int_key<int>("batch-size", "local graphs per optimizer step", FIELD(train.batch_size)));
  keys.push_back(int_key<std::uint64_t>("seed", "training seed", FIELD(train.seed)));
  keys.push_back(real_key("weight-decay", "decoupled weight decay", FIELD(train.weight_decay)));
  {
    ConfigKey k;
    k.name = "early-stop-on";
    k.help = "early-stop signal: val (validation Acc@1) or train (training loss)";
    k.get = [](const RunConfig& c) {
      return std::string(c.train.early_stop_on == model::EarlyStopOn::kValidation ? "val" : "train");
    };
    k.set = [](RunConfig& c, const std::string& v) {
      if (v == "val") {
        c.train.early_stop_on = model::EarlyStopOn::kValidation;
      } else if (v == "train") {
        c.train.early_stop_on = model::EarlyStopOn::kTrain;
      } else {
        throw UsageError("early-stop-on: expected val or train, got '" + v + "'");
      }
    };
    keys.push_back(std::move(k));
  }
  keys.push_back(real_key("val-fraction", "per-user share of train held out for validation",
                          FIELD(train.val_fraction)));
  keys.push_back(bool_key("freeze-global", "keep global graph parameters at their initial values", false,
                          FIELD(train.freeze_global)));
  {
    ConfigKey k;
    k.name = "eval-mode";
    k.help = "evaluation examples: prefix (every prefix) or last (final step only)";
    k.get = [](const RunConfig& c) {
      return std::string(c.eval_mode == eval::EvalMode::kPrefix ? "prefix" : "last");
    };
    k.set = [](RunConfig& c, const std::string& v) {
      if (v == "prefix") {
        c.eval_mode = eval::EvalMode::kPrefix;
      } else if (v == "last") {
        c.eval_mode = eval::EvalMode::kLast;
      } else {
        throw UsageError("eval-mode: expected prefix or last, got '" + v + "'");
      }
    };
    keys.push_back(std::move(k));
  }
  keys.push_back(int_key<int>("threads", "evaluation worker threads", FIELD(threads)));
  keys.push_back(disable_key("disable-spatial-graph", "drop the global spatial graph", FIELD(model.use_spatial_graph)));
  keys.push_back(disable_key("disable-temporal-graph", "drop the global temporal graph", FIELD(model.use_temporal_graph)));
  keys.push_back(disable_key("disable-global", "skip all global graph encoders", FIELD(model.use_global)));
  keys.push_back(disable_key("disable-st-bias", "zero the structural attention biases", FIELD(model.encoder.use_st_bias)));
  keys.push_back(disable_key("disable-context", "drop time and frequency embeddings", FIELD(model.encoder.use_context)));
  keys.push_back(disable_key("disable-tail-loss", "train without the tail loss", FIELD(model.use_tail_loss)));
  keys.push_back(int_key<int>("synth-users", "synthetic users", FIELD(synth.users)));
  keys.push_back(int_key<int>("synth-pois", "synthetic POIs", FIELD(synth.pois)));
  keys.push_back(int_key<int>("synth-categories", "synthetic categories", FIELD(synth.categories)));
  keys.push_back(int_key<int>("synth-days", "synthetic days per user", FIELD(synth.days)));
  keys.push_back(real_key("synth-regularity", "probability of following the routine loop",
                          FIELD(synth.regularity)));
  keys.push_back(int_key<int>("synth-loop-len", "routine loop length", FIELD(synth.loop_len)));
  keys.push_back(int_key<int>("synth-checkins-per-day", "check-ins per day (0 = loop length)",
                              FIELD(synth.checkins_per_day)));
  keys.push_back(int_key<int>("synth-clusters", "spatial POI clusters", FIELD(synth.clusters)));
  keys.push_back(real_key("synth-cluster-radius-km", "cluster spread (km)", FIELD(synth.cluster_radius_km)));
  keys.push_back(real_key("synth-min-lat", "bounding box south edge", FIELD(synth.min_lat)));
  keys.push_back(real_key("synth-max-lat", "bounding box north edge", FIELD(synth.max_lat)));
  keys.push_back(real_key("synth-min-lon", "bounding box west edge", FIELD(synth.min_lon)));
  keys.push_back(real_key("synth-max-lon", "bounding box east edge", FIELD(synth.max_lon)));
  keys.push_back(int_key<std::uint64_t>("synth-seed", "synthetic generator seed", FIELD(synth_seed)));
  return keys;
}

#undef FIELD

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

const ConfigKey* find_config_key(std::string_view name) {
  std::string normalized(name);
  std::replace(normalized.begin(), normalized.end(), '_', '-');
  for (const auto& k : config_keys()) {
    if (k.name == normalized) return &k;
  }
  return nullptr;
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> errors = model.validate();
  for (auto& e : train.validate()) errors.push_back(std::move(e));
  if (min_len < 2) errors.emplace_back("min-len must be at least 2");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) errors.emplace_back("split-ratio must lie in (0, 1)");
  if (!(train.lr0 > 0.0)) errors.emplace_back("lr0 must be positive");
  if (threads < 1) errors.emplace_back("threads must be at least 1");
  return errors;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(*this) + "\n";
  return out;
}

RunConfig parse_config_text(std::string_view text, RunConfig base, const std::string& origin) {
  std::vector<std::string> errors;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    const std::string line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const ConfigKey* k = find_config_key(key);
    if (k == nullptr) {
      errors.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    try {
      k->set(base, value);
    } catch (const UsageError& e) {
      errors.push_back(where + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base), path.string());
}

}  // namespace mobgt
