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

#ifndef MOBGT_TOOLS_CLI_HPP
#define MOBGT_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace mobgt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one `mobgt` invocation. `args` excludes the program name. Reports go
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Applies MOBGT_LOG_LEVEL (trace, debug, info, warn, error, critical, off)
/// to a stderr logger. Defaults to warn.
void configure_logging();

}  // namespace mobgt::cli

#endif  // MOBGT_TOOLS_CLI_HPP
