// Copyright 2026 The LMI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMI_TOOLS_CLI_CONFIG_H_
#define LMI_TOOLS_CLI_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmi/harness.h"

namespace lmi::cli {

/// Everything one command needs. Documented key by key in README.md.
struct RunConfig {
  MonteCarloConfig mc;
  std::optional<SweepAxis> axis;
  std::string grid;
  EstimatorSpec estimate_method;
  std::vector<std::string> fisher_parameters{"d"};
  std::string output;  // empty: standard output
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// lmi::Error(kInvalidArgument) whose message starts with the field path.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Directory searched by --preset (LMI_PRESET_DIR overrides the built-in one).
std::filesystem::path preset_dir();
std::filesystem::path resolve_preset(std::string_view name);

}  // namespace lmi::cli

#endif  // LMI_TOOLS_CLI_CONFIG_H_
