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

#ifndef LMI_TOOLS_CLI_COMMANDS_H_
#define LMI_TOOLS_CLI_COMMANDS_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cli/config.h"
#include "lmi/estimators.h"
#include "lmi/harness.h"

namespace lmi::cli {

inline constexpr std::string_view kSweepHeader =
    "axis,value,estimator,parameter,mse,bias,variance,n_samples,m_reps,seed";

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// RFC 4180 field: quoted when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);

nlohmann::json report_to_json(const EstimateReport& report);
EstimateReport report_from_json(const nlohmann::json& doc);

/// State dump as JSON; with `samples` set, also writes the shots as CSV
/// (shot_index,angle_rad_or_het,value_x,value_p).
void cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream* samples);
void cmd_estimate(const RunConfig& cfg, std::ostream& out);
void cmd_fisher(const RunConfig& cfg, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, std::ostream& out);
void cmd_calibrate(const RunConfig& cfg, std::ostream& out);

/// Rows of one sweep table, without the header.
void write_sweep_rows(const SweepTable& table, std::ostream& out);

}  // namespace lmi::cli

#endif  // LMI_TOOLS_CLI_COMMANDS_H_
