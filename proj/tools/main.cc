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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.h"
#include "cli/config.h"
#include "lmi/error.h"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m_reps;
  std::optional<std::size_t> n_samples;
  std::string out;
  std::string axis;
  std::string grid;
  std::string method;
  std::string samples;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("config", f.config, "Run configuration (JSON)");
  cmd->add_option("--preset", f.preset, "Bundled figure preset, e.g. process_vs_r");
  cmd->add_option("--seed", f.seed, "Overrides the base and measurement seeds");
  cmd->add_option("--m-reps", f.m_reps, "Monte-Carlo repetitions M");
  cmd->add_option("--n-samples", f.n_samples, "Measurements per realization N");
  cmd->add_option("--out", f.out, "Output file (default: standard output)");
}

lmi::cli::RunConfig build_config(const Flags& f) {
  using lmi::Error;
  using lmi::ErrorCode;
  if (!f.config.empty() && !f.preset.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give a config file or --preset, not both");
  }
  lmi::cli::RunConfig cfg;
  if (!f.preset.empty()) {
    cfg = lmi::cli::load_run_config(lmi::cli::resolve_preset(f.preset));
  } else if (!f.config.empty()) {
    cfg = lmi::cli::load_run_config(f.config);
  } else {
    cfg = lmi::cli::parse_run_config(nlohmann::json::object());
  }
  if (f.seed) {
    cfg.mc.base_seed = *f.seed;
    cfg.mc.plan.seed = *f.seed;
  }
  if (f.m_reps) {
    if (*f.m_reps < 2) throw Error(ErrorCode::kInvalidArgument, "--m-reps: must be at least 2");
    cfg.mc.m_reps = *f.m_reps;
  }
  if (f.n_samples) cfg.mc.plan.n_samples = *f.n_samples;
  if (!f.out.empty()) cfg.output = f.out;
  if (!f.axis.empty()) cfg.axis = lmi::parse_axis(f.axis);
  if (!f.grid.empty()) {
    lmi::parse_grid(f.grid);
    cfg.grid = f.grid;
  }
  if (!f.method.empty()) cfg.estimate_method = lmi::EstimatorSpec::parse(f.method);
  cfg.mc.plan.validate();
  return cfg;
}

// Validation problems exit with 1, failures while estimating with 2.
int exit_code(lmi::ErrorCode code) {
  switch (code) {
    case lmi::ErrorCode::kInvalidArgument:
    case lmi::ErrorCode::kUnsupported:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-matter interferometry: simulation, estimation and Monte-Carlo sweeps"};
  app.require_subcommand(1);
  Flags flags;

  auto* simulate = app.add_subcommand("simulate", "Dump the output light state, optionally samples");
  add_common(simulate, flags);
  simulate->add_option("--samples", flags.samples, "Also write the measured shots to this CSV");
  auto* estimate = app.add_subcommand("estimate", "Estimate the process from one simulated run");
  add_common(estimate, flags);
  estimate->add_option("--method", flags.method, "Estimator, e.g. cov, mean, naive_mean");
  auto* fisher = app.add_subcommand("fisher", "Fisher information table (CSV)");
  add_common(fisher, flags);
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo MSE sweep (CSV)");
  add_common(sweep, flags);
  sweep->add_option("--axis", flags.axis, "r, V, T, loss or Phi");
  sweep->add_option("--grid", flags.grid, "log:lo:hi:n, lin:lo:hi:n or a comma list");
  auto* calibrate = app.add_subcommand("calibrate", "Estimate the channel with the process off");
  add_common(calibrate, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const lmi::cli::RunConfig cfg = build_config(flags);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.output.empty()) {
      file.open(cfg.output, std::ios::binary);
      if (!file) {
        throw lmi::Error(lmi::ErrorCode::kInvalidArgument, "cannot write '" + cfg.output + "'");
      }
      out = &file;
    }
    if (simulate->parsed()) {
      std::ofstream samples;
      if (!flags.samples.empty()) {
        samples.open(flags.samples, std::ios::binary);
        if (!samples) {
          throw lmi::Error(lmi::ErrorCode::kInvalidArgument,
                           "cannot write '" + flags.samples + "'");
        }
      }
      lmi::cli::cmd_simulate(cfg, *out, flags.samples.empty() ? nullptr : &samples);
    } else if (estimate->parsed()) {
      lmi::cli::cmd_estimate(cfg, *out);
    } else if (fisher->parsed()) {
      lmi::cli::cmd_fisher(cfg, *out);
    } else if (sweep->parsed()) {
      lmi::cli::cmd_sweep(cfg, *out);
    } else if (calibrate->parsed()) {
      lmi::cli::cmd_calibrate(cfg, *out);
    }
    out->flush();
  } catch (const lmi::Error& e) {
    std::cerr << "lmi: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "lmi: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
