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

#include "cli/commands.h"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "lmi/error.h"
#include "lmi/fisher.h"

namespace lmi::cli {

using nlohmann::json;

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error(ErrorCode::kNumericFailure, "number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

json report_to_json(const EstimateReport& report) {
  json diag = json::object();
  // JSON has no literal for inf or nan; those travel as strings.
  for (const auto& [k, v] : report.diagnostics) {
    if (std::isfinite(v)) {
      diag[k] = v;
    } else {
      diag[k] = format_double(v);
    }
  }
  return json{
      {"method", report.method_name()},
      {"params",
       {{"phi", report.params.phi},
        {"w", report.params.w},
        {"q", report.params.q()},
        {"alpha", report.params.alpha},
        {"d", report.params.d},
        {"beta", report.params.beta}}},
      {"diagnostics", diag},
  };
}

EstimateReport report_from_json(const json& doc) {
  try {
    EstimateReport r;
    std::string name = doc.at("method").get<std::string>();
    r.naive = name.starts_with("Naive-");
    if (r.naive) name.erase(0, 6);
    r.method = parse_method(name);
    const json& p = doc.at("params");
    r.params.phi = p.at("phi").get<double>();
    r.params.w = p.at("w").get<double>();
    r.params.alpha = p.at("alpha").get<double>();
    r.params.d = p.at("d").get<double>();
    r.params.beta = p.at("beta").get<double>();
    for (const auto& [k, v] : doc.at("diagnostics").items()) {
      if (v.is_string()) {
        const auto text = v.get<std::string>();
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
          throw Error(ErrorCode::kInvalidArgument, "malformed report: diagnostics." + k);
        }
        r.diagnostics[k] = x;
      } else {
        r.diagnostics[k] = v.get<double>();
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed report: ") + e.what());
  }
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream* samples) {
  const auto& mc = cfg.mc;
  mc.setup.validate();
  mc.process.validate();
  const GaussianState state = forward(mc.setup, mc.process, mc.noise);
  const Vec2 mean = state.mean();
  const Mat2 cov = state.cov();
  const json dump{
      {"topology", to_string(mc.setup.topology)},
      {"mean", {mean(0), mean(1)}},
      {"cov", {{cov(0, 0), cov(0, 1)}, {cov(1, 0), cov(1, 1)}}},
      {"symplectic_eigenvalue", symplectic_eigenvalue(cov)},
  };
  out << dump.dump(2) << '\n';
  if (samples == nullptr) return;

  const SampleSet set = sample(state, mc.plan);
  const bool homodyne = mc.plan.scheme == MeasurementScheme::kHomodyneSplit2 ||
                        mc.plan.scheme == MeasurementScheme::kHomodyneSplit3;
  *samples << "shot_index,angle_rad_or_het,value_x,value_p\n";
  for (std::size_t i = 0; i < set.shots.size(); ++i) {
    const Shot& s = set.shots[i];
    *samples << i << ',';
    *samples << (homodyne ? format_double(s.angle) : std::string(to_string(mc.plan.scheme)));
    *samples << ',' << format_double(s.x) << ',';
    if (!homodyne) *samples << format_double(s.p);
    *samples << '\n';
  }
}

void cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const EstimateReport report =
      estimate_realization(cfg.mc, cfg.estimate_method, cfg.mc.plan.seed);
  out << report_to_json(report).dump(2) << '\n';
}

void cmd_fisher(const RunConfig& cfg, std::ostream& out) {
  const auto& mc = cfg.mc;
  const double n = static_cast<double>(mc.plan.n_samples);
  out << "topology,parameter,method,value,crb,n_samples\n";
  auto row = [&](Topology t, std::string_view parameter, const FisherResult& f) {
    const double bound = f.value > 0 ? 1.0 / (n * f.value) : INFINITY;
    out << to_string(t) << ',' << csv_field(parameter) << ',' << to_string(f.method) << ','
        << format_double(f.value) << ',' << format_double(bound) << ',' << mc.plan.n_samples
        << '\n';
  };
  const NoiseParams noise = mc.noise.value_or(NoiseParams::ideal());
  for (Topology t : {Topology::kSimplistic, Topology::kBlockedBeam, Topology::kInterferometric}) {
    SetupConfig setup = mc.setup;
    setup.topology = t;
    for (const auto& parameter : cfg.fisher_parameters) {
      if (parameter == "d" && noise.is_ideal()) row(t, parameter, fisher_displacement(setup));
      row(t, parameter, fisher_numeric(setup, mc.process, noise, parameter, 1e-5, mc.plan.scheme));
    }
  }
}

void write_sweep_rows(const SweepTable& table, std::ostream& out) {
  const std::string axis(to_string(table.axis));
  for (const auto& pt : table.points) {
    const auto& c = pt.report.config;
    for (const auto& cell : pt.report.cells) {
      out << csv_field(axis) << ',' << format_double(pt.value) << ',' << csv_field(cell.estimator)
          << ',' << csv_field(cell.parameter) << ',' << format_double(cell.mse) << ','
          << format_double(cell.bias) << ',' << format_double(cell.variance) << ','
          << c.plan.n_samples << ',' << c.m_reps << ',' << c.base_seed << '\n';
    }
  }
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.axis) throw Error(ErrorCode::kInvalidArgument, "sweep.axis: missing (or use --axis)");
  const auto grid = parse_grid(cfg.grid);
  const SweepTable table = sweep(cfg.mc, *cfg.axis, grid);
  out << kSweepHeader << '\n';
  write_sweep_rows(table, out);
}

void cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  const NoiseParams truth = cfg.mc.noise.value_or(NoiseParams::ideal());
  const CalibrationResult res =
      calibrate(cfg.mc.setup, cfg.mc.plan, truth, cfg.mc.jackknife_blocks);
  const json doc{
      {"t_c", res.estimate.t_c},
      {"v_c", res.estimate.v_c},
      {"t_c_raw", res.t_c_raw},
      {"v_c_raw", res.v_c_raw},
      {"sd_t_c", res.sd_t_c},
      {"sd_v_c", res.sd_v_c},
      {"v_c_identified", res.v_c_identified},
  };
  out << doc.dump(2) << '\n';
}

}  // namespace lmi::cli
