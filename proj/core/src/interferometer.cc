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

#include "lmi/interferometer.h"

#include <cmath>
#include <string>

#include "lmi/error.h"

namespace lmi {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

bool in_unit_interval(double t) { return t >= 0 && t <= 1; }

}  // namespace

std::string_view to_string(Topology topology) {
  switch (topology) {
    case Topology::kInterferometric:
      return "interferometric";
    case Topology::kSimplistic:
      return "simplistic";
    case Topology::kBlockedBeam:
      return "blocked";
  }
  return "unknown";
}

Topology parse_topology(std::string_view name) {
  if (name == "interferometric") return Topology::kInterferometric;
  if (name == "simplistic") return Topology::kSimplistic;
  if (name == "blocked" || name == "blocked_beam") return Topology::kBlockedBeam;
  throw Error(ErrorCode::kInvalidArgument, "unknown topology '" + std::string(name) + "'");
}

void SetupConfig::validate() const {
  require(in_unit_interval(t1), "t1 must lie in [0, 1]");
  require(in_unit_interval(t2), "t2 must lie in [0, 1]");
  require(std::isfinite(v_thermal) && v_thermal >= 1, "v_thermal must be >= 1");
  require(std::isfinite(r_amp) && r_amp >= 0, "r_amp must be >= 0");
  require(std::isfinite(probe_phase), "probe_phase must be finite");
}

Vec2 SetupConfig::probe_mean() const {
  return {r_amp * std::cos(probe_phase), r_amp * std::sin(probe_phase)};
}

void NoiseParams::validate() const {
  require(t_c > 0 && t_c <= 1, "t_c must lie in (0, 1]");
  require(std::isfinite(v_c) && v_c >= 1, "v_c must be >= 1");
}

GaussianState forward(const SetupConfig& setup, const ProcessParams& process,
                      const std::optional<NoiseParams>& noise) {
  setup.validate();
  if (noise) noise->validate();
  process.folded().validate();
  const SymplecticOp gp = process_symplectic(process);
  // Slot 0 starts as matter, slot 1 as light.
  GaussianState state =
      tensor(make_thermal(setup.v_thermal), make_coherent(setup.r_amp, setup.probe_phase));

  auto disturb = [&](GaussianState s, int matter_slot) {
    s = apply_to_mode(gp, s, matter_slot);
    if (noise) s = loss_channel(s, matter_slot, noise->t_c, noise->v_c);
    return s;
  };

  if (setup.topology == Topology::kSimplistic) {
    state = disturb(state, 0);
    state = apply_to_modes(bs_symplectic(setup.t2), state, 0, 1);
    return state.marginal(0);
  }

  // First interface with in1 = matter, in2 = light. The sqrt(T1)-weighted
  // output that received the light (slot 1) is the matter from here on and
  // slot 0 carries the light.
  state = apply_to_modes(bs_symplectic(setup.t1), state, 0, 1);
  if (setup.topology == Topology::kBlockedBeam) {
    state = tensor(make_vacuum(), state.marginal(1));
  }
  state = disturb(state, 1);
  // Second interface with in1 = matter, in2 = light; out1 is measured.
  state = apply_to_modes(bs_symplectic(setup.t2), state, 1, 0);
  return state.marginal(1);
}

Vec2 LightResponse::mean(const Vec2& probe_mean, const Vec2& d_vec) const {
  return probe * probe_mean + displacement_gain * d_vec;
}

Mat2 LightResponse::cov(double v_thermal, double v_c) const {
  Mat2 c = probe * probe.transpose() + v_thermal * thermal * thermal.transpose() +
           v_c * bath * bath.transpose() + vacuum * vacuum.transpose();
  return 0.5 * (c + c.transpose());
}

LightResponse light_response(const SetupConfig& setup, const ProcessParams& process,
                             const NoiseParams& noise) {
  const Mat2 g = rotation(process.phi) * squeezer(process.w, process.alpha);
  const Mat2 id = Mat2::Identity();
  const double t1 = setup.effective_t1();
  const double t2 = setup.t2;
  const double s = std::sqrt(noise.t_c);

  LightResponse out;
  out.displacement_gain = std::sqrt(t2) * s;
  out.bath = std::sqrt(t2 * (1 - noise.t_c)) * id;
  switch (setup.topology) {
    case Topology::kSimplistic:
      out.probe = std::sqrt(1 - t2) * id;
      out.thermal = std::sqrt(t2) * s * g;
      break;
    case Topology::kInterferometric:
      out.probe = std::sqrt(t1 * t2) * s * g + std::sqrt((1 - t1) * (1 - t2)) * id;
      out.thermal = -std::sqrt(t2 * (1 - t1)) * s * g + std::sqrt(t1 * (1 - t2)) * id;
      break;
    case Topology::kBlockedBeam:
      out.probe = std::sqrt(t1 * t2) * s * g;
      out.thermal = -std::sqrt(t2 * (1 - t1)) * s * g;
      out.vacuum = std::sqrt(1 - t2) * id;
      break;
  }
  return out;
}

GaussianState output_moments(const SetupConfig& setup, const ProcessParams& process,
                             const NoiseParams& noise) {
  const LightResponse resp = light_response(setup, process, noise);
  return GaussianState(resp.mean(setup.probe_mean(), process.displacement()),
                       resp.cov(setup.v_thermal, noise.v_c));
}

Mat2 MeanMap::linear(const ProcessParams& process) const {
  return matter_path * rotation(process.phi) * squeezer(process.w, process.alpha) +
         light_path * Mat2::Identity();
}

Vec2 MeanMap::predict(const ProcessParams& process, const Vec2& probe_mean) const {
  return linear(process) * probe_mean + offset(process.displacement());
}

MeanMap mean_map(const SetupConfig& setup, const NoiseParams& noise) {
  if (setup.topology == Topology::kSimplistic) {
    throw Error(ErrorCode::kUnsupported,
                "mean_map needs a light path through the first interface");
  }
  MeanMap m;
  m.displacement_gain = std::sqrt(setup.t2 * noise.t_c);
  m.matter_path = std::sqrt(setup.t1 * setup.t2 * noise.t_c);
  if (setup.topology == Topology::kInterferometric) {
    m.light_path = std::sqrt((1 - setup.t1) * (1 - setup.t2));
  }
  return m;
}

}  // namespace lmi
