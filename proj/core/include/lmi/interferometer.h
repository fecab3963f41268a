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

#ifndef LMI_INTERFEROMETER_H_
#define LMI_INTERFEROMETER_H_

#include <optional>
#include <string_view>

#include "lmi/gaussian.h"

namespace lmi {

enum class Topology {
  kInterferometric,  // BS(T1), process, BS(T2) with the retained light
  kSimplistic,       // process on the bare thermal matter, then BS(T2)
  kBlockedBeam,      // BS(T1), process, BS(T2) with a vacuum light port
};

std::string_view to_string(Topology topology);
/// Accepts "interferometric", "simplistic" and "blocked" (or "blocked_beam").
Topology parse_topology(std::string_view name);

struct SetupConfig {
  Topology topology = Topology::kInterferometric;
  double t1 = 0.1;          // light -> matter transmittance
  double t2 = 0.1;          // matter -> light transmittance
  double v_thermal = 100;   // matter variance V
  double r_amp = 100;       // coherent amplitude r
  double probe_phase = 0;   // phase of the coherent input

  void validate() const;
  /// T1 as seen by the wiring: ignored (zero) for the simplistic topology.
  double effective_t1() const { return topology == Topology::kSimplistic ? 0.0 : t1; }
  Vec2 probe_mean() const;
};

/// Decoherence acting on the matter right after the process.
struct NoiseParams {
  double t_c = 1.0;
  double v_c = 1.0;

  static NoiseParams ideal() { return {}; }
  bool is_ideal() const { return t_c == 1.0 && v_c == 1.0; }
  void validate() const;
  bool operator==(const NoiseParams&) const = default;
};

/// Full two-mode phase-space simulation of one topology; returns the state of
/// the measured light mode.
GaussianState forward(const SetupConfig& setup, const ProcessParams& process,
                      const std::optional<NoiseParams>& noise = std::nullopt);

/// The measured light quadratures written as a linear combination of the
/// independent inputs:
///   out = probe * L + thermal * M + bath * B + vacuum * E + gain * d_vec
/// with L the coherent probe (cov I), M the thermal matter (cov V I), B the
/// loss-channel bath (cov V_C I) and E a fresh vacuum port (cov I).
///
/// This is the closed-form counterpart of forward() and is what the
/// estimators evaluate inside their optimizers.
struct LightResponse {
  Mat2 probe = Mat2::Zero();
  Mat2 thermal = Mat2::Zero();
  Mat2 bath = Mat2::Zero();
  Mat2 vacuum = Mat2::Zero();
  double displacement_gain = 0.0;

  Vec2 mean(const Vec2& probe_mean, const Vec2& d_vec) const;
  Mat2 cov(double v_thermal, double v_c) const;
};

LightResponse light_response(const SetupConfig& setup, const ProcessParams& process,
                             const NoiseParams& noise = {});

/// Output light moments from the closed form. Agrees with forward().
GaussianState output_moments(const SetupConfig& setup, const ProcessParams& process,
                             const NoiseParams& noise = {});

/// Affine structure of the output mean,
///   m_out = M_lin(process) m_in + gain * d_vec,
///   M_lin = matter_path * R(phi) Sq(w, alpha) + light_path * I.
struct MeanMap {
  double displacement_gain = 0.0;  // sqrt(T2 T_C)
  double matter_path = 0.0;        // sqrt(T1 T2 T_C)
  double light_path = 0.0;         // sqrt((1-T1)(1-T2)); 0 when the beam is blocked

  Mat2 linear(const ProcessParams& process) const;
  Vec2 offset(const Vec2& d_vec) const { return displacement_gain * d_vec; }
  Vec2 predict(const ProcessParams& process, const Vec2& probe_mean) const;
};

/// Throws kUnsupported for the simplistic topology, where no probe light
/// reaches the matter.
MeanMap mean_map(const SetupConfig& setup, const NoiseParams& noise = {});

}  // namespace lmi

#endif  // LMI_INTERFEROMETER_H_
