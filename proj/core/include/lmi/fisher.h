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

#ifndef LMI_FISHER_H_
#define LMI_FISHER_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmi/gaussian.h"
#include "lmi/interferometer.h"
#include "lmi/measurement.h"

namespace lmi {

enum class FisherMethod {
  kAnalyticSimplistic,       // T2 / (1 + T2 (V - 1))
  kAnalyticBlocked,          // T2 / (1 - T2 + T2 ((1 - T1) V + T1))
  kAnalyticInterferometric,  // T, for T1 = T2 = T
  kNumericGaussian,
};

std::string_view to_string(FisherMethod method);

/// Per-sample Fisher information for one parameter.
struct FisherResult {
  double value = 0.0;
  std::string parameter;
  FisherMethod method = FisherMethod::kNumericGaussian;
  // Split of a numeric result into the mean and covariance contributions.
  double mean_term = 0.0;
  double cov_term = 0.0;
};

/// Closed-form information on the displacement magnitude for a
/// displacement-only process. An interferometric setup with T1 != T2 has no
/// closed form and is evaluated numerically.
FisherResult fisher_displacement(const SetupConfig& setup);

/// Gaussian-model information
///   I = dmu^T Sigma^-1 dmu + 1/2 tr[(Sigma^-1 dSigma)^2]
/// per shot of `scheme` (kJoint: one (x, p) pair from the state itself),
/// with central differences of the full phase-space simulation. The result
/// at `step` is checked against `step / 2` (relative agreement 1e-3).
/// `parameter` is one of phi, q, w, alpha, d, beta.
FisherResult fisher_numeric(const SetupConfig& setup, const ProcessParams& process,
                            const NoiseParams& noise, std::string_view parameter,
                            double step = 1e-5,
                            MeasurementScheme scheme = MeasurementScheme::kJoint);

/// Cramer-Rao bound 1 / (n I). Throws kUnidentifiable when I = 0.
double crb(const FisherResult& fi, std::size_t n);

struct CrossingReport {
  std::vector<double> phi;
  std::vector<double> interferometric;
  std::vector<double> blocked;
  /// Linearly interpolated zeros of interferometric - blocked.
  std::vector<double> crossings;
};

/// Phase information of the interferometric and blocked-beam topologies over
/// a grid of phase shifts (phase-only process).
CrossingReport compare_blocked_vs_interferometric(const SetupConfig& setup,
                                                  std::span<const double> phi_grid);

}  // namespace lmi

#endif  // LMI_FISHER_H_
