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

#ifndef LMI_ESTIMATORS_H_
#define LMI_ESTIMATORS_H_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lmi/gaussian.h"
#include "lmi/interferometer.h"
#include "lmi/measurement.h"

namespace lmi {

enum class EstimatorMethod {
  kDisplacementOnly,
  kPhaseVar,    // arccos inversion of the output variance
  kPhaseMean,   // two-argument arctangent of the output mean
  kPhaseMl,     // Gaussian maximum likelihood over phi
  kCovMethod,   // numeric inversion of the output covariance
  kMeanMethod,  // three coherent probes, means only
  kCombined,    // inverse-variance blend of kCovMethod and kMeanMethod
};

std::string_view to_string(EstimatorMethod method);
EstimatorMethod parse_method(std::string_view name);

/// Parameter names used in reports and diagnostics.
inline constexpr std::array<std::string_view, 5> kProcessParameterNames = {"phi", "q", "alpha",
                                                                           "d", "beta"};

struct EstimateReport {
  ProcessParams params;
  EstimatorMethod method = EstimatorMethod::kCovMethod;
  bool naive = false;  // estimator assumed an ideal channel
  std::map<std::string, double> diagnostics;

  /// "CovMethod", "Naive-MeanMethod", ...
  std::string method_name() const;
  bool operator==(const EstimateReport&) const = default;
};

/// Output variance model Var(x_o) = Var(p_o) = u + v cos(phi) for a
/// phase-only process.
struct UVCoefficients {
  double u = 0.0;
  double v = 0.0;
  double variance(double phi) const;
};

UVCoefficients phase_uv(const SetupConfig& setup, const NoiseParams& noise = {});

struct DisplacementEstimate {
  double d = 0.0;
  double beta = 0.0;
  Vec2 d_vec = Vec2::Zero();
  bool near_zero = false;  // |d| within 3 standard errors of the origin
};

/// Inverts the output mean of a displacement-only process.
DisplacementEstimate est_displacement(const MomentEstimate& moments, const SetupConfig& setup,
                                      const NoiseParams& noise = {});

struct PhaseEstimate {
  double phi = 0.0;
  bool clamped = false;         // arccos argument left [-1, 1]
  bool magnitude_only = false;  // sign of phi not resolvable (r = 0)
  int iterations = 0;
  double log_likelihood = 0.0;
};

PhaseEstimate est_phase_var(const MomentEstimate& moments, const SetupConfig& setup,
                            const NoiseParams& noise = {});
PhaseEstimate est_phase_mean(const MomentEstimate& moments, const SetupConfig& setup);

/// Gaussian log-likelihood of the data under a phase-only process.
double phase_log_likelihood(const QuadratureStats& stats, const SetupConfig& setup,
                            const NoiseParams& noise, double phi);

/// 64-point grid followed by golden-section refinement.
PhaseEstimate est_phase_ml(const QuadratureStats& stats, const SetupConfig& setup,
                           const NoiseParams& noise = {});
PhaseEstimate est_phase_ml(const SampleSet& samples, const SetupConfig& setup,
                           const NoiseParams& noise = {});

/// Moments of one coherent probe together with its phase.
struct ProbeMoments {
  MomentEstimate moments;
  double probe_phase = 0.0;
};

struct CovFitOptions {
  double max_relative_residual = 0.05;
  double w_cap = 3.0;
  int starts = 16;
  /// Local minima within this relative residual of the best one count as
  /// competing branches.
  double branch_tolerance = 0.01;
  /// Skip the coarse grid and refine from here (jackknife replicates).
  std::optional<ProcessParams> warm_start;
};

/// Covariance method: fits (phi, w, alpha) to the output covariance, then reads the
/// displacement off the residual mean. Several probes pool their covariances
/// (the output covariance does not depend on the probe phase) and average
/// their displacement estimates.
///
/// The covariance alone generally has several exact solutions. With two or
/// more probes the branch whose probes agree on the displacement is chosen;
/// a single probe cannot resolve them and the report carries
/// "ambiguous" = 1 when more than one branch fits.
EstimateReport est_general_cov(std::span<const ProbeMoments> probes, const SetupConfig& setup,
                               const NoiseParams& noise = {}, const CovFitOptions& options = {});
EstimateReport est_general_cov(const MomentEstimate& moments, const SetupConfig& setup,
                               const NoiseParams& noise = {}, const CovFitOptions& options = {});

/// Probe phases for the mean method, in argument order.
inline constexpr std::array<double, 3> kMeanProbePhases = {0.0, kPi, kPi / 2};

/// Mean method: probes at phases 0, pi and pi/2 identify the displacement
/// and the linear response column by column.
EstimateReport est_general_mean(const MomentEstimate& probe_0, const MomentEstimate& probe_pi,
                                const MomentEstimate& probe_half_pi, const SetupConfig& setup,
                                const NoiseParams& noise = {});

/// Stores jackknife variances "var_<param>" computed from leave-one-block-out
/// replicate estimates. Angles use circular deviations.
void add_jackknife_variances(EstimateReport& report, std::span<const ProcessParams> replicates);

/// Inverse-variance blend of two reports carrying jackknife variances. Sets
/// "z_<param>" discrepancies and "inconsistent" = 1 when any exceeds 5.
EstimateReport est_combined(const EstimateReport& report_i, const EstimateReport& report_ii);

/// Parameter value by report name ("q" is reported as e^w).
double parameter_value(const ProcessParams& p, std::string_view name);
bool is_angle_parameter(std::string_view name);

}  // namespace lmi

#endif  // LMI_ESTIMATORS_H_
