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

#ifndef LMI_HARNESS_H_
#define LMI_HARNESS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmi/estimators.h"
#include "lmi/gaussian.h"
#include "lmi/interferometer.h"
#include "lmi/measurement.h"

namespace lmi {

/// Which channel an estimator assumes.
enum class ChannelModel {
  kKnown,       // the simulated noise (or the ideal channel if none)
  kNaive,       // always the ideal channel (T_C = 1, V_C = 1)
  kCalibrated,  // estimated per realization with the process switched off
};

struct EstimatorSpec {
  EstimatorMethod method = EstimatorMethod::kCovMethod;
  ChannelModel channel = ChannelModel::kKnown;

  /// Short names: displacement, phase_var, phase_mean, phase_ml, cov, mean,
  /// combined; optionally prefixed with "naive_" or "calibrated_". The
  /// report-style names ("CovMethod", "Naive-MeanMethod") are accepted too.
  static EstimatorSpec parse(std::string_view name);
  std::string name() const;
  /// Parameters this estimator reports, in output order.
  std::vector<std::string> parameters() const;
  bool operator==(const EstimatorSpec&) const = default;
};

struct MonteCarloConfig {
  SetupConfig setup;
  ProcessParams process;
  std::optional<NoiseParams> noise;
  MeasurementPlan plan;
  std::size_t m_reps = 500;
  std::uint64_t base_seed = 0;
  std::vector<EstimatorSpec> estimators;
  /// Feed analytic moments instead of sampled ones (zero statistical noise).
  bool exact_moments = false;
  int jackknife_blocks = 20;
  /// Worker threads; 0 means LMI_THREADS or the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct MSECell {
  std::string estimator;
  std::string parameter;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double se_mse = 0.0;  // standard error of the mse itself
  std::size_t n_ok = 0;
  std::size_t failures = 0;
  std::size_t clamps = 0;
  bool unreliable = false;  // more than 5% failed realizations
};

struct MSEReport {
  MonteCarloConfig config;
  std::vector<MSECell> cells;
  double wall_seconds = 0.0;

  /// Throws kInvalidArgument when the cell is absent.
  const MSECell& cell(std::string_view estimator, std::string_view parameter) const;
};

/// Monte-Carlo MSE: realization k (1-based) uses seed base_seed XOR k, and
/// all listed estimators see the same data. The displacement and phase
/// estimators use one run of N shots at setup.probe_phase; cov, mean and
/// combined use three probes (phases 0, pi, pi/2) of N/3 shots each.
/// Angle errors are circular.
MSEReport run_mc(const MonteCarloConfig& cfg);

/// Full report of one estimator on the data of a single realization with the
/// given seed (realization k of run_mc uses base_seed XOR k).
EstimateReport estimate_realization(const MonteCarloConfig& cfg, const EstimatorSpec& spec,
                                    std::uint64_t realization_seed);

/// Seed of the independent sample stream `stream` within a realization.
std::uint64_t stream_seed(std::uint64_t realization_seed, std::uint64_t stream);

enum class SweepAxis { kR, kV, kT, kLoss, kPhi };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

/// Copy of `cfg` with the swept quantity set to `value` (T sets T1 = T2,
/// loss sets T_C = 1 - value).
MonteCarloConfig apply_axis(const MonteCarloConfig& cfg, SweepAxis axis, double value);

struct SweepPoint {
  double value = 0.0;
  MSEReport report;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::kR;
  std::vector<SweepPoint> points;
};

SweepTable sweep(const MonteCarloConfig& cfg, SweepAxis axis, std::span<const double> grid);

/// Parses "log:lo:hi:n", "lin:lo:hi:n" or a comma-separated list.
std::vector<double> parse_grid(std::string_view spec);

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (log x, log y).
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct ExponentFit {
  std::string estimator;
  std::string parameter;
  double exponent = 0.0;  // c in MSE ~ T^-c
  double r2 = 0.0;
  std::size_t points = 0;
  bool unreliable = false;  // r2 < 0.9
};

/// Fits MSE ~ T^-c per (estimator, parameter) over the points with
/// T <= max_t. Needs a T sweep with at least four such points.
std::vector<ExponentFit> fit_exponent(const SweepTable& table, double max_t = 0.1);

struct RCritResult {
  bool found = false;
  double r_crit = 0.0;
  double r_lo = 0.0;  // bracket: variance estimator better at r_lo
  double r_hi = 0.0;
  std::vector<double> coarse_r;
  std::vector<double> coarse_diff;  // MSE(PhaseVar) - MSE(PhaseMean)
};

/// Amplitude where the variance- and mean-based phase estimators have equal
/// MSE: a log-spaced scan over [r_min, r_max] followed by bisection in log r
/// on the sign of the MSE difference.
RCritResult find_r_crit(const MonteCarloConfig& cfg, double r_min, double r_max,
                        int coarse_points = 8, int bisections = 8);

struct CalibrationResult {
  NoiseParams estimate;
  double t_c_raw = 1.0;  // before clamping
  double v_c_raw = 1.0;
  double sd_t_c = 0.0;   // jackknife standard errors (0 without samples)
  double sd_v_c = 0.0;
  /// False when the loss is too small for the excess variance to resolve
  /// V_C; the estimate then keeps V_C = 1.
  bool v_c_identified = true;
};

/// Channel estimate from three probes (phases 0, pi, pi/2) taken with the
/// process switched off. The common gain of the mean response gives T_C and
/// the excess output variance gives V_C. T_C is clamped to (0, 1] and V_C to
/// [1, inf); a gain outside the physical range by more than 10% throws
/// kCalibrationFailed.
CalibrationResult calibrate_from_moments(std::span<const MomentEstimate, 3> probes,
                                         const SetupConfig& setup);
CalibrationResult calibrate_from_samples(std::span<const SampleSet, 3> probes,
                                         const SetupConfig& setup, int jackknife_blocks = 20);

/// Simulates the calibration run (N split over the three probes) and
/// estimates the channel.
CalibrationResult calibrate(const SetupConfig& setup, const MeasurementPlan& plan,
                            const NoiseParams& true_noise, int jackknife_blocks = 20);

/// Plan for one of the three probes: N/3 shots and its own seed.
MeasurementPlan probe_plan(const MeasurementPlan& plan, int probe, std::uint64_t seed);

}  // namespace lmi

#endif  // LMI_HARNESS_H_
