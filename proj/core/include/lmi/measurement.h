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

#ifndef LMI_MEASUREMENT_H_
#define LMI_MEASUREMENT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lmi/gaussian.h"

namespace lmi {

enum class MeasurementScheme {
  kHomodyneSplit2,  // angles 0, pi/2; N/2 shots each
  kHomodyneSplit3,  // angles 0, pi/2, pi/4; N/3 shots each
  kHeterodyne,      // (x, p) pairs with one added vacuum unit per quadrature
  kJoint,           // (x, p) pairs drawn from the state's own covariance
};

std::string_view to_string(MeasurementScheme scheme);
/// Accepts "homodyne2", "homodyne3", "heterodyne" and "joint".
MeasurementScheme parse_scheme(std::string_view name);

struct MeasurementPlan {
  MeasurementScheme scheme = MeasurementScheme::kJoint;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;

  /// Homodyne angles in group order; empty for pair schemes.
  std::vector<double> angles() const;
  /// Shots per homodyne group (total N conserved, remainder to the first
  /// groups); a single entry of N for pair schemes.
  std::vector<std::size_t> group_sizes() const;
  void validate() const;
};

/// One detection event. Homodyne shots carry the measured quadrature in `x`
/// and NaN in `p`; pair shots carry NaN in `angle`.
struct Shot {
  double angle;
  double x;
  double p;
};

struct SampleSet {
  MeasurementPlan plan;
  std::vector<Shot> shots;  // homodyne shots are stored group by group
};

/// Draws plan.n_samples shots from a physical single-mode state.
/// Deterministic in (state, plan).
SampleSet sample(const GaussianState& state, const MeasurementPlan& plan);

/// Running moments of one homodyne angle group; m2 is the sum of squared
/// deviations from the mean.
struct QuadratureGroup {
  double angle = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
};

struct PairMoments {
  std::size_t n = 0;
  Vec2 mean = Vec2::Zero();
  Mat2 scatter = Mat2::Zero();  // sum of outer products of deviations
};

/// Sufficient statistics of a sample set under the Gaussian model. Blocks of
/// a sample set merge exactly into the statistics of their union.
struct QuadratureStats {
  MeasurementScheme scheme = MeasurementScheme::kJoint;
  std::vector<QuadratureGroup> groups;
  PairMoments pairs;

  std::size_t total_shots() const;
  void merge(const QuadratureStats& other);
};

QuadratureStats summarize(const SampleSet& samples);

/// Splits every angle group (or the pair list) into `blocks` contiguous
/// chunks; block b collects chunk b of every group.
std::vector<QuadratureStats> block_stats(const SampleSet& samples, int blocks);

/// Leave-one-block-out statistics, one entry per block.
std::vector<QuadratureStats> leave_one_out(std::span<const QuadratureStats> blocks);

/// Statistics whose maximum-likelihood moments are exactly those of `state`
/// (m2 = n * variance), with the plan's group sizes. Feeding them to
/// estimate_moments inflates the covariance by n / (n - 1); use
/// exact_moments for noise-free moment input.
QuadratureStats exact_stats(const GaussianState& state, const MeasurementPlan& plan);

struct MomentEstimate {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();
  /// Shots behind (mean x, mean p / var p, cross covariance).
  std::array<std::size_t, 3> n_effective{0, 0, 0};
  bool has_cross_covariance = false;
  bool repaired = false;
};

/// Means and unbiased (n-1) covariances. Homodyne cross covariance comes
/// from the pi/4 group, heterodyne subtracts the added vacuum unit, and the
/// result is mapped onto a physical covariance.
MomentEstimate estimate_moments(const QuadratureStats& stats);
MomentEstimate estimate_moments(const SampleSet& samples);

/// The moments a noise-free measurement of `state` would report.
MomentEstimate exact_moments(const GaussianState& state);

}  // namespace lmi

#endif  // LMI_MEASUREMENT_H_
