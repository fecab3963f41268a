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

#include "lmi/measurement.h"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lmi/error.h"

namespace lmi {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_pair_scheme(MeasurementScheme s) {
  return s == MeasurementScheme::kHeterodyne || s == MeasurementScheme::kJoint;
}

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

double rotated_mean(const Vec2& m, double angle) {
  return std::cos(angle) * m(0) + std::sin(angle) * m(1);
}

double rotated_variance(const Mat2& cov, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * c * cov(0, 0) + s * s * cov(1, 1) + 2 * c * s * cov(0, 1);
}

Mat2 measured_pair_cov(const Mat2& cov, MeasurementScheme scheme) {
  return scheme == MeasurementScheme::kHeterodyne ? Mat2(cov + Mat2::Identity()) : cov;
}

void merge_group(QuadratureGroup& a, const QuadratureGroup& b) {
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  const double n = static_cast<double>(a.n + b.n);
  const double delta = b.mean - a.mean;
  a.mean += delta * static_cast<double>(b.n) / n;
  a.m2 += b.m2 + delta * delta * static_cast<double>(a.n) * static_cast<double>(b.n) / n;
  a.n += b.n;
}

void merge_pairs(PairMoments& a, const PairMoments& b) {
  if (b.n == 0) return;
  if (a.n == 0) {
    a = b;
    return;
  }
  const double n = static_cast<double>(a.n + b.n);
  const Vec2 delta = b.mean - a.mean;
  a.mean += delta * static_cast<double>(b.n) / n;
  a.scatter += b.scatter + delta * delta.transpose() * static_cast<double>(a.n) *
                               static_cast<double>(b.n) / n;
  a.n += b.n;
}

void push_group(QuadratureGroup& g, double value) {
  QuadratureGroup one{g.angle, 1, value, 0.0};
  merge_group(g, one);
}

void push_pair(PairMoments& p, const Vec2& value) {
  ++p.n;
  const Vec2 delta = value - p.mean;
  p.mean += delta / static_cast<double>(p.n);
  p.scatter += delta * (value - p.mean).transpose();
}

// Closest physical covariance: clip negative eigenvalues, then inflate.
Mat2 physical_floor(const Mat2& cov, bool& repaired) {
  const Mat2 sym = 0.5 * (cov + cov.transpose());
  if (sym(0, 0) > 0 && sym.determinant() > 0) {
    const Mat2 out = repair_physicality(sym);
    repaired = out != sym;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat2> es(sym);
  const Vec2 lambda = es.eigenvalues().cwiseMax(0.0);
  const Mat2 psd = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  const double nu = std::sqrt(lambda(0) * lambda(1));
  repaired = true;
  return psd + (1.0 - nu) * Mat2::Identity();
}

const QuadratureGroup* find_group(const QuadratureStats& stats, double angle) {
  for (const auto& g : stats.groups) {
    if (std::abs(angular_difference(g.angle, angle)) < 1e-9) return &g;
  }
  return nullptr;
}

double unbiased_variance(const QuadratureGroup& g) {
  if (g.n < 2) throw Error(ErrorCode::kInsufficientData, "angle group has fewer than 2 shots");
  return g.m2 / static_cast<double>(g.n - 1);
}

}  // namespace

std::string_view to_string(MeasurementScheme scheme) {
  switch (scheme) {
    case MeasurementScheme::kHomodyneSplit2:
      return "homodyne2";
    case MeasurementScheme::kHomodyneSplit3:
      return "homodyne3";
    case MeasurementScheme::kHeterodyne:
      return "heterodyne";
    case MeasurementScheme::kJoint:
      return "joint";
  }
  return "unknown";
}

MeasurementScheme parse_scheme(std::string_view name) {
  if (name == "homodyne2") return MeasurementScheme::kHomodyneSplit2;
  if (name == "homodyne3") return MeasurementScheme::kHomodyneSplit3;
  if (name == "heterodyne") return MeasurementScheme::kHeterodyne;
  if (name == "joint") return MeasurementScheme::kJoint;
  throw Error(ErrorCode::kInvalidArgument, "unknown measurement scheme '" + std::string(name) + "'");
}

std::vector<double> MeasurementPlan::angles() const {
  switch (scheme) {
    case MeasurementScheme::kHomodyneSplit2:
      return {0.0, kPi / 2};
    case MeasurementScheme::kHomodyneSplit3:
      return {0.0, kPi / 2, kPi / 4};
    default:
      return {};
  }
}

std::vector<std::size_t> MeasurementPlan::group_sizes() const {
  const auto a = angles();
  if (a.empty()) return {n_samples};
  std::vector<std::size_t> sizes(a.size(), n_samples / a.size());
  for (std::size_t i = 0; i < n_samples % a.size(); ++i) ++sizes[i];
  return sizes;
}

void MeasurementPlan::validate() const {
  for (std::size_t n : group_sizes()) {
    if (n < 2) {
      throw Error(ErrorCode::kInvalidArgument,
                  "n_samples must leave at least 2 shots per angle group");
    }
  }
}

SampleSet sample(const GaussianState& state, const MeasurementPlan& plan) {
  if (state.n_modes() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "sampling expects a single-mode state");
  }
  if (!state.is_physical()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot sample an unphysical state");
  }
  plan.validate();
  const Vec2 mean = state.mean();
  const Mat2 cov = state.cov();

  auto engine = make_engine(plan.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleSet out{plan, {}};
  out.shots.reserve(plan.n_samples);

  if (is_pair_scheme(plan.scheme)) {
    const Mat2 measured = measured_pair_cov(cov, plan.scheme);
    const Mat2 chol = measured.llt().matrixL();
    for (std::size_t i = 0; i < plan.n_samples; ++i) {
      const double z0 = normal(engine);
      const double z1 = normal(engine);
      const Vec2 v = mean + chol * Vec2(z0, z1);
      out.shots.push_back({kNaN, v(0), v(1)});
    }
    return out;
  }

  const auto angles = plan.angles();
  const auto sizes = plan.group_sizes();
  for (std::size_t g = 0; g < angles.size(); ++g) {
    const double mu = rotated_mean(mean, angles[g]);
    const double sigma = std::sqrt(rotated_variance(cov, angles[g]));
    for (std::size_t i = 0; i < sizes[g]; ++i) {
      out.shots.push_back({angles[g], mu + sigma * normal(engine), kNaN});
    }
  }
  return out;
}

std::size_t QuadratureStats::total_shots() const {
  std::size_t n = pairs.n;
  for (const auto& g : groups) n += g.n;
  return n;
}

void QuadratureStats::merge(const QuadratureStats& other) {
  if (other.scheme != scheme || other.groups.size() != groups.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot merge statistics of different schemes");
  }
  for (std::size_t i = 0; i < groups.size(); ++i) merge_group(groups[i], other.groups[i]);
  merge_pairs(pairs, other.pairs);
}

namespace {

QuadratureStats empty_stats(const MeasurementPlan& plan) {
  QuadratureStats s;
  s.scheme = plan.scheme;
  for (double a : plan.angles()) s.groups.push_back({a, 0, 0.0, 0.0});
  return s;
}

// Accumulates shots [begin, end) of group g (or of the pair list).
void accumulate(QuadratureStats& s, std::span<const Shot> shots, std::size_t group) {
  if (s.groups.empty()) {
    for (const auto& shot : shots) push_pair(s.pairs, Vec2(shot.x, shot.p));
  } else {
    for (const auto& shot : shots) push_group(s.groups[group], shot.x);
  }
}

}  // namespace

QuadratureStats summarize(const SampleSet& samples) {
  auto blocks = block_stats(samples, 1);
  return blocks.front();
}

std::vector<QuadratureStats> block_stats(const SampleSet& samples, int blocks) {
  if (blocks < 1) throw Error(ErrorCode::kInvalidArgument, "block count must be >= 1");
  const auto sizes = samples.plan.group_sizes();
  std::size_t total = 0;
  for (auto n : sizes) total += n;
  if (total != samples.shots.size()) {
    throw Error(ErrorCode::kInvalidArgument, "sample set does not match its plan");
  }
  const auto nb = static_cast<std::size_t>(blocks);
  std::vector<QuadratureStats> out(nb, empty_stats(samples.plan));
  const std::span<const Shot> all(samples.shots);
  std::size_t offset = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const std::size_t n = sizes[g];
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * n / nb;
      const std::size_t hi = (b + 1) * n / nb;
      accumulate(out[b], all.subspan(offset + lo, hi - lo), g);
    }
    offset += n;
  }
  return out;
}

std::vector<QuadratureStats> leave_one_out(std::span<const QuadratureStats> blocks) {
  std::vector<QuadratureStats> out;
  out.reserve(blocks.size());
  for (std::size_t skip = 0; skip < blocks.size(); ++skip) {
    QuadratureStats acc;
    bool first = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (b == skip) continue;
      if (first) {
        acc = blocks[b];
        first = false;
      } else {
        acc.merge(blocks[b]);
      }
    }
    out.push_back(std::move(acc));
  }
  return out;
}

QuadratureStats exact_stats(const GaussianState& state, const MeasurementPlan& plan) {
  plan.validate();
  QuadratureStats s = empty_stats(plan);
  const auto sizes = plan.group_sizes();
  const Vec2 mean = state.mean();
  const Mat2 cov = state.cov();
  if (s.groups.empty()) {
    const auto n = sizes.front();
    s.pairs.n = n;
    s.pairs.mean = mean;
    s.pairs.scatter = static_cast<double>(n) * measured_pair_cov(cov, plan.scheme);
    return s;
  }
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    auto& grp = s.groups[g];
    grp.n = sizes[g];
    grp.mean = rotated_mean(mean, grp.angle);
    grp.m2 = static_cast<double>(grp.n) * rotated_variance(cov, grp.angle);
  }
  return s;
}

MomentEstimate estimate_moments(const QuadratureStats& stats) {
  MomentEstimate est;
  Mat2 raw = Mat2::Zero();
  if (stats.groups.empty()) {
    const auto& p = stats.pairs;
    if (p.n < 2) throw Error(ErrorCode::kInsufficientData, "fewer than 2 shots");
    est.mean = p.mean;
    raw = p.scatter / static_cast<double>(p.n - 1);
    if (stats.scheme == MeasurementScheme::kHeterodyne) raw -= Mat2::Identity();
    est.n_effective = {p.n, p.n, p.n};
    est.has_cross_covariance = true;
  } else {
    const QuadratureGroup* gx = find_group(stats, 0.0);
    const QuadratureGroup* gp = find_group(stats, kPi / 2);
    if (gx == nullptr || gp == nullptr) {
      throw Error(ErrorCode::kInsufficientData, "homodyne data lacks the 0 or pi/2 group");
    }
    est.mean = Vec2(gx->mean, gp->mean);
    raw(0, 0) = unbiased_variance(*gx);
    raw(1, 1) = unbiased_variance(*gp);
    est.n_effective = {gx->n, gp->n, 0};
    if (const QuadratureGroup* gd = find_group(stats, kPi / 4)) {
      // Var at pi/4 = (Var x + Var p) / 2 + Cov(x, p).
      const double cross = unbiased_variance(*gd) - 0.5 * (raw(0, 0) + raw(1, 1));
      raw(0, 1) = raw(1, 0) = cross;
      est.n_effective[2] = gd->n;
      est.has_cross_covariance = true;
    }
  }
  est.cov = physical_floor(raw, est.repaired);
  return est;
}

MomentEstimate estimate_moments(const SampleSet& samples) {
  return estimate_moments(summarize(samples));
}

MomentEstimate exact_moments(const GaussianState& state) {
  if (state.n_modes() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "exact_moments expects a single-mode state");
  }
  MomentEstimate est;
  est.mean = state.mean();
  est.cov = state.cov();
  const auto big = std::numeric_limits<std::size_t>::max();
  est.n_effective = {big, big, big};
  est.has_cross_covariance = true;
  return est;
}

}  // namespace lmi
