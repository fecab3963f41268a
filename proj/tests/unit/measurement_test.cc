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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lmi/error.h"
#include "lmi/interferometer.h"
#include "lmi/measurement.h"

namespace lmi {
namespace {

MeasurementPlan plan_of(MeasurementScheme scheme, std::size_t n, std::uint64_t seed) {
  MeasurementPlan p;
  p.scheme = scheme;
  p.n_samples = n;
  p.seed = seed;
  return p;
}

GaussianState state_with_cross(double vx, double vp, double cxp, Vec2 mean = Vec2::Zero()) {
  PhaseMatrix c(2, 2);
  c << vx, cxp, cxp, vp;
  return GaussianState(PhaseVector(mean), c);
}

TEST(Plan, GroupSizesConserveShots) {
  auto p = plan_of(MeasurementScheme::kHomodyneSplit3, 100, 0);
  const auto sizes = p.group_sizes();
  ASSERT_EQ(sizes.size(), 3u);
  EXPECT_EQ(sizes[0], 34u);
  EXPECT_EQ(sizes[1], 33u);
  EXPECT_EQ(sizes[2], 33u);
  p.scheme = MeasurementScheme::kHomodyneSplit2;
  EXPECT_EQ(p.group_sizes(), (std::vector<std::size_t>{50, 50}));
  p.scheme = MeasurementScheme::kJoint;
  EXPECT_EQ(p.group_sizes(), (std::vector<std::size_t>{100}));
  p.n_samples = 1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Plan, SchemeNames) {
  for (auto s : {MeasurementScheme::kHomodyneSplit2, MeasurementScheme::kHomodyneSplit3,
                 MeasurementScheme::kHeterodyne, MeasurementScheme::kJoint}) {
    EXPECT_EQ(parse_scheme(to_string(s)), s);
  }
  EXPECT_THROW(parse_scheme("photon-counting"), Error);
}

TEST(Sample, DeterministicInSeed) {
  const auto st = forward(SetupConfig{}, {0.7, 0, 0, 0, 0});
  const auto plan = plan_of(MeasurementScheme::kHomodyneSplit3, 999, 42);
  const auto a = sample(st, plan);
  const auto b = sample(st, plan);
  ASSERT_EQ(a.shots.size(), 999u);
  for (std::size_t i = 0; i < a.shots.size(); ++i) {
    EXPECT_EQ(a.shots[i].x, b.shots[i].x);
  }
  const auto c = sample(st, plan_of(MeasurementScheme::kHomodyneSplit3, 999, 43));
  EXPECT_NE(a.shots[0].x, c.shots[0].x);
}

TEST(Sample, ShotLayout) {
  const auto set = sample(make_vacuum(), plan_of(MeasurementScheme::kHomodyneSplit2, 10, 1));
  EXPECT_EQ(set.shots[0].angle, 0.0);
  EXPECT_EQ(set.shots[9].angle, kPi / 2);
  EXPECT_TRUE(std::isnan(set.shots[0].p));
  const auto pairs = sample(make_vacuum(), plan_of(MeasurementScheme::kJoint, 10, 1));
  EXPECT_TRUE(std::isnan(pairs.shots[0].angle));
  EXPECT_FALSE(std::isnan(pairs.shots[0].p));
}

TEST(Sample, VacuumVarianceIsOne) {
  const auto m = estimate_moments(sample(make_vacuum(), plan_of(MeasurementScheme::kHomodyneSplit2,
                                                                200000, 7)));
  // Standard error of a variance from 1e5 shots is sqrt(2e-5) ~ 0.0045.
  EXPECT_NEAR(m.cov(0, 0), 1, 0.02);
  EXPECT_NEAR(m.cov(1, 1), 1, 0.02);
}

TEST(Sample, HeterodyneAddsOneVacuumUnit) {
  const auto set = sample(make_vacuum(), plan_of(MeasurementScheme::kHeterodyne, 100000, 8));
  double s = 0;
  for (const auto& shot : set.shots) s += shot.x * shot.x;
  EXPECT_NEAR(s / 100000, 2, 0.04);

  const auto coh = sample(make_coherent(100, 0), plan_of(MeasurementScheme::kHeterodyne, 100000, 9));
  const auto m = estimate_moments(coh);
  const double se = std::sqrt(2.0 / 100000);
  EXPECT_NEAR(m.mean(0), 100, 3 * se);
  EXPECT_NEAR(m.mean(1), 0, 3 * se);
  EXPECT_NEAR(m.cov(0, 0), 1, 0.03);
  EXPECT_NEAR(m.cov(1, 1), 1, 0.03);
}

TEST(Sample, VarianceConcentration) {
  const double var = 18.82 - 17.82 * std::cos(0.7);
  const auto st = forward(SetupConfig{}, {0.7, 0, 0, 0, 0});
  int within = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto m = estimate_moments(sample(st, plan_of(MeasurementScheme::kJoint, 100000, seed)));
    if (std::abs(m.cov(0, 0) / var - 1) < 0.03) ++within;
  }
  EXPECT_GE(within, 38);
}

TEST(Moments, HomodyneThreeRecoversCrossCovariance) {
  const auto st = state_with_cross(20, 10, 5);
  const auto m =
      estimate_moments(sample(st, plan_of(MeasurementScheme::kHomodyneSplit3, 100000, 21)));
  EXPECT_TRUE(m.has_cross_covariance);
  // Cov = Var45 - (Vx + Vp) / 2 from three independent groups of ~33k shots.
  const double se = std::sqrt(2 * (20 + 5) * (20 + 5) / 33333.0 + 0.25 * 2 * (400 + 100) / 33333.0);
  EXPECT_NEAR(m.cov(0, 1), 5, 3 * se);
  const auto two =
      estimate_moments(sample(st, plan_of(MeasurementScheme::kHomodyneSplit2, 1000, 21)));
  EXPECT_FALSE(two.has_cross_covariance);
  EXPECT_EQ(two.cov(0, 1), 0.0);
}

TEST(Moments, DegenerateSamplesRepairToVacuum) {
  SampleSet set;
  set.plan = plan_of(MeasurementScheme::kJoint, 50, 0);
  for (int i = 0; i < 50; ++i) set.shots.push_back({std::nan(""), 3.0, -2.0});
  const auto m = estimate_moments(set);
  EXPECT_EQ(m.mean(0), 3.0);
  EXPECT_EQ(m.mean(1), -2.0);
  EXPECT_TRUE(m.cov.isApprox(Mat2::Identity(), 1e-14));
  EXPECT_TRUE(m.repaired);
}

TEST(Moments, MissingQuadratureGroup) {
  QuadratureStats stats;
  stats.scheme = MeasurementScheme::kHomodyneSplit2;
  stats.groups.push_back({0.0, 10, 0.0, 9.0});
  EXPECT_THROW(estimate_moments(stats), Error);
}

TEST(Stats, BlocksMergeIntoTheWhole) {
  const auto st = state_with_cross(5, 3, 1, Vec2(2, -1));
  for (auto scheme : {MeasurementScheme::kJoint, MeasurementScheme::kHomodyneSplit3}) {
    const auto set = sample(st, plan_of(scheme, 10001, 4));
    const auto whole = summarize(set);
    const auto blocks = block_stats(set, 20);
    ASSERT_EQ(blocks.size(), 20u);
    QuadratureStats merged = blocks[0];
    for (std::size_t b = 1; b < blocks.size(); ++b) merged.merge(blocks[b]);
    EXPECT_EQ(merged.total_shots(), whole.total_shots());
    const auto a = estimate_moments(whole);
    const auto c = estimate_moments(merged);
    EXPECT_LT((a.mean - c.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.cov - c.cov).cwiseAbs().maxCoeff(), 1e-9);

    const auto loo = leave_one_out(blocks);
    ASSERT_EQ(loo.size(), 20u);
    EXPECT_EQ(loo[3].total_shots() + blocks[3].total_shots(), whole.total_shots());
  }
}

TEST(Stats, ExactStatsCarryMaximumLikelihoodScaling) {
  const auto st = state_with_cross(5, 3, 1, Vec2(2, -1));
  const auto s = exact_stats(st, plan_of(MeasurementScheme::kJoint, 1000, 0));
  EXPECT_TRUE((s.pairs.scatter / 1000.0).isApprox(st.cov(), 1e-14));
  const auto h = exact_stats(st, plan_of(MeasurementScheme::kHomodyneSplit2, 1000, 0));
  EXPECT_NEAR(h.groups[1].m2 / h.groups[1].n, 3, 1e-12);
  const auto m = exact_moments(st);
  EXPECT_TRUE(m.cov.isApprox(st.cov()));
  EXPECT_TRUE(m.mean.isApprox(st.mean()));
}

}  // namespace
}  // namespace lmi
