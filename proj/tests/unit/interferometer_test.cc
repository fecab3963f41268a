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
#include <random>

#include <gtest/gtest.h>

#include "lmi/error.h"
#include "lmi/interferometer.h"

namespace lmi {
namespace {

const ProcessParams kGeneralProcess{0.7, std::log(2.0), -0.3, 4, 0.5};

TEST(Forward, ReferencePointMatchesIndependentSimulation) {
  const auto out = forward(SetupConfig{}, kGeneralProcess);
  EXPECT_NEAR(out.mean()(0), 107.57854869, 1e-7);
  EXPECT_NEAR(out.mean()(1), 11.57978933, 1e-7);
  EXPECT_NEAR(out.cov()(0, 0), 7.27234957, 1e-7);
  EXPECT_NEAR(out.cov()(0, 1), 9.85125819, 1e-7);
  EXPECT_NEAR(out.cov()(1, 1), 16.56643099, 1e-7);
}

TEST(Forward, PhaseOnlyMeanAndVariance) {
  const auto out = forward(SetupConfig{}, {0.7, 0, 0, 0, 0});
  EXPECT_NEAR(out.mean()(0), 90 + 10 * std::cos(0.7), 1e-10);
  EXPECT_NEAR(out.mean()(1), 10 * std::sin(0.7), 1e-10);
  EXPECT_NEAR(out.mean()(0), 97.648, 5e-4);
  EXPECT_NEAR(out.mean()(1), 6.442, 5e-4);
  const double var = 18.82 - 17.82 * std::cos(0.7);
  EXPECT_NEAR(out.cov()(0, 0), var, 1e-10);
  EXPECT_NEAR(out.cov()(1, 1), var, 1e-10);
  EXPECT_NEAR(out.cov()(0, 1), 0, 1e-10);
  EXPECT_NEAR(forward(SetupConfig{}, {}).cov()(0, 0), 1, 1e-12);
}

TEST(Forward, MachZehnderIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    SetupConfig s;
    s.t1 = s.t2 = u(rng);
    s.v_thermal = 1 + 500 * u(rng);
    s.r_amp = 300 * u(rng);
    s.probe_phase = 2 * kPi * u(rng) - kPi;
    const auto out = forward(s, ProcessParams::identity());
    const auto in = make_coherent(s.r_amp, s.probe_phase);
    EXPECT_LT((out.mean() - in.mean()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((out.cov() - in.cov()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Forward, ClosedFormAgreesForAllTopologies) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (Topology t : {Topology::kSimplistic, Topology::kBlockedBeam, Topology::kInterferometric}) {
    for (int i = 0; i < 40; ++i) {
      SetupConfig s;
      s.topology = t;
      s.t1 = u(rng);
      s.t2 = u(rng);
      s.v_thermal = 1 + 200 * u(rng);
      s.r_amp = 200 * u(rng);
      s.probe_phase = 6 * u(rng) - 3;
      const ProcessParams p{6 * u(rng) - 3, 2 * u(rng), 6 * u(rng) - 3, 5 * u(rng), 6 * u(rng) - 3};
      const NoiseParams n{0.05 + 0.95 * u(rng), 1 + 3 * u(rng)};
      const auto a = forward(s, p, n);
      const auto b = output_moments(s, p, n);
      EXPECT_LT((a.mean() - b.mean()).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((a.cov() - b.cov()).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_TRUE(a.is_physical());
    }
  }
}

TEST(Forward, SimplisticIgnoresProbeForProcess) {
  SetupConfig s;
  s.topology = Topology::kSimplistic;
  s.r_amp = 0;
  const auto out = forward(s, {0, 0, 0, 4, 0.5});
  EXPECT_NEAR(out.mean()(0), std::sqrt(0.1) * 4 * std::cos(0.5), 1e-12);
  EXPECT_NEAR(out.mean()(1), std::sqrt(0.1) * 4 * std::sin(0.5), 1e-12);
  EXPECT_NEAR(out.cov()(0, 0), 1 + 0.1 * 99, 1e-12);
}

TEST(Forward, BlockedBeamSeesOnlyMatterAndVacuum) {
  SetupConfig s;
  s.topology = Topology::kBlockedBeam;
  s.t1 = 1.0;
  const auto out = forward(s, {0, 0, 0, 4, 0.5});
  // With T1 = 1 the matter is the coherent probe itself.
  EXPECT_NEAR(out.cov()(0, 0), 1, 1e-12);
  EXPECT_NEAR(out.mean()(0), std::sqrt(0.1) * (100 + 4 * std::cos(0.5)), 1e-10);
}

TEST(Forward, ValidatesInputs) {
  SetupConfig s;
  s.t1 = 1.5;
  EXPECT_THROW(forward(s, {}), Error);
  s = {};
  s.v_thermal = 0.5;
  EXPECT_THROW(forward(s, {}), Error);
  EXPECT_THROW(forward(SetupConfig{}, {}, NoiseParams{0, 1}), Error);
  EXPECT_THROW(forward(SetupConfig{}, {0, std::nan(""), 0, 0, 0}), Error);
  EXPECT_NO_THROW(forward(SetupConfig{}, {0, -1, 0, -2, 0}));
}

TEST(MeanMap, Examples) {
  const auto m = mean_map(SetupConfig{});
  EXPECT_TRUE(m.linear(ProcessParams::identity()).isApprox(Mat2::Identity(), 1e-14));
  const Vec2 off = m.offset(Vec2(3, 4));
  EXPECT_NEAR(off(0), 0.9486833, 1e-7);
  EXPECT_NEAR(off(1), 1.2649111, 1e-7);
  const auto lossy = mean_map(SetupConfig{}, {0.9, 1});
  EXPECT_NEAR(lossy.displacement_gain, 0.3, 1e-14);
  EXPECT_NEAR(lossy.matter_path, 0.1 * std::sqrt(0.9), 1e-14);
  SetupConfig simple;
  simple.topology = Topology::kSimplistic;
  EXPECT_THROW(mean_map(simple), Error);
}

TEST(MeanMap, PredictsForwardMean) {
  const SetupConfig s;
  const NoiseParams n{0.7, 1.3};
  const auto m = mean_map(s, n);
  const Vec2 predicted = m.predict(kGeneralProcess, s.probe_mean());
  const auto out = forward(s, kGeneralProcess, n);
  EXPECT_LT((predicted - out.mean()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Topology, Names) {
  for (Topology t : {Topology::kSimplistic, Topology::kBlockedBeam, Topology::kInterferometric}) {
    EXPECT_EQ(parse_topology(to_string(t)), t);
  }
  EXPECT_THROW(parse_topology("mirror"), Error);
}

}  // namespace
}  // namespace lmi
