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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lmi/error.h"
#include "lmi/fisher.h"
#include "lmi/harness.h"

namespace lmi {
namespace {

const ProcessParams kGeneralProcess = ProcessParams::from_q(0.7, 2, -0.3, 4, 0.5);

MonteCarloConfig general_config(std::size_t m, std::size_t n) {
  MonteCarloConfig cfg;
  cfg.process = kGeneralProcess;
  cfg.plan.n_samples = n;
  cfg.m_reps = m;
  cfg.base_seed = 2026;
  cfg.estimators = {EstimatorSpec::parse("cov"), EstimatorSpec::parse("mean")};
  return cfg;
}

MonteCarloConfig phase_config(std::size_t m, std::size_t n) {
  MonteCarloConfig cfg;
  cfg.process = {0.7, 0, 0, 0, 0};
  cfg.plan.n_samples = n;
  cfg.m_reps = m;
  cfg.base_seed = 7;
  cfg.estimators = {EstimatorSpec::parse("phase_var"), EstimatorSpec::parse("phase_mean")};
  return cfg;
}

TEST(EstimatorSpec, ParseAndName) {
  EXPECT_EQ(EstimatorSpec::parse("cov").method, EstimatorMethod::kCovMethod);
  const auto naive = EstimatorSpec::parse("naive_mean");
  EXPECT_EQ(naive.channel, ChannelModel::kNaive);
  EXPECT_EQ(naive.name(), "naive_mean");
  EXPECT_EQ(EstimatorSpec::parse("Naive-MeanMethod"), naive);
  const auto cal = EstimatorSpec::parse("calibrated_mean");
  EXPECT_EQ(cal.channel, ChannelModel::kCalibrated);
  EXPECT_EQ(EstimatorSpec::parse(cal.name()), cal);
  EXPECT_EQ(EstimatorSpec::parse("phase_ml").parameters(), std::vector<std::string>{"phi"});
  EXPECT_EQ(EstimatorSpec::parse("displacement").parameters(),
            (std::vector<std::string>{"d", "beta"}));
  EXPECT_EQ(EstimatorSpec::parse("combined").parameters().size(), 5u);
  EXPECT_THROW(EstimatorSpec::parse("nonsense"), Error);
}

TEST(MonteCarloConfig, Validation) {
  auto cfg = general_config(1, 1000);
  EXPECT_THROW(cfg.validate(), Error);
  cfg.m_reps = 2;
  EXPECT_NO_THROW(cfg.validate());
  cfg.estimators.clear();
  EXPECT_THROW(cfg.validate(), Error);
  cfg = general_config(2, 1000);
  cfg.setup.topology = Topology::kSimplistic;
  try {
    cfg.validate();
    FAIL() << "triplet estimators need the light path";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(StreamSeed, DistinctStreams) {
  EXPECT_NE(stream_seed(5, 0), stream_seed(5, 1));
  EXPECT_NE(stream_seed(5, 1), stream_seed(6, 1));
  EXPECT_EQ(stream_seed(5, 2), stream_seed(5, 2));
}

TEST(RunMc, ExactMomentsGiveZeroError) {
  auto cfg = general_config(3, 1000);
  cfg.exact_moments = true;
  cfg.estimators.push_back(EstimatorSpec::parse("combined"));
  const auto rep = run_mc(cfg);
  for (const auto& c : rep.cells) {
    EXPECT_LT(c.mse, 1e-20) << c.estimator << " " << c.parameter;
    EXPECT_EQ(c.failures, 0u);
  }

  auto phase = phase_config(3, 1000);
  phase.exact_moments = true;
  for (const auto& c : run_mc(phase).cells) EXPECT_LT(c.mse, 1e-20) << c.estimator;

  // The likelihood search works on noise-free statistics, not moments, and
  // stops at the flatness of the log-likelihood.
  phase.estimators = {EstimatorSpec::parse("phase_ml")};
  EXPECT_LT(run_mc(phase).cells[0].mse, 1e-14);
}

TEST(RunMc, ShapeDecompositionAndDeterminism) {
  const auto cfg = general_config(12, 3000);
  const auto a = run_mc(cfg);
  ASSERT_EQ(a.cells.size(), 10u);
  for (const auto& c : a.cells) {
    EXPECT_NEAR(c.mse, c.bias * c.bias + c.variance, 1e-6 * c.mse) << c.estimator << c.parameter;
    EXPECT_EQ(c.n_ok + c.failures, 12u);
  }
  EXPECT_EQ(a.cell("mean", "q").parameter, "q");
  EXPECT_THROW(a.cell("mean", "gamma"), Error);

  const auto b = run_mc(cfg);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].mse, b.cells[i].mse);
    EXPECT_EQ(a.cells[i].bias, b.cells[i].bias);
  }
}

TEST(RunMc, ThreadCountDoesNotChangeResults) {
  auto cfg = phase_config(40, 2000);
  cfg.threads = 1;
  const auto one = run_mc(cfg);
  cfg.threads = 3;
  const auto three = run_mc(cfg);
  for (std::size_t i = 0; i < one.cells.size(); ++i) EXPECT_EQ(one.cells[i].mse, three.cells[i].mse);
}

TEST(RunMc, MatchesSingleRealization) {
  const auto cfg = general_config(2, 3000);
  const auto rep = run_mc(cfg);
  double sq = 0;
  for (std::uint64_t k = 1; k <= 2; ++k) {
    const auto est = estimate_realization(cfg, cfg.estimators[1], cfg.base_seed ^ k);
    sq += std::pow(est.params.d - kGeneralProcess.d, 2);
  }
  EXPECT_NEAR(rep.cell("mean", "d").mse, sq / 2, 1e-12 * sq);
}

TEST(RunMc, DisplacementSaturatesBound) {
  MonteCarloConfig cfg;
  cfg.process = {0, 0, 0, 4, 0.5};
  cfg.m_reps = 500;
  cfg.base_seed = 99;
  cfg.estimators = {EstimatorSpec::parse("displacement")};
  const auto rep = run_mc(cfg);
  EXPECT_NEAR(rep.cell("displacement", "d").mse / 1e-4, 1.0, 0.15);
}

TEST(RunMc, CellsAreNearlyUnbiased) {
  const auto rep = run_mc(general_config(400, 100000));
  for (const auto& c : rep.cells) {
    EXPECT_LT(c.bias * c.bias / c.mse, 0.05) << c.estimator << " " << c.parameter;
    EXPECT_FALSE(c.unreliable);
  }
}

TEST(RunMc, DoublingRepetitionsIsConsistent) {
  auto cfg = phase_config(200, 5000);
  cfg.estimators.push_back(EstimatorSpec::parse("phase_ml"));
  const auto small = run_mc(cfg);
  cfg.m_reps = 400;
  const auto large = run_mc(cfg);
  for (std::size_t i = 0; i < small.cells.size(); ++i) {
    EXPECT_LT(std::abs(small.cells[i].mse - large.cells[i].mse), 5 * small.cells[i].se_mse);
  }
}

TEST(Axis, ParseAndApply) {
  EXPECT_EQ(parse_axis("loss"), SweepAxis::kLoss);
  EXPECT_EQ(parse_axis("t"), SweepAxis::kT);
  EXPECT_EQ(to_string(SweepAxis::kV), "V");
  EXPECT_THROW(parse_axis("x"), Error);

  const auto base = general_config(2, 100);
  EXPECT_EQ(apply_axis(base, SweepAxis::kT, 0.3).setup.t1, 0.3);
  EXPECT_EQ(apply_axis(base, SweepAxis::kT, 0.3).setup.t2, 0.3);
  EXPECT_EQ(apply_axis(base, SweepAxis::kR, 7).setup.r_amp, 7);
  EXPECT_EQ(apply_axis(base, SweepAxis::kV, 9).setup.v_thermal, 9);
  EXPECT_EQ(apply_axis(base, SweepAxis::kPhi, 0.2).process.phi, 0.2);
  auto noisy = base;
  noisy.noise = NoiseParams{1, 1.2};
  const auto lossy = apply_axis(noisy, SweepAxis::kLoss, 0.25);
  EXPECT_EQ(lossy.noise->t_c, 0.75);
  EXPECT_EQ(lossy.noise->v_c, 1.2);
}

TEST(ParseGrid, Forms) {
  const auto lg = parse_grid("log:1:100:3");
  ASSERT_EQ(lg.size(), 3u);
  EXPECT_NEAR(lg[1], 10, 1e-12);
  EXPECT_EQ(lg[2], 100);
  const auto ln = parse_grid("lin:0:0.5:6");
  ASSERT_EQ(ln.size(), 6u);
  EXPECT_NEAR(ln[3], 0.3, 1e-15);
  EXPECT_EQ(parse_grid("1, 2.5,4"), (std::vector<double>{1, 2.5, 4}));
  EXPECT_TRUE(parse_grid("").empty());
  EXPECT_THROW(parse_grid("log:0:1:3"), Error);
  EXPECT_THROW(parse_grid("lin:0:1"), Error);
  EXPECT_THROW(parse_grid("1,x"), Error);
}

TEST(Sweep, EmptyGridAndPoints) {
  const auto cfg = phase_config(4, 1000);
  EXPECT_TRUE(sweep(cfg, SweepAxis::kR, {}).points.empty());
  const std::vector<double> grid{1, 10};
  const auto table = sweep(cfg, SweepAxis::kR, grid);
  ASSERT_EQ(table.points.size(), 2u);
  EXPECT_EQ(table.points[1].report.config.setup.r_amp, 10);
  EXPECT_EQ(table.points[0].report.cells.size(), 2u);
}

SweepTable synthetic_table(double prefactor, double power) {
  SweepTable table;
  table.axis = SweepAxis::kT;
  for (double t : {0.01, 0.02, 0.05, 0.1, 0.5}) {
    SweepPoint p;
    p.value = t;
    MSECell c;
    c.estimator = "CovMethod";
    c.parameter = "phi";
    c.n_ok = 1;
    c.mse = prefactor * std::pow(t, -power);
    p.report.cells.push_back(c);
    table.points.push_back(p);
  }
  return table;
}

TEST(FitExponent, ExactPowerLaw) {
  const auto fits = fit_exponent(synthetic_table(7, 2));
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_NEAR(fits[0].exponent, 2.0, 1e-6);
  EXPECT_EQ(fits[0].points, 4u);
  EXPECT_NEAR(fits[0].r2, 1.0, 1e-12);
  EXPECT_FALSE(fits[0].unreliable);

  auto wrong_axis = synthetic_table(7, 2);
  wrong_axis.axis = SweepAxis::kR;
  EXPECT_THROW(fit_exponent(wrong_axis), Error);
  try {
    fit_exponent(synthetic_table(7, 2), 0.03);
    FAIL() << "two points are not enough";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(FitExponent, ScatterIsFlagged) {
  auto table = synthetic_table(1, 0);
  const double noise[] = {1, 30, 0.05, 20, 1};
  for (std::size_t i = 0; i < table.points.size(); ++i) table.points[i].report.cells[0].mse *= noise[i];
  EXPECT_TRUE(fit_exponent(table)[0].unreliable);
}

TEST(PowerLaw, Line) {
  const std::vector<double> x{1, 10, 100};
  const std::vector<double> y{3, 0.3, 0.03};
  const auto f = fit_power_law(x, y);
  EXPECT_NEAR(f.slope, -1, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3, 1e-12);
}

TEST(RCrit, NotFoundAboveCrossing) {
  const auto rep = find_r_crit(phase_config(60, 10000), 300, 3000, 4, 4);
  EXPECT_FALSE(rep.found);
  EXPECT_EQ(rep.coarse_r.size(), 4u);
}

double r_crit_at(double v, double t) {
  auto cfg = phase_config(150, 10000);
  cfg.setup.v_thermal = v;
  cfg.setup.t1 = cfg.setup.t2 = t;
  const auto rep = find_r_crit(cfg, 1, 3000, 10, 6);
  EXPECT_TRUE(rep.found) << "V=" << v << " T=" << t;
  EXPECT_LE(rep.r_lo, rep.r_crit);
  EXPECT_GE(rep.r_hi, rep.r_crit);
  return rep.r_crit;
}

TEST(RCrit, MonotoneInMatterVarianceAndCoupling) {
  const double v_lo = r_crit_at(25, 0.1);
  const double mid = r_crit_at(100, 0.1);
  const double v_hi = r_crit_at(400, 0.1);
  EXPECT_LT(v_lo, mid);
  EXPECT_LT(mid, v_hi);
  const double t_lo = r_crit_at(100, 0.025);
  const double t_hi = r_crit_at(100, 0.4);
  EXPECT_GT(t_lo, mid);
  EXPECT_LT(t_hi, mid);
}

TEST(Calibration, ExactMomentsRecoverIdealChannel) {
  const SetupConfig s;
  std::array<MomentEstimate, 3> m;
  for (int j = 0; j < 3; ++j) {
    SetupConfig probe = s;
    probe.probe_phase = kMeanProbePhases[j];
    m[j] = exact_moments(forward(probe, {}, NoiseParams{}));
  }
  const auto cal = calibrate_from_moments(m, s);
  EXPECT_NEAR(cal.estimate.t_c, 1, 1e-12);
  EXPECT_NEAR(cal.estimate.v_c, 1, 1e-12);
}

TEST(Calibration, ExactMomentsUnderLoss) {
  const SetupConfig s;
  const NoiseParams truth{0.8, 1.2};
  std::array<MomentEstimate, 3> m;
  for (int j = 0; j < 3; ++j) {
    SetupConfig probe = s;
    probe.probe_phase = kMeanProbePhases[j];
    m[j] = exact_moments(forward(probe, {}, truth));
  }
  const auto cal = calibrate_from_moments(m, s);
  EXPECT_NEAR(cal.estimate.t_c, 0.8, 1e-10);
  EXPECT_NEAR(cal.estimate.v_c, 1.2, 1e-8);
  EXPECT_TRUE(cal.v_c_identified);
}

TEST(Calibration, SampledWithinJackknifeError) {
  MeasurementPlan plan;
  plan.seed = 31;
  const auto cal = calibrate(SetupConfig{}, plan, {0.8, 1.2});
  EXPECT_GT(cal.sd_t_c, 0);
  EXPECT_GT(cal.sd_v_c, 0);
  EXPECT_LE(std::abs(cal.estimate.t_c - 0.8), 3 * cal.sd_t_c);
  EXPECT_LE(std::abs(cal.estimate.v_c - 1.2), 3 * cal.sd_v_c);
}

TEST(Calibration, RejectsUnphysicalGain) {
  const SetupConfig s;
  std::array<MomentEstimate, 3> m;
  for (int j = 0; j < 3; ++j) {
    SetupConfig probe = s;
    probe.probe_phase = kMeanProbePhases[j];
    m[j] = exact_moments(forward(probe, {}));
    m[j].mean *= 3;
  }
  try {
    calibrate_from_moments(m, s);
    FAIL() << "gain far above one";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCalibrationFailed);
  }
}

TEST(ProbePlan, SplitsShots) {
  MeasurementPlan plan;
  plan.n_samples = 100;
  EXPECT_EQ(probe_plan(plan, 0, 1).n_samples, 34u);
  EXPECT_EQ(probe_plan(plan, 2, 1).n_samples, 33u);
  EXPECT_EQ(probe_plan(plan, 1, 9).seed, 9u);
}

}  // namespace
}  // namespace lmi
