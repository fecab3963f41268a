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

#include <array>

#include <benchmark/benchmark.h>

#include "lmi/estimators.h"
#include "lmi/harness.h"
#include "lmi/interferometer.h"
#include "lmi/measurement.h"

namespace lmi {
namespace {

const ProcessParams kProcess = ProcessParams::from_q(0.7, 2, -0.3, 4, 0.5);

void BM_Forward(benchmark::State& state) {
  const SetupConfig s;
  const NoiseParams n{0.8, 1.2};
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, kProcess, n));
}
BENCHMARK(BM_Forward);

void BM_Sample(benchmark::State& state) {
  const auto out = forward(SetupConfig{}, kProcess);
  MeasurementPlan plan;
  plan.n_samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    ++plan.seed;
    benchmark::DoNotOptimize(estimate_moments(sample(out, plan)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(10000)->Arg(100000);

void BM_CovMethod(benchmark::State& state) {
  const SetupConfig s;
  std::array<ProbeMoments, 3> probes;
  for (int j = 0; j < 3; ++j) {
    SetupConfig probe = s;
    probe.probe_phase = kMeanProbePhases[j];
    probes[j] = {exact_moments(forward(probe, kProcess)), kMeanProbePhases[j]};
  }
  for (auto _ : state) benchmark::DoNotOptimize(est_general_cov(probes, s));
}
BENCHMARK(BM_CovMethod);

void BM_PhaseMl(benchmark::State& state) {
  const SetupConfig s;
  MeasurementPlan plan;
  const auto stats = exact_stats(forward(s, {0.7, 0, 0, 0, 0}), plan);
  for (auto _ : state) benchmark::DoNotOptimize(est_phase_ml(stats, s));
}
BENCHMARK(BM_PhaseMl);

void BM_RunMc(benchmark::State& state) {
  MonteCarloConfig cfg;
  cfg.process = kProcess;
  cfg.plan.n_samples = 10000;
  cfg.m_reps = 20;
  cfg.threads = 1;
  cfg.estimators = {EstimatorSpec::parse("cov"), EstimatorSpec::parse("mean")};
  for (auto _ : state) benchmark::DoNotOptimize(run_mc(cfg));
}
BENCHMARK(BM_RunMc)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lmi

BENCHMARK_MAIN();
