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

#include "lmi/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "lmi/error.h"

namespace lmi {
namespace {

constexpr std::uint64_t kSingleStream = 0;
constexpr std::uint64_t kProbeStream = 1;        // 1, 2, 3
constexpr std::uint64_t kCalibrationStream = 4;  // 4, 5, 6

struct ShortName {
  EstimatorMethod method;
  std::string_view name;
};

constexpr std::array<ShortName, 7> kShortNames = {{
    {EstimatorMethod::kDisplacementOnly, "displacement"},
    {EstimatorMethod::kPhaseVar, "phase_var"},
    {EstimatorMethod::kPhaseMean, "phase_mean"},
    {EstimatorMethod::kPhaseMl, "phase_ml"},
    {EstimatorMethod::kCovMethod, "cov"},
    {EstimatorMethod::kMeanMethod, "mean"},
    {EstimatorMethod::kCombined, "combined"},
}};

bool strip_prefix(std::string_view& s, std::initializer_list<std::string_view> prefixes) {
  for (auto p : prefixes) {
    if (s.starts_with(p)) {
      s.remove_prefix(p.size());
      return true;
    }
  }
  return false;
}

bool is_phase_method(EstimatorMethod m) {
  return m == EstimatorMethod::kPhaseVar || m == EstimatorMethod::kPhaseMean ||
         m == EstimatorMethod::kPhaseMl;
}

bool uses_probe_triplet(EstimatorMethod m) {
  return m == EstimatorMethod::kCovMethod || m == EstimatorMethod::kMeanMethod ||
         m == EstimatorMethod::kCombined;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LMI_THREADS")) {
      unsigned cap = 0;
      const std::string_view v(env);
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), cap);
      if (ec == std::errc() && ptr == v.data() + v.size() && cap > 0) n = std::min(n, cap);
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs body(i) for i in [0, jobs) on `threads` workers; the first exception
// is rethrown after all workers have joined.
template <typename Body>
void parallel_for(std::size_t jobs, unsigned threads, Body&& body) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(jobs);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

SetupConfig with_probe_phase(SetupConfig setup, double phase) {
  setup.probe_phase = phase;
  return setup;
}

std::array<ProbeMoments, 3> pooled(const std::array<MomentEstimate, 3>& m) {
  std::array<ProbeMoments, 3> probes;
  for (int j = 0; j < 3; ++j) probes[j] = {m[j], kMeanProbePhases[j]};
  return probes;
}

// Data one realization exposes to the estimators.
struct RealizationData {
  std::optional<SampleSet> single;
  MomentEstimate single_moments;
  QuadratureStats single_stats;
  std::array<std::optional<SampleSet>, 3> probes;
  std::array<MomentEstimate, 3> probe_moments;
  std::optional<NoiseParams> calibrated;
  std::optional<Error> calibration_error;
};

struct Outcome {
  std::vector<double> values;  // one per reported parameter; empty on failure
  bool clamped = false;
};

// Covariance and mean methods on the probe triplet, both jackknifed, then
// blended.
EstimateReport combined_estimate(const RealizationData& data, const SetupConfig& setup,
                                 const NoiseParams& noise, int blocks) {
  EstimateReport rep_i = est_general_cov(pooled(data.probe_moments), setup, noise);
  EstimateReport rep_ii = est_general_mean(data.probe_moments[0], data.probe_moments[1],
                                           data.probe_moments[2], setup, noise);

  std::vector<ProcessParams> reps_i;
  std::vector<ProcessParams> reps_ii;
  if (data.probes[0].has_value()) {
    std::array<std::vector<QuadratureStats>, 3> loo;
    for (int j = 0; j < 3; ++j) {
      const auto b = block_stats(*data.probes[j], blocks);
      loo[j] = leave_one_out(b);
    }
    CovFitOptions warm;
    warm.warm_start = rep_i.params;
    for (int b = 0; b < blocks; ++b) {
      std::array<MomentEstimate, 3> m;
      for (int j = 0; j < 3; ++j) m[j] = estimate_moments(loo[j][b]);
      reps_i.push_back(est_general_cov(pooled(m), setup, noise, warm).params);
      reps_ii.push_back(est_general_mean(m[0], m[1], m[2], setup, noise).params);
    }
  } else {
    reps_i.assign(2, rep_i.params);
    reps_ii.assign(2, rep_ii.params);
  }
  add_jackknife_variances(rep_i, reps_i);
  add_jackknife_variances(rep_ii, reps_ii);
  return est_combined(rep_i, rep_ii);
}

EstimateReport run_estimator(const EstimatorSpec& spec, const RealizationData& data,
                             const MonteCarloConfig& cfg) {
  NoiseParams noise = cfg.noise.value_or(NoiseParams::ideal());
  if (spec.channel == ChannelModel::kNaive) noise = NoiseParams::ideal();
  if (spec.channel == ChannelModel::kCalibrated) {
    if (data.calibration_error) throw *data.calibration_error;
    noise = *data.calibrated;
  }
  const SetupConfig& setup = cfg.setup;
  EstimateReport report;
  report.method = spec.method;
  auto phase_report = [&](const PhaseEstimate& est) {
    report.params.phi = est.phi;
    report.diagnostics["clamped"] = est.clamped ? 1.0 : 0.0;
    report.diagnostics["magnitude_only"] = est.magnitude_only ? 1.0 : 0.0;
  };
  switch (spec.method) {
    case EstimatorMethod::kDisplacementOnly: {
      const auto est = est_displacement(data.single_moments, setup, noise);
      report.params.d = est.d;
      report.params.beta = est.beta;
      report.diagnostics["near_zero"] = est.near_zero ? 1.0 : 0.0;
      break;
    }
    case EstimatorMethod::kPhaseVar:
      phase_report(est_phase_var(data.single_moments, setup, noise));
      break;
    case EstimatorMethod::kPhaseMean:
      phase_report(est_phase_mean(data.single_moments, setup));
      break;
    case EstimatorMethod::kPhaseMl: {
      const auto est = est_phase_ml(data.single_stats, setup, noise);
      phase_report(est);
      report.diagnostics["log_likelihood"] = est.log_likelihood;
      report.diagnostics["iterations"] = est.iterations;
      break;
    }
    case EstimatorMethod::kCovMethod:
      report = est_general_cov(pooled(data.probe_moments), setup, noise);
      break;
    case EstimatorMethod::kMeanMethod:
      report = est_general_mean(data.probe_moments[0], data.probe_moments[1],
                                data.probe_moments[2], setup, noise);
      break;
    case EstimatorMethod::kCombined:
      report = combined_estimate(data, setup, noise, cfg.jackknife_blocks);
      break;
  }
  report.naive = spec.channel == ChannelModel::kNaive;
  if (spec.channel == ChannelModel::kCalibrated) {
    report.diagnostics["calibrated_t_c"] = noise.t_c;
    report.diagnostics["calibrated_v_c"] = noise.v_c;
  }
  return report;
}

Outcome summarize_report(const EstimatorSpec& spec, const EstimateReport& report) {
  Outcome out;
  for (const auto& name : spec.parameters()) out.values.push_back(parameter_value(report.params, name));
  const auto it = report.diagnostics.find("clamped");
  out.clamped = it != report.diagnostics.end() && it->second != 0.0;
  return out;
}

struct DataNeeds {
  bool single = false;
  bool probes = false;
  bool calibration = false;
};

DataNeeds needs_of(std::span<const EstimatorSpec> specs) {
  DataNeeds n;
  for (const auto& e : specs) {
    if (uses_probe_triplet(e.method)) {
      n.probes = true;
    } else {
      n.single = true;
    }
    if (e.channel == ChannelModel::kCalibrated) n.calibration = true;
  }
  return n;
}

// States the realizations sample from; they do not depend on the seed.
struct SourceStates {
  GaussianState single;
  std::vector<GaussianState> probes;
  std::vector<GaussianState> calibration;
};

SourceStates source_states(const MonteCarloConfig& cfg) {
  const NoiseParams true_noise = cfg.noise.value_or(NoiseParams::ideal());
  SourceStates s{forward(cfg.setup, cfg.process, cfg.noise), {}, {}};
  for (double phase : kMeanProbePhases) {
    const SetupConfig setup = with_probe_phase(cfg.setup, phase);
    s.probes.push_back(forward(setup, cfg.process, cfg.noise));
    s.calibration.push_back(forward(setup, ProcessParams::identity(), true_noise));
  }
  return s;
}

RealizationData generate(const MonteCarloConfig& cfg, const SourceStates& states,
                         const DataNeeds& needs, std::uint64_t seed) {
  RealizationData data;
  if (needs.single) {
    if (cfg.exact_moments) {
      data.single_moments = exact_moments(states.single);
      data.single_stats = exact_stats(states.single, cfg.plan);
    } else {
      MeasurementPlan plan = cfg.plan;
      plan.seed = stream_seed(seed, kSingleStream);
      data.single = sample(states.single, plan);
      data.single_stats = summarize(*data.single);
      data.single_moments = estimate_moments(data.single_stats);
    }
  }
  if (needs.probes) {
    for (int j = 0; j < 3; ++j) {
      if (cfg.exact_moments) {
        data.probe_moments[j] = exact_moments(states.probes[j]);
      } else {
        data.probes[j] =
            sample(states.probes[j], probe_plan(cfg.plan, j, stream_seed(seed, kProbeStream + j)));
        data.probe_moments[j] = estimate_moments(*data.probes[j]);
      }
    }
  }
  if (needs.calibration) {
    std::array<MomentEstimate, 3> cal;
    for (int j = 0; j < 3; ++j) {
      if (cfg.exact_moments) {
        cal[j] = exact_moments(states.calibration[j]);
      } else {
        const auto plan = probe_plan(cfg.plan, j, stream_seed(seed, kCalibrationStream + j));
        cal[j] = estimate_moments(sample(states.calibration[j], plan));
      }
    }
    try {
      data.calibrated = calibrate_from_moments(cal, cfg.setup).estimate;
    } catch (const Error& e) {
      data.calibration_error = e;
    }
  }
  return data;
}

double truth_value(const ProcessParams& truth, std::string_view name) {
  return parameter_value(truth.folded(), name);
}

double error_of(double estimate, double truth, std::string_view name) {
  if (is_angle_parameter(name)) return angular_difference(estimate, truth);
  return estimate - truth;
}

}  // namespace

EstimatorSpec EstimatorSpec::parse(std::string_view name) {
  EstimatorSpec spec;
  std::string_view rest = name;
  if (strip_prefix(rest, {"naive_", "naive-", "Naive-"})) {
    spec.channel = ChannelModel::kNaive;
  } else if (strip_prefix(rest, {"calibrated_", "calibrated-", "Calibrated-"})) {
    spec.channel = ChannelModel::kCalibrated;
  }
  for (const auto& s : kShortNames) {
    if (s.name == rest) {
      spec.method = s.method;
      return spec;
    }
  }
  try {
    spec.method = parse_method(rest);
  } catch (const Error&) {
    throw Error(ErrorCode::kInvalidArgument, "unknown estimator '" + std::string(name) + "'");
  }
  return spec;
}

std::string EstimatorSpec::name() const {
  std::string out;
  if (channel == ChannelModel::kNaive) out = "naive_";
  if (channel == ChannelModel::kCalibrated) out = "calibrated_";
  for (const auto& s : kShortNames) {
    if (s.method == method) out += s.name;
  }
  return out;
}

std::vector<std::string> EstimatorSpec::parameters() const {
  if (method == EstimatorMethod::kDisplacementOnly) return {"d", "beta"};
  if (is_phase_method(method)) return {"phi"};
  return {kProcessParameterNames.begin(), kProcessParameterNames.end()};
}

void MonteCarloConfig::validate() const {
  setup.validate();
  process.validate();
  if (noise) noise->validate();
  plan.validate();
  if (m_reps < 2) throw Error(ErrorCode::kInvalidArgument, "m_reps must be at least 2");
  if (estimators.empty()) throw Error(ErrorCode::kInvalidArgument, "no estimators listed");
  for (const auto& e : estimators) {
    const bool needs_mean_map =
        uses_probe_triplet(e.method) || e.channel == ChannelModel::kCalibrated;
    if (needs_mean_map && setup.topology == Topology::kSimplistic) {
      throw Error(ErrorCode::kUnsupported,
                  e.name() + " needs probe light at the matter (not simplistic)");
    }
    if (e.method == EstimatorMethod::kCombined && jackknife_blocks < 2) {
      throw Error(ErrorCode::kInvalidArgument, "jackknife_blocks must be at least 2");
    }
  }
}

const MSECell& MSEReport::cell(std::string_view estimator, std::string_view parameter) const {
  for (const auto& c : cells) {
    if (c.estimator == estimator && c.parameter == parameter) return c;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "no cell " + std::string(estimator) + "/" + std::string(parameter));
}

EstimateReport estimate_realization(const MonteCarloConfig& cfg, const EstimatorSpec& spec,
                                    std::uint64_t realization_seed) {
  MonteCarloConfig one = cfg;
  one.estimators = {spec};
  one.m_reps = std::max<std::size_t>(one.m_reps, 2);
  one.validate();
  const std::array<EstimatorSpec, 1> specs{spec};
  const DataNeeds needs = needs_of(specs);
  const RealizationData data = generate(one, source_states(one), needs, realization_seed);
  return run_estimator(spec, data, one);
}

std::uint64_t stream_seed(std::uint64_t realization_seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = realization_seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MeasurementPlan probe_plan(const MeasurementPlan& plan, int probe, std::uint64_t seed) {
  if (probe < 0 || probe > 2) throw Error(ErrorCode::kInvalidArgument, "probe index out of range");
  MeasurementPlan p = plan;
  p.n_samples = plan.n_samples / 3 + (static_cast<std::size_t>(probe) < plan.n_samples % 3 ? 1 : 0);
  p.seed = seed;
  return p;
}

MSEReport run_mc(const MonteCarloConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  const DataNeeds needs = needs_of(cfg.estimators);
  const SourceStates states = source_states(cfg);
  for (int j = 0; j < 3 && needs.probes; ++j) probe_plan(cfg.plan, j, 0).validate();

  const std::size_t n_est = cfg.estimators.size();
  std::vector<std::vector<Outcome>> outcomes(cfg.m_reps, std::vector<Outcome>(n_est));

  auto realize = [&](std::size_t index) {
    const std::uint64_t seed = cfg.base_seed ^ static_cast<std::uint64_t>(index + 1);
    const RealizationData data = generate(cfg, states, needs, seed);
    for (std::size_t e = 0; e < n_est; ++e) {
      try {
        outcomes[index][e] = summarize_report(cfg.estimators[e],
                                              run_estimator(cfg.estimators[e], data, cfg));
      } catch (const Error&) {
        outcomes[index][e] = Outcome{};
      }
    }
  };
  parallel_for(cfg.m_reps, worker_count(cfg.threads, cfg.m_reps), realize);

  MSEReport report;
  report.config = cfg;
  for (std::size_t e = 0; e < n_est; ++e) {
    const auto& spec = cfg.estimators[e];
    const auto params = spec.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      MSECell cell;
      cell.estimator = spec.name();
      cell.parameter = params[p];
      const double truth = truth_value(cfg.process, params[p]);
      std::vector<double> errors;
      errors.reserve(cfg.m_reps);
      for (std::size_t k = 0; k < cfg.m_reps; ++k) {
        const Outcome& o = outcomes[k][e];
        if (o.values.empty()) {
          ++cell.failures;
          continue;
        }
        if (o.clamped) ++cell.clamps;
        errors.push_back(error_of(o.values[p], truth, params[p]));
      }
      cell.n_ok = errors.size();
      if (cell.n_ok > 0) {
        const double n = static_cast<double>(cell.n_ok);
        double sum = 0.0;
        double sum_sq = 0.0;
        for (double x : errors) {
          sum += x;
          sum_sq += x * x;
        }
        cell.mse = sum_sq / n;
        cell.bias = sum / n;
        double var = 0.0;
        double spread = 0.0;
        for (double x : errors) {
          var += (x - cell.bias) * (x - cell.bias);
          spread += (x * x - cell.mse) * (x * x - cell.mse);
        }
        cell.variance = var / n;
        cell.se_mse = n > 1 ? std::sqrt(spread / (n - 1) / n) : 0.0;
      } else {
        cell.mse = cell.bias = cell.variance = std::nan("");
      }
      cell.unreliable = static_cast<double>(cell.failures) > 0.05 * static_cast<double>(cfg.m_reps);
      report.cells.push_back(std::move(cell));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kR:
      return "r";
    case SweepAxis::kV:
      return "V";
    case SweepAxis::kT:
      return "T";
    case SweepAxis::kLoss:
      return "loss";
    case SweepAxis::kPhi:
      return "Phi";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view name) {
  for (auto a : {SweepAxis::kR, SweepAxis::kV, SweepAxis::kT, SweepAxis::kLoss, SweepAxis::kPhi}) {
    const auto canonical = to_string(a);
    const bool same = std::equal(canonical.begin(), canonical.end(), name.begin(), name.end(),
                                 [](char x, char y) { return std::tolower(x) == std::tolower(y); });
    if (same) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sweep axis '" + std::string(name) + "'");
}

MonteCarloConfig apply_axis(const MonteCarloConfig& cfg, SweepAxis axis, double value) {
  MonteCarloConfig out = cfg;
  switch (axis) {
    case SweepAxis::kR:
      out.setup.r_amp = value;
      break;
    case SweepAxis::kV:
      out.setup.v_thermal = value;
      break;
    case SweepAxis::kT:
      out.setup.t1 = value;
      out.setup.t2 = value;
      break;
    case SweepAxis::kLoss: {
      NoiseParams n = cfg.noise.value_or(NoiseParams::ideal());
      n.t_c = 1.0 - value;
      out.noise = n;
      break;
    }
    case SweepAxis::kPhi:
      out.process.phi = value;
      break;
  }
  return out;
}

SweepTable sweep(const MonteCarloConfig& cfg, SweepAxis axis, std::span<const double> grid) {
  SweepTable table;
  table.axis = axis;
  for (double v : grid) table.points.push_back({v, run_mc(apply_axis(cfg, axis, v))});
  return table;
}

namespace {

double parse_double(std::string_view text, std::string_view what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad number '" + std::string(text) + "' in " + std::string(what));
  }
  return v;
}

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
  std::vector<double> out;
  if (spec.empty()) return out;
  const bool log_grid = spec.starts_with("log:");
  if (log_grid || spec.starts_with("lin:")) {
    std::vector<std::string_view> parts;
    std::string_view rest = spec.substr(4);
    for (;;) {
      const auto pos = rest.find(':');
      parts.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (parts.size() != 3) {
      throw Error(ErrorCode::kInvalidArgument, "grid must look like log:lo:hi:n or lin:lo:hi:n");
    }
    const double lo = parse_double(parts[0], "grid");
    const double hi = parse_double(parts[1], "grid");
    const double count = parse_double(parts[2], "grid");
    if (count < 1 || count != std::floor(count)) {
      throw Error(ErrorCode::kInvalidArgument, "grid point count must be a positive integer");
    }
    if (log_grid && (lo <= 0 || hi <= 0)) {
      throw Error(ErrorCode::kInvalidArgument, "log grid bounds must be positive");
    }
    const auto n = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out.push_back(log_grid ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                             : lo + f * (hi - lo));
    }
    if (n > 1) out.back() = hi;
    return out;
  }
  std::string_view rest = spec;
  for (;;) {
    const auto pos = rest.find(',');
    out.push_back(parse_double(rest.substr(0, pos), "grid"));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "power-law fit needs at least two points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "power-law fit needs positive values");
    }
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    const double dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw Error(ErrorCode::kInsufficientData, "power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

std::vector<ExponentFit> fit_exponent(const SweepTable& table, double max_t) {
  if (table.axis != SweepAxis::kT) {
    throw Error(ErrorCode::kInvalidArgument, "exponent fits need a T sweep");
  }
  std::vector<const SweepPoint*> small;
  for (const auto& pt : table.points) {
    if (pt.value <= max_t * (1 + 1e-12)) small.push_back(&pt);
  }
  if (small.size() < 4) {
    throw Error(ErrorCode::kInsufficientData, "exponent fits need four points with T <= max_t");
  }
  std::vector<ExponentFit> fits;
  for (const auto& ref : small.front()->report.cells) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto* pt : small) {
      const auto& c = pt->report.cell(ref.estimator, ref.parameter);
      if (c.n_ok > 0 && c.mse > 0) {
        xs.push_back(pt->value);
        ys.push_back(c.mse);
      }
    }
    ExponentFit f;
    f.estimator = ref.estimator;
    f.parameter = ref.parameter;
    f.points = xs.size();
    if (xs.size() >= 2) {
      const auto pl = fit_power_law(xs, ys);
      f.exponent = -pl.slope;
      f.r2 = pl.r2;
    }
    f.unreliable = xs.size() < 4 || f.r2 < 0.9;
    fits.push_back(std::move(f));
  }
  return fits;
}

RCritResult find_r_crit(const MonteCarloConfig& cfg, double r_min, double r_max,
                        int coarse_points, int bisections) {
  if (!(r_min > 0) || !(r_max > r_min) || coarse_points < 2 || bisections < 0) {
    throw Error(ErrorCode::kInvalidArgument, "find_r_crit needs 0 < r_min < r_max, >= 2 points");
  }
  MonteCarloConfig base = cfg;
  base.estimators = {{EstimatorMethod::kPhaseVar, ChannelModel::kKnown},
                     {EstimatorMethod::kPhaseMean, ChannelModel::kKnown}};
  const auto var_name = base.estimators[0].name();
  const auto mean_name = base.estimators[1].name();
  auto diff = [&](double r) {
    const auto rep = run_mc(apply_axis(base, SweepAxis::kR, r));
    return rep.cell(var_name, "phi").mse - rep.cell(mean_name, "phi").mse;
  };

  RCritResult res;
  for (int i = 0; i < coarse_points; ++i) {
    const double f = static_cast<double>(i) / (coarse_points - 1);
    const double r = std::exp(std::log(r_min) + f * (std::log(r_max) - std::log(r_min)));
    res.coarse_r.push_back(r);
    res.coarse_diff.push_back(diff(r));
  }
  for (int i = 0; i + 1 < coarse_points; ++i) {
    double d_lo = res.coarse_diff[i];
    double d_hi = res.coarse_diff[i + 1];
    if (!(d_lo < 0 && d_hi >= 0)) continue;
    double lo = res.coarse_r[i];
    double hi = res.coarse_r[i + 1];
    for (int b = 0; b < bisections; ++b) {
      const double mid = std::sqrt(lo * hi);
      const double d_mid = diff(mid);
      if (d_mid < 0) {
        lo = mid;
        d_lo = d_mid;
      } else {
        hi = mid;
        d_hi = d_mid;
      }
    }
    res.found = true;
    res.r_lo = lo;
    res.r_hi = hi;
    const double frac = d_hi == d_lo ? 0.5 : -d_lo / (d_hi - d_lo);
    res.r_crit = std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo)));
    return res;
  }
  return res;
}

CalibrationResult calibrate_from_moments(std::span<const MomentEstimate, 3> probes,
                                         const SetupConfig& setup) {
  setup.validate();
  const MeanMap ideal = mean_map(setup, NoiseParams::ideal());
  if (!(setup.r_amp > 0)) {
    throw Error(ErrorCode::kUnidentifiable, "calibration needs a bright probe (r > 0)");
  }
  if (!(ideal.matter_path > 0)) {
    throw Error(ErrorCode::kUnidentifiable, "no light reaches the matter");
  }
  const double r = setup.r_amp;
  const Vec2 k = 0.5 * (probes[0].mean + probes[1].mean);
  Mat2 m;
  m.col(0) = (probes[0].mean - probes[1].mean) / (2 * r);
  m.col(1) = (probes[2].mean - k) / r;
  const double gain = 0.5 * m.trace();
  const double s = (gain - ideal.light_path) / ideal.matter_path;
  CalibrationResult res;
  res.t_c_raw = s * std::abs(s);
  if (res.t_c_raw < -0.1 || res.t_c_raw > 1.1) {
    throw Error(ErrorCode::kCalibrationFailed,
                "estimated transmission " + std::to_string(res.t_c_raw) + " is unphysical");
  }
  const double t_c = std::clamp(res.t_c_raw, 1e-9, 1.0);

  double var_meas = 0.0;
  double shots = 0.0;
  for (const auto& p : probes) {
    var_meas += p.cov.trace() / 6.0;
    shots += static_cast<double>(std::min(p.n_effective[0], p.n_effective[1]));
  }
  const Mat2 model = output_moments(setup, ProcessParams::identity(), {t_c, 1.0}).cov();
  const double var_model = model.trace() / 2.0;
  // One unit of V_C adds T2 (1 - T_C) to the output variance; below the
  // variance's own standard error V_C is not identifiable and stays at 1.
  const double sensitivity = setup.t2 * (1.0 - t_c);
  const double var_se = var_meas / std::sqrt(std::max(shots, 1.0));
  double v_c = 1.0;
  res.v_c_identified = sensitivity > std::max(var_se, 1e-12);
  if (res.v_c_identified) v_c = 1.0 + (var_meas - var_model) / sensitivity;
  res.v_c_raw = v_c;
  res.estimate = {t_c, std::max(v_c, 1.0)};
  return res;
}

CalibrationResult calibrate_from_samples(std::span<const SampleSet, 3> probes,
                                         const SetupConfig& setup, int jackknife_blocks) {
  std::array<MomentEstimate, 3> full;
  for (int j = 0; j < 3; ++j) full[j] = estimate_moments(probes[j]);
  CalibrationResult res = calibrate_from_moments(full, setup);
  if (jackknife_blocks < 2) return res;
  std::array<std::vector<QuadratureStats>, 3> loo;
  for (int j = 0; j < 3; ++j) loo[j] = leave_one_out(block_stats(probes[j], jackknife_blocks));
  // Unclamped replicates; clamping would hide the spread near the bounds.
  std::vector<NoiseParams> reps;
  for (int b = 0; b < jackknife_blocks; ++b) {
    std::array<MomentEstimate, 3> m;
    for (int j = 0; j < 3; ++j) m[j] = estimate_moments(loo[j][b]);
    const auto rep = calibrate_from_moments(m, setup);
    reps.push_back({rep.t_c_raw, rep.v_c_raw});
  }
  double mt = 0, mv = 0;
  for (const auto& n : reps) {
    mt += n.t_c;
    mv += n.v_c;
  }
  const double nb = static_cast<double>(reps.size());
  mt /= nb;
  mv /= nb;
  double st = 0, sv = 0;
  for (const auto& n : reps) {
    st += (n.t_c - mt) * (n.t_c - mt);
    sv += (n.v_c - mv) * (n.v_c - mv);
  }
  res.sd_t_c = std::sqrt((nb - 1) / nb * st);
  res.sd_v_c = std::sqrt((nb - 1) / nb * sv);
  return res;
}

CalibrationResult calibrate(const SetupConfig& setup, const MeasurementPlan& plan,
                            const NoiseParams& true_noise, int jackknife_blocks) {
  setup.validate();
  plan.validate();
  true_noise.validate();
  std::array<SampleSet, 3> data;
  for (int j = 0; j < 3; ++j) {
    const auto state =
        forward(with_probe_phase(setup, kMeanProbePhases[j]), ProcessParams::identity(), true_noise);
    data[j] = sample(state, probe_plan(plan, j, stream_seed(plan.seed, kCalibrationStream + j)));
  }
  return calibrate_from_samples(data, setup, jackknife_blocks);
}

}  // namespace lmi
