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

#include "lmi/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lmi/error.h"
#include "optimize.h"

namespace lmi {
namespace {

constexpr double kAxisUndefinedBelow = 1e-4;

Vec2 probe_vector(double r, double phase) { return {r * std::cos(phase), r * std::sin(phase)}; }

// Polar form of the output mean relative to the probe direction after the
// light-only contribution has been removed.
Vec2 matter_part_in_probe_frame(const MomentEstimate& m, const SetupConfig& setup) {
  const MeanMap map = mean_map(setup);
  const Vec2 residual = m.mean - map.light_path * setup.probe_mean();
  return rotation(-setup.probe_phase) * residual;
}

void flag_axis(EstimateReport& report) {
  if (report.params.w < kAxisUndefinedBelow) {
    report.params.alpha = 0.0;
    report.diagnostics["axis_undefined"] = 1.0;
  } else {
    report.diagnostics["axis_undefined"] = 0.0;
  }
}

ProcessParams with_displacement(ProcessParams p, const Vec2& d_vec) {
  p.d = d_vec.norm();
  p.beta = std::atan2(d_vec(1), d_vec(0));
  return p;
}

}  // namespace

std::string_view to_string(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::kDisplacementOnly:
      return "DisplacementOnly";
    case EstimatorMethod::kPhaseVar:
      return "PhaseVar";
    case EstimatorMethod::kPhaseMean:
      return "PhaseMean";
    case EstimatorMethod::kPhaseMl:
      return "PhaseML";
    case EstimatorMethod::kCovMethod:
      return "CovMethod";
    case EstimatorMethod::kMeanMethod:
      return "MeanMethod";
    case EstimatorMethod::kCombined:
      return "Combined";
  }
  return "unknown";
}

EstimatorMethod parse_method(std::string_view name) {
  for (auto m : {EstimatorMethod::kDisplacementOnly, EstimatorMethod::kPhaseVar,
                 EstimatorMethod::kPhaseMean, EstimatorMethod::kPhaseMl,
                 EstimatorMethod::kCovMethod, EstimatorMethod::kMeanMethod,
                 EstimatorMethod::kCombined}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

std::string EstimateReport::method_name() const {
  std::string base(to_string(method));
  return naive ? "Naive-" + base : base;
}

double UVCoefficients::variance(double phi) const { return u + v * std::cos(phi); }

UVCoefficients phase_uv(const SetupConfig& setup, const NoiseParams& noise) {
  setup.validate();
  noise.validate();
  // With q = 1 every input reaches the output through a*R(phi) + b*I, whose
  // squared norm is a^2 + b^2 + 2ab cos(phi).
  const double t1 = setup.effective_t1();
  const double t2 = setup.t2;
  const double s = std::sqrt(noise.t_c);
  double ap = 0, bp = 0, at = 0, bt = 0;
  switch (setup.topology) {
    case Topology::kInterferometric:
      ap = std::sqrt(t1 * t2) * s;
      bp = std::sqrt((1 - t1) * (1 - t2));
      at = -std::sqrt(t2 * (1 - t1)) * s;
      bt = std::sqrt(t1 * (1 - t2));
      break;
    case Topology::kBlockedBeam:
      ap = std::sqrt(t1 * t2) * s;
      at = -std::sqrt(t2 * (1 - t1)) * s;
      break;
    case Topology::kSimplistic:
      bp = std::sqrt(1 - t2);
      at = std::sqrt(t2) * s;
      break;
  }
  const double vacuum = setup.topology == Topology::kBlockedBeam ? 1 - t2 : 0.0;
  const double bath = noise.v_c * t2 * (1 - noise.t_c);
  const double v_th = setup.v_thermal;
  return {ap * ap + bp * bp + v_th * (at * at + bt * bt) + bath + vacuum,
          2 * ap * bp + 2 * v_th * at * bt};
}

DisplacementEstimate est_displacement(const MomentEstimate& moments, const SetupConfig& setup,
                                      const NoiseParams& noise) {
  const LightResponse resp = light_response(setup, ProcessParams::identity(), noise);
  if (!(resp.displacement_gain > 0)) {
    throw Error(ErrorCode::kUnidentifiable, "displacement gain is zero (T2 = 0)");
  }
  DisplacementEstimate out;
  out.d_vec = (moments.mean - resp.probe * setup.probe_mean()) / resp.displacement_gain;
  out.d = out.d_vec.norm();
  out.beta = std::atan2(out.d_vec(1), out.d_vec(0));
  const double n = static_cast<double>(std::min(moments.n_effective[0], moments.n_effective[1]));
  const double se = n > 0 ? std::sqrt(moments.cov.trace() / 2 / n) / resp.displacement_gain
                          : std::numeric_limits<double>::infinity();
  out.near_zero = out.d < 3 * se;
  return out;
}

PhaseEstimate est_phase_var(const MomentEstimate& moments, const SetupConfig& setup,
                            const NoiseParams& noise) {
  const UVCoefficients uv = phase_uv(setup, noise);
  if (uv.v == 0.0) {
    throw Error(ErrorCode::kUnidentifiable, "output variance does not depend on phi (v = 0)");
  }
  PhaseEstimate out;
  const double arg = ((moments.cov(0, 0) + moments.cov(1, 1)) / 2 - uv.u) / uv.v;
  out.clamped = arg > 1.0 || arg < -1.0;
  out.phi = std::acos(std::clamp(arg, -1.0, 1.0));
  if (setup.r_amp > 0 && setup.topology != Topology::kSimplistic) {
    if (matter_part_in_probe_frame(moments, setup)(1) < 0) out.phi = -out.phi;
  } else {
    out.magnitude_only = true;
  }
  return out;
}

PhaseEstimate est_phase_mean(const MomentEstimate& moments, const SetupConfig& setup) {
  if (!(setup.r_amp > 0)) {
    throw Error(ErrorCode::kUnidentifiable, "mean-based phase estimate needs r > 0");
  }
  const Vec2 v = matter_part_in_probe_frame(moments, setup);
  PhaseEstimate out;
  out.phi = fold_angle(std::atan2(v(1), v(0)));
  return out;
}

double phase_log_likelihood(const QuadratureStats& stats, const SetupConfig& setup,
                            const NoiseParams& noise, double phi) {
  ProcessParams p;
  p.phi = phi;
  const LightResponse resp = light_response(setup, p, noise);
  const Vec2 mu = resp.mean(setup.probe_mean(), Vec2::Zero());
  const Mat2 cov = resp.cov(setup.v_thermal, noise.v_c);
  if (stats.groups.empty()) {
    const auto& pm = stats.pairs;
    const Mat2 measured =
        stats.scheme == MeasurementScheme::kHeterodyne ? Mat2(cov + Mat2::Identity()) : cov;
    const Mat2 inv = measured.inverse();
    const Vec2 delta = pm.mean - mu;
    const double n = static_cast<double>(pm.n);
    return -0.5 * (n * std::log(measured.determinant()) + (inv * pm.scatter).trace() +
                   n * delta.dot(inv * delta));
  }
  double ll = 0.0;
  for (const auto& g : stats.groups) {
    const double c = std::cos(g.angle);
    const double s = std::sin(g.angle);
    const double var = c * c * cov(0, 0) + s * s * cov(1, 1) + 2 * c * s * cov(0, 1);
    const double m = c * mu(0) + s * mu(1);
    const double n = static_cast<double>(g.n);
    ll -= 0.5 * (n * std::log(var) + (g.m2 + n * (g.mean - m) * (g.mean - m)) / var);
  }
  return ll;
}

PhaseEstimate est_phase_ml(const QuadratureStats& stats, const SetupConfig& setup,
                           const NoiseParams& noise) {
  setup.validate();
  noise.validate();
  constexpr int kGrid = 64;
  constexpr int kMaxIter = 200;
  const double step = 2 * kPi / kGrid;
  auto ll = [&](double phi) { return phase_log_likelihood(stats, setup, noise, phi); };

  int best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double v = ll(-kPi + (k + 1) * step);
    if (v > best_ll) {
      best_ll = v;
      best = k;
    }
  }
  const double center = -kPi + (best + 1) * step;
  const auto refined = detail::golden_section_max(ll, center - step, center + step, 1e-11, kMaxIter);
  if (!refined.converged) {
    throw Error(ErrorCode::kEstimationFailed,
                "likelihood refinement did not converge after " + std::to_string(kMaxIter) +
                    " iterations");
  }
  PhaseEstimate out;
  out.iterations = refined.iterations;
  if (refined.value >= best_ll) {
    out.phi = fold_angle(refined.x);
    out.log_likelihood = refined.value;
  } else {
    out.phi = fold_angle(center);
    out.log_likelihood = best_ll;
  }
  return out;
}

PhaseEstimate est_phase_ml(const SampleSet& samples, const SetupConfig& setup,
                           const NoiseParams& noise) {
  return est_phase_ml(summarize(samples), setup, noise);
}

EstimateReport est_general_cov(std::span<const ProbeMoments> probes, const SetupConfig& setup,
                               const NoiseParams& noise, const CovFitOptions& options) {
  setup.validate();
  noise.validate();
  if (probes.empty()) throw Error(ErrorCode::kInvalidArgument, "no probe moments given");

  Mat2 target = Mat2::Zero();
  double weight_sum = 0.0;
  for (const auto& pr : probes) {
    if (!pr.moments.has_cross_covariance) {
      throw Error(ErrorCode::kInsufficientData,
                  "covariance method needs the full covariance (homodyne3, heterodyne or joint)");
    }
    const auto n = pr.moments.n_effective[2];
    const double wgt =
        n == std::numeric_limits<std::size_t>::max() ? 1.0 : static_cast<double>(n);
    target += wgt * pr.moments.cov;
    weight_sum += wgt;
  }
  target /= weight_sum;

  using P3 = detail::Point<3>;
  auto model_cov = [&](const P3& x) {
    ProcessParams p;
    p.phi = x(0);
    p.w = x(1);
    p.alpha = x(2);
    return light_response(setup, p, noise).cov(setup.v_thermal, noise.v_c);
  };
  auto residual = [&](const P3& x) {
    const Mat2 diff = model_cov(x) - target;
    return Eigen::Vector3d(diff(0, 0), std::sqrt(2.0) * diff(0, 1), diff(1, 1));
  };
  auto objective = [&](const P3& x) {
    double f = residual(x).squaredNorm();
    const double excess = std::abs(x(1)) - options.w_cap;
    if (excess > 0) f += 1e6 * excess * excess * (1.0 + target.squaredNorm());
    return f;
  };

  std::vector<P3> seeds;
  if (options.warm_start) {
    seeds.push_back(P3(options.warm_start->phi, options.warm_start->w, options.warm_start->alpha));
  } else {
    std::vector<std::pair<double, P3>> grid;
    constexpr std::array<double, 5> kW = {0.1, 0.4, 0.8, 1.4, 2.2};
    for (int i = 0; i < 12; ++i) {
      for (double w : kW) {
        for (int k = 0; k < 8; ++k) {
          const P3 x(-kPi + (i + 0.5) * 2 * kPi / 12, w, -kPi + (k + 0.5) * 2 * kPi / 8);
          grid.emplace_back(objective(x), x);
        }
      }
    }
    const auto starts = std::min<std::size_t>(std::max(options.starts, 1), grid.size());
    std::partial_sort(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(starts), grid.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < starts; ++i) seeds.push_back(grid[i].second);
  }

  const P3 step = options.warm_start ? P3(0.02, 0.02, 0.05) : P3(0.2, 0.2, 0.4);
  struct Candidate {
    ProcessParams params;
    double f;
  };
  std::vector<Candidate> candidates;
  int evals = 0;
  for (const auto& s : seeds) {
    const auto res = detail::nelder_mead<3>(objective, s, step, 1e-10, 0.0, 2000);
    evals += res.evaluations;
    const P3 x = detail::levenberg_marquardt<3, 3>(residual, res.x, 30);
    const double f = objective(x);
    if (!std::isfinite(f)) continue;
    ProcessParams p;
    p.phi = x(0);
    p.w = x(1);
    p.alpha = x(2);
    p = p.folded();
    bool duplicate = false;
    for (auto& c : candidates) {
      if (std::abs(angular_difference(c.params.phi, p.phi)) < 1e-4 &&
          std::abs(c.params.w - p.w) < 1e-4 &&
          (p.w < 1e-4 || std::abs(angular_difference(c.params.alpha, p.alpha)) < 1e-4)) {
        if (f < c.f) c = {p, f};
        duplicate = true;
        break;
      }
    }
    if (!duplicate) candidates.push_back({p, f});
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kEstimationFailed, "covariance fit produced a non-finite objective");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.f < b.f; });

  // Displacement from what a fitted linear part cannot explain, one estimate
  // per probe.
  auto probe_displacements = [&](const ProcessParams& fit) {
    const LightResponse resp = light_response(setup, fit, noise);
    if (!(resp.displacement_gain > 0)) {
      throw Error(ErrorCode::kUnidentifiable, "displacement gain is zero (T2 = 0)");
    }
    std::vector<Vec2> d;
    for (const auto& pr : probes) {
      d.push_back((pr.moments.mean - resp.probe * probe_vector(setup.r_amp, pr.probe_phase)) /
                  resp.displacement_gain);
    }
    return d;
  };
  auto spread = [](const std::vector<Vec2>& d) {
    Vec2 mean = Vec2::Zero();
    for (const auto& v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double s = 0.0;
    for (const auto& v : d) s += (v - mean).squaredNorm();
    return s;
  };

  // The covariance alone admits several exact branches. With more than one
  // probe the true branch is the one whose probes agree on the displacement.
  const double scale = target.norm();
  const double best_rel = std::sqrt(candidates.front().f) / scale;
  std::size_t admissible = 0;
  std::size_t chosen = 0;
  double chosen_spread = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (std::sqrt(candidates[i].f) / scale > best_rel + options.branch_tolerance) continue;
    ++admissible;
    if (probes.size() < 2) continue;
    const double s = spread(probe_displacements(candidates[i].params));
    if (s < chosen_spread) {
      chosen_spread = s;
      chosen = i;
    }
  }
  const ProcessParams fit = candidates[chosen].params;
  const double best_f = candidates[chosen].f;

  EstimateReport report;
  report.method = EstimatorMethod::kCovMethod;
  report.naive = false;
  report.diagnostics["branches"] = static_cast<double>(admissible);
  report.diagnostics["ambiguous"] = probes.size() < 2 && admissible > 1 ? 1.0 : 0.0;

  const double rel = std::sqrt(best_f) / target.norm();
  report.diagnostics["relative_residual"] = rel;
  report.diagnostics["objective_evals"] = evals;
  report.diagnostics["starts"] = static_cast<double>(seeds.size());
  if (rel > options.max_relative_residual) {
    throw Error(ErrorCode::kFitRejected, "covariance model residual " + std::to_string(rel) +
                                             " exceeds " +
                                             std::to_string(options.max_relative_residual));
  }

  Vec2 d_vec = Vec2::Zero();
  for (const auto& d : probe_displacements(fit)) d_vec += d;
  d_vec /= static_cast<double>(probes.size());
  report.params = with_displacement(fit, d_vec).folded();
  flag_axis(report);
  return report;
}

EstimateReport est_general_cov(const MomentEstimate& moments, const SetupConfig& setup,
                               const NoiseParams& noise, const CovFitOptions& options) {
  const ProbeMoments probe{moments, setup.probe_phase};
  return est_general_cov(std::span<const ProbeMoments>(&probe, 1), setup, noise, options);
}

EstimateReport est_general_mean(const MomentEstimate& probe_0, const MomentEstimate& probe_pi,
                                const MomentEstimate& probe_half_pi, const SetupConfig& setup,
                                const NoiseParams& noise) {
  setup.validate();
  noise.validate();
  const double r = setup.r_amp;
  if (!(r > 0)) throw Error(ErrorCode::kUnidentifiable, "mean method needs r > 0");
  const MeanMap map = mean_map(setup, noise);
  if (!(map.matter_path > 0)) {
    throw Error(ErrorCode::kUnidentifiable, "no probe light reaches the matter (T1 T2 = 0)");
  }
  // Opposite probes cancel the linear response in their average.
  const Vec2 offset = 0.5 * (probe_0.mean + probe_pi.mean);
  Mat2 m_lin;
  m_lin.col(0) = (probe_0.mean - probe_pi.mean) / (2 * r);
  m_lin.col(1) = (probe_half_pi.mean - offset) / r;
  const Mat2 b = (m_lin - map.light_path * Mat2::Identity()) / map.matter_path;

  const PolarDecomposition pd = polar_decompose_2x2(b);
  EstimateReport report;
  report.method = EstimatorMethod::kMeanMethod;
  ProcessParams p;
  p.phi = pd.phi;
  p.w = pd.w;
  p.alpha = pd.alpha;
  report.params = with_displacement(p, offset / map.displacement_gain).folded();
  report.diagnostics["det_b"] = b.determinant();
  flag_axis(report);
  return report;
}

bool is_angle_parameter(std::string_view name) {
  return name == "phi" || name == "alpha" || name == "beta";
}

double parameter_value(const ProcessParams& p, std::string_view name) {
  if (name == "phi") return p.phi;
  if (name == "q") return p.q();
  if (name == "w") return p.w;
  if (name == "alpha") return p.alpha;
  if (name == "d") return p.d;
  if (name == "beta") return p.beta;
  throw Error(ErrorCode::kInvalidArgument, "unknown parameter '" + std::string(name) + "'");
}

void add_jackknife_variances(EstimateReport& report, std::span<const ProcessParams> replicates) {
  const auto b = static_cast<double>(replicates.size());
  if (replicates.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "jackknife needs at least 2 replicates");
  }
  for (auto name : kProcessParameterNames) {
    const double center = parameter_value(report.params, name);
    std::vector<double> dev;
    dev.reserve(replicates.size());
    for (const auto& rep : replicates) {
      const double x = parameter_value(rep, name);
      dev.push_back(is_angle_parameter(name) ? angular_difference(x, center) : x - center);
    }
    const double mean = std::accumulate(dev.begin(), dev.end(), 0.0) / b;
    double ss = 0.0;
    for (double v : dev) ss += (v - mean) * (v - mean);
    report.diagnostics["var_" + std::string(name)] = (b - 1) / b * ss;
  }
}

EstimateReport est_combined(const EstimateReport& report_i, const EstimateReport& report_ii) {
  EstimateReport out;
  out.method = EstimatorMethod::kCombined;
  out.naive = report_i.naive || report_ii.naive;
  std::map<std::string, double> value;
  bool inconsistent = false;
  for (auto name_view : kProcessParameterNames) {
    const std::string name(name_view);
    const std::string key = "var_" + name;
    const auto v1_it = report_i.diagnostics.find(key);
    const auto v2_it = report_ii.diagnostics.find(key);
    if (v1_it == report_i.diagnostics.end() || v2_it == report_ii.diagnostics.end()) {
      throw Error(ErrorCode::kInvalidArgument, "report lacks jackknife variance " + key);
    }
    const double v1 = v1_it->second;
    const double v2 = v2_it->second;
    const double x1 = parameter_value(report_i.params, name);
    const double x2 = parameter_value(report_ii.params, name);
    const double delta = is_angle_parameter(name) ? angular_difference(x2, x1) : x2 - x1;
    const double total = v1 + v2;
    // Weight of the second report.
    const double w2 = total > 0 ? v1 / total : 0.5;
    value[name] = x1 + w2 * delta;
    double z = 0.0;
    if (total > 0) {
      z = std::abs(delta) / std::sqrt(total);
    } else if (std::abs(delta) > 1e-9 * (1.0 + std::abs(x1))) {
      z = std::numeric_limits<double>::infinity();
    }
    out.diagnostics["z_" + name] = z;
    out.diagnostics[key] = total > 0 ? v1 * v2 / total : 0.0;
    inconsistent = inconsistent || z > 5;
  }
  out.diagnostics["inconsistent"] = inconsistent ? 1.0 : 0.0;
  ProcessParams p;
  p.phi = value["phi"];
  p.w = std::log(std::max(value["q"], 1.0));
  p.alpha = value["alpha"];
  p.d = value["d"];
  p.beta = value["beta"];
  out.params = p.folded();
  flag_axis(out);
  return out;
}

}  // namespace lmi
