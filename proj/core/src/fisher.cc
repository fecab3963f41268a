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

#include "lmi/fisher.h"

#include <cmath>
#include <string>

#include "lmi/error.h"

namespace lmi {
namespace {

ProcessParams shifted(ProcessParams p, std::string_view name, double delta) {
  if (name == "phi") {
    p.phi += delta;
  } else if (name == "w") {
    p.w += delta;
  } else if (name == "q") {
    p.w = std::log(p.q() + delta);
  } else if (name == "alpha") {
    p.alpha += delta;
  } else if (name == "d") {
    p.d += delta;
  } else if (name == "beta") {
    p.beta += delta;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter '" + std::string(name) + "'");
  }
  return p;
}

struct Terms {
  double mean = 0.0;
  double cov = 0.0;
  double total() const { return mean + cov; }
};

Terms gaussian_information(const Vec2& dmu, const Mat2& cov, const Mat2& dcov) {
  const Mat2 inv = cov.inverse();
  const Mat2 a = inv * dcov;
  return {dmu.dot(inv * dmu), 0.5 * (a * a).trace()};
}

Terms information_at(const SetupConfig& setup, const ProcessParams& process,
                     const NoiseParams& noise, std::string_view parameter, double h,
                     MeasurementScheme scheme) {
  const GaussianState plus = forward(setup, shifted(process, parameter, h), noise);
  const GaussianState minus = forward(setup, shifted(process, parameter, -h), noise);
  const GaussianState mid = forward(setup, process, noise);
  const Vec2 dmu = (plus.mean() - minus.mean()) / (2 * h);
  const Mat2 dcov = (plus.cov() - minus.cov()) / (2 * h);
  const Mat2 cov = mid.cov();

  switch (scheme) {
    case MeasurementScheme::kJoint:
      return gaussian_information(dmu, cov, dcov);
    case MeasurementScheme::kHeterodyne:
      return gaussian_information(dmu, cov + Mat2::Identity(), dcov);
    default:
      break;
  }
  // Homodyne: shot-weighted average of the one-dimensional informations.
  MeasurementPlan plan{scheme, 6, 0};
  const auto angles = plan.angles();
  Terms t;
  for (double theta : angles) {
    const Vec2 u(std::cos(theta), std::sin(theta));
    const double var = u.dot(cov * u);
    const double dm = u.dot(dmu);
    const double dv = u.dot(dcov * u);
    t.mean += dm * dm / var / static_cast<double>(angles.size());
    t.cov += 0.5 * (dv / var) * (dv / var) / static_cast<double>(angles.size());
  }
  return t;
}

}  // namespace

std::string_view to_string(FisherMethod method) {
  switch (method) {
    case FisherMethod::kAnalyticSimplistic:
      return "analytic_simplistic";
    case FisherMethod::kAnalyticBlocked:
      return "analytic_blocked";
    case FisherMethod::kAnalyticInterferometric:
      return "analytic_interferometric";
    case FisherMethod::kNumericGaussian:
      return "numeric_gaussian";
  }
  return "unknown";
}

FisherResult fisher_displacement(const SetupConfig& setup) {
  setup.validate();
  const double t1 = setup.t1;
  const double t2 = setup.t2;
  const double v = setup.v_thermal;
  FisherResult out;
  out.parameter = "d";
  switch (setup.topology) {
    case Topology::kSimplistic:
      out.method = FisherMethod::kAnalyticSimplistic;
      out.value = t2 / (1 + t2 * (v - 1));
      return out;
    case Topology::kBlockedBeam:
      out.method = FisherMethod::kAnalyticBlocked;
      out.value = t2 / (1 - t2 + t2 * ((1 - t1) * v + t1));
      return out;
    case Topology::kInterferometric:
      if (t1 == t2) {
        out.method = FisherMethod::kAnalyticInterferometric;
        out.value = t2;
        return out;
      }
      break;
  }
  // Information on d does not depend on d or beta for a displacement-only
  // process, so any representative point will do.
  return fisher_numeric(setup, ProcessParams{0.0, 0.0, 0.0, 1.0, 0.0}, NoiseParams::ideal(), "d");
}

FisherResult fisher_numeric(const SetupConfig& setup, const ProcessParams& process,
                            const NoiseParams& noise, std::string_view parameter, double step,
                            MeasurementScheme scheme) {
  if (!(step > 0)) throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be > 0");
  const Terms coarse = information_at(setup, process, noise, parameter, step, scheme);
  const Terms fine = information_at(setup, process, noise, parameter, step / 2, scheme);
  const double a = coarse.total();
  const double b = fine.total();
  if (std::abs(a - b) > 1e-3 * std::max(std::abs(a), std::abs(b)) + 1e-12) {
    throw Error(ErrorCode::kNumericFailure, "finite differences disagree for " +
                                                std::string(parameter) + ": " +
                                                std::to_string(a) + " at step vs " +
                                                std::to_string(b) + " at step/2");
  }
  FisherResult out;
  out.parameter = std::string(parameter);
  out.method = FisherMethod::kNumericGaussian;
  out.mean_term = coarse.mean;
  out.cov_term = coarse.cov;
  out.value = a;
  return out;
}

double crb(const FisherResult& fi, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample count must be positive");
  if (!(fi.value > 0)) {
    throw Error(ErrorCode::kUnidentifiable, fi.parameter + " carries no information at this point");
  }
  return 1.0 / (static_cast<double>(n) * fi.value);
}

CrossingReport compare_blocked_vs_interferometric(const SetupConfig& setup,
                                                  std::span<const double> phi_grid) {
  SetupConfig interf = setup;
  interf.topology = Topology::kInterferometric;
  SetupConfig blocked = setup;
  blocked.topology = Topology::kBlockedBeam;
  CrossingReport out;
  for (double phi : phi_grid) {
    ProcessParams p;
    p.phi = phi;
    out.phi.push_back(phi);
    out.interferometric.push_back(fisher_numeric(interf, p, {}, "phi").value);
    out.blocked.push_back(fisher_numeric(blocked, p, {}, "phi").value);
  }
  for (std::size_t i = 1; i < out.phi.size(); ++i) {
    const double a = out.interferometric[i - 1] - out.blocked[i - 1];
    const double b = out.interferometric[i] - out.blocked[i];
    if (a == 0.0) {
      out.crossings.push_back(out.phi[i - 1]);
    } else if ((a < 0) != (b < 0) && b != 0.0) {
      out.crossings.push_back(out.phi[i - 1] + (out.phi[i] - out.phi[i - 1]) * a / (a - b));
    }
  }
  if (!out.phi.empty()) {
    const std::size_t last = out.phi.size() - 1;
    if (out.interferometric[last] == out.blocked[last]) out.crossings.push_back(out.phi[last]);
  }
  return out;
}

}  // namespace lmi
