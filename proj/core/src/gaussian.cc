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

#include "lmi/gaussian.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmi/error.h"

namespace lmi {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

bool is_symmetric(const PhaseMatrix& m, double rel_tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Row/column indices of mode k's quadratures.
PhaseMatrix embed(const PhaseMatrix& local, int n_modes, std::initializer_list<int> modes) {
  PhaseMatrix out = PhaseMatrix::Identity(2 * n_modes, 2 * n_modes);
  const std::vector<int> m(modes);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      out.block<2, 2>(2 * m[i], 2 * m[j]) = local.block<2, 2>(2 * i, 2 * j);
    }
  }
  return out;
}

PhaseVector embed(const PhaseVector& local, int n_modes, std::initializer_list<int> modes) {
  PhaseVector out = PhaseVector::Zero(2 * n_modes);
  int i = 0;
  for (int k : modes) {
    out.segment<2>(2 * k) = local.segment<2>(2 * i);
    ++i;
  }
  return out;
}

}  // namespace

double fold_angle(double angle) {
  double a = std::remainder(angle, 2 * kPi);
  if (a <= -kPi) a += 2 * kPi;
  return a;
}

double angular_difference(double a, double b) { return fold_angle(a - b); }

Mat2 rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Mat2 squeezer(double w, double alpha) {
  const Mat2 axis = rotation(alpha / 2);
  return axis * Eigen::Vector2d(std::exp(w), std::exp(-w)).asDiagonal() * axis.transpose();
}

PhaseMatrix symplectic_form(int n_modes) {
  PhaseMatrix omega = PhaseMatrix::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

GaussianState::GaussianState(PhaseVector mean, PhaseMatrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto n = mean_.size();
  require(n == 2 || n == 4, "state must have one or two modes");
  require(cov_.rows() == n && cov_.cols() == n, "covariance shape does not match mean");
  require(mean_.allFinite() && cov_.allFinite(), "state moments must be finite");
  require(is_symmetric(cov_, 1e-12), "covariance must be symmetric");
}

Vec2 GaussianState::mode_mean(int mode) const {
  require(mode >= 0 && mode < n_modes(), "mode index out of range");
  return mean_.segment<2>(2 * mode);
}

Mat2 GaussianState::mode_cov(int mode) const {
  require(mode >= 0 && mode < n_modes(), "mode index out of range");
  return cov_.block<2, 2>(2 * mode, 2 * mode);
}

GaussianState GaussianState::marginal(int mode) const {
  return GaussianState(mode_mean(mode), mode_cov(mode));
}

std::vector<double> GaussianState::symplectic_eigenvalues() const {
  if (n_modes() == 1) return {symplectic_eigenvalue(cov_)};
  // Two modes: nu_{+-}^2 = (Delta +- sqrt(Delta^2 - 4 det Sigma)) / 2 with
  // Delta = det A + det B + 2 det C.
  const Mat2 a = cov_.block<2, 2>(0, 0);
  const Mat2 b = cov_.block<2, 2>(2, 2);
  const Mat2 c = cov_.block<2, 2>(0, 2);
  const double delta = a.determinant() + b.determinant() + 2 * c.determinant();
  const double det = cov_.determinant();
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4 * det));
  const double lo = std::sqrt(std::max(0.0, (delta - disc) / 2));
  const double hi = std::sqrt(std::max(0.0, (delta + disc) / 2));
  return {lo, hi};
}

bool GaussianState::is_physical(double tol) const {
  const auto nu = symplectic_eigenvalues();
  return std::all_of(nu.begin(), nu.end(), [tol](double v) { return v >= 1.0 - tol; });
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  require(a.n_modes() == 1 && b.n_modes() == 1, "tensor expects two single-mode states");
  PhaseVector mean(4);
  mean << a.mean(), b.mean();
  PhaseMatrix cov = PhaseMatrix::Zero(4, 4);
  cov.block<2, 2>(0, 0) = a.cov();
  cov.block<2, 2>(2, 2) = b.cov();
  return GaussianState(mean, cov);
}

bool SymplecticOp::is_symplectic(double tol) const {
  const PhaseMatrix omega = symplectic_form(n_modes());
  return (matrix.transpose() * omega * matrix - omega).cwiseAbs().maxCoeff() <= tol;
}

GaussianState SymplecticOp::apply(const GaussianState& state) const {
  require(state.n_modes() == n_modes(), "op and state mode counts differ");
  PhaseMatrix cov = matrix * state.cov() * matrix.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return GaussianState(matrix * state.mean() + displacement, cov);
}

GaussianState apply_to_mode(const SymplecticOp& op, const GaussianState& state, int mode) {
  require(op.n_modes() == 1, "apply_to_mode expects a single-mode op");
  require(mode >= 0 && mode < state.n_modes(), "mode index out of range");
  const int n = state.n_modes();
  SymplecticOp full{embed(op.matrix, n, {mode}), embed(op.displacement, n, {mode})};
  return full.apply(state);
}

GaussianState apply_to_modes(const SymplecticOp& op, const GaussianState& state, int first,
                             int second) {
  require(op.n_modes() == 2 && state.n_modes() == 2, "apply_to_modes expects two modes");
  require(first != second && first >= 0 && first < 2 && second >= 0 && second < 2,
          "invalid mode pair");
  SymplecticOp full{embed(op.matrix, 2, {first, second}),
                    embed(op.displacement, 2, {first, second})};
  return full.apply(state);
}

double ProcessParams::q() const { return std::exp(w); }

Vec2 ProcessParams::displacement() const { return {d * std::cos(beta), d * std::sin(beta)}; }

ProcessParams ProcessParams::from_q(double phi, double q, double alpha, double d, double beta) {
  require(q > 0, "squeezing magnitude q must be positive");
  return {phi, std::log(q), alpha, d, beta};
}

ProcessParams ProcessParams::folded() const {
  ProcessParams p = *this;
  if (p.w < 0) {
    // Sq(-w, alpha) = Sq(w, alpha + pi).
    p.w = -p.w;
    p.alpha += kPi;
  }
  if (p.d < 0) {
    p.d = -p.d;
    p.beta += kPi;
  }
  p.phi = fold_angle(p.phi);
  p.alpha = fold_angle(p.alpha);
  p.beta = fold_angle(p.beta);
  return p;
}

void ProcessParams::validate() const {
  require(std::isfinite(phi) && std::isfinite(w) && std::isfinite(alpha) && std::isfinite(d) &&
              std::isfinite(beta),
          "process parameters must be finite");
  require(w >= 0, "squeezing exponent w must be >= 0");
  require(d >= 0, "displacement magnitude d must be >= 0");
}

GaussianState make_vacuum() { return make_coherent(0.0, 0.0); }

GaussianState make_thermal(double variance) {
  require(std::isfinite(variance) && variance >= 1.0,
          "thermal variance must be >= 1 (vacuum units)");
  return GaussianState(PhaseVector::Zero(2), variance * PhaseMatrix::Identity(2, 2));
}

GaussianState make_coherent(double amplitude, double phase) {
  require(std::isfinite(amplitude) && amplitude >= 0, "coherent amplitude must be >= 0");
  require(std::isfinite(phase), "coherent phase must be finite");
  PhaseVector mean(2);
  mean << amplitude * std::cos(phase), amplitude * std::sin(phase);
  return GaussianState(mean, PhaseMatrix::Identity(2, 2));
}

SymplecticOp bs_symplectic(double transmittance) {
  require(transmittance >= 0 && transmittance <= 1, "transmittance must lie in [0, 1]");
  const double t = std::sqrt(transmittance);
  const double s = std::sqrt(1 - transmittance);
  PhaseMatrix m = PhaseMatrix::Zero(4, 4);
  for (int quad = 0; quad < 2; ++quad) {
    m(quad, quad) = t;
    m(quad, 2 + quad) = s;
    m(2 + quad, quad) = -s;
    m(2 + quad, 2 + quad) = t;
  }
  return {m, PhaseVector::Zero(4)};
}

SymplecticOp process_symplectic(const ProcessParams& process) {
  const Mat2 m = rotation(process.phi) * squeezer(process.w, process.alpha);
  return {m, process.displacement()};
}

GaussianState loss_channel(const GaussianState& state, int mode, double t_c, double v_c) {
  require(t_c > 0 && t_c <= 1, "loss transmittance T_C must lie in (0, 1]");
  require(std::isfinite(v_c) && v_c >= 1, "bath variance V_C must be >= 1");
  require(mode >= 0 && mode < state.n_modes(), "mode index out of range");
  const int n = state.n_modes();
  PhaseVector scale = PhaseVector::Ones(2 * n);
  scale.segment<2>(2 * mode).setConstant(std::sqrt(t_c));
  PhaseVector mean = scale.cwiseProduct(state.mean());
  PhaseMatrix cov = scale.asDiagonal() * state.cov() * scale.asDiagonal();
  cov.block<2, 2>(2 * mode, 2 * mode) += (1 - t_c) * v_c * Mat2::Identity();
  return GaussianState(mean, cov);
}

double symplectic_eigenvalue(const Mat2& cov) { return std::sqrt(std::max(0.0, cov.determinant())); }

Mat2 repair_physicality(const Mat2& cov) {
  require(cov.allFinite(), "covariance must be finite");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  require(std::abs(cov(0, 1) - cov(1, 0)) <= 1e-12 * scale, "covariance must be symmetric");
  require(cov(0, 0) > 0 && cov.determinant() > 0, "covariance must be positive definite");
  const double nu = symplectic_eigenvalue(cov);
  if (nu >= 1.0) return cov;
  // For eigenvalues a, b > 0 and c = 1 - sqrt(ab) > 0,
  // (a + c)(b + c) >= (sqrt(ab) + c)^2 = 1.
  return cov + (1.0 - nu) * Mat2::Identity();
}

PolarDecomposition polar_decompose_2x2(const Mat2& b, double axis_tol) {
  if (!b.allFinite() || !(b.determinant() > 0)) {
    throw Error(ErrorCode::kDecompositionFailed,
                "linear response has non-positive determinant; moment estimates are corrupt");
  }
  PolarDecomposition out;
  // Rotation factor of the polar form B = R S.
  out.phi = std::atan2(b(1, 0) - b(0, 1), b(0, 0) + b(1, 1));
  const Mat2 s = rotation(-out.phi) * b;
  const double half_diff = (s(0, 0) - s(1, 1)) / 2;
  const double off = (s(0, 1) + s(1, 0)) / 2;
  const double largest = (s(0, 0) + s(1, 1)) / 2 + std::hypot(half_diff, off);
  out.w = std::log(largest);
  if (!(out.w > axis_tol)) {
    out.w = 0.0;
    out.alpha = 0.0;
    out.axis_undefined = true;
  } else {
    out.alpha = std::atan2(2 * off, 2 * half_diff);
  }
  out.phi = fold_angle(out.phi);
  return out;
}

}  // namespace lmi
