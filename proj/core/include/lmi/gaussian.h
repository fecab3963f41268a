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

#ifndef LMI_GAUSSIAN_H_
#define LMI_GAUSSIAN_H_

#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace lmi {

// Phase-space quantities for at most two modes. Quadratures are ordered
// (x1, p1, x2, p2) and normalized so that vacuum has unit variance.
using PhaseVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using PhaseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
double fold_angle(double angle);

/// Shortest signed distance a - b on the circle, in (-pi, pi].
double angular_difference(double a, double b);

/// Counter-clockwise rotation [[cos, -sin], [sin, cos]].
Mat2 rotation(double angle);

/// Squeezer with gain e^w along the axis at angle alpha/2.
Mat2 squeezer(double w, double alpha);

/// Standard symplectic form for `n_modes` modes, 2x2 blocks [[0,1],[-1,0]].
PhaseMatrix symplectic_form(int n_modes);

/// Mean vector and covariance matrix of a one- or two-mode Gaussian state.
///
/// The constructor checks shapes and symmetry but not physicality: empirical
/// moment estimates are allowed to violate the uncertainty relation until
/// they are repaired. States produced by the make_* constructors and the
/// channels below are always physical.
class GaussianState {
 public:
  GaussianState(PhaseVector mean, PhaseMatrix cov);

  int n_modes() const { return static_cast<int>(mean_.size() / 2); }
  const PhaseVector& mean() const { return mean_; }
  const PhaseMatrix& cov() const { return cov_; }

  Vec2 mode_mean(int mode) const;
  Mat2 mode_cov(int mode) const;

  /// Reduced state of a single mode.
  GaussianState marginal(int mode) const;

  /// Symplectic eigenvalues in ascending order (one per mode).
  std::vector<double> symplectic_eigenvalues() const;

  bool is_physical(double tol = 1e-9) const;

 private:
  PhaseVector mean_;
  PhaseMatrix cov_;
};

/// Product state of two single-mode states; `a` becomes mode 0.
GaussianState tensor(const GaussianState& a, const GaussianState& b);

/// Affine symplectic map m -> S m + d, Sigma -> S Sigma S^T.
struct SymplecticOp {
  PhaseMatrix matrix;
  PhaseVector displacement;

  int n_modes() const { return static_cast<int>(matrix.rows() / 2); }
  bool is_symplectic(double tol = 1e-10) const;
  GaussianState apply(const GaussianState& state) const;
};

/// Applies a single-mode op to `mode` of a (possibly two-mode) state.
GaussianState apply_to_mode(const SymplecticOp& op, const GaussianState& state, int mode);

/// Applies a two-mode op with `first` playing the role of in1 and `second`
/// the role of in2. Outputs are written back in the same slots.
GaussianState apply_to_modes(const SymplecticOp& op, const GaussianState& state, int first,
                             int second);

/// Unknown Gaussian process on the matter mode: squeeze, then rotate, then
/// displace.
struct ProcessParams {
  double phi = 0.0;    // phase shift
  double w = 0.0;      // squeezing exponent, q = e^w
  double alpha = 0.0;  // squeeze direction (axis at alpha/2)
  double d = 0.0;      // displacement magnitude
  double beta = 0.0;   // displacement direction

  double q() const;
  Vec2 displacement() const;

  static ProcessParams from_q(double phi, double q, double alpha, double d, double beta);
  static ProcessParams identity() { return {}; }

  /// Canonical representative: w >= 0, d >= 0 and all angles in (-pi, pi].
  ProcessParams folded() const;

  /// Throws kInvalidArgument for non-finite fields, w < 0 or d < 0.
  void validate() const;

  bool operator==(const ProcessParams&) const = default;
};

GaussianState make_vacuum();

/// Thermal state with covariance V*I. Throws kInvalidArgument if V < 1.
GaussianState make_thermal(double variance);

/// Coherent state with mean (r cos phase, r sin phase) and unit covariance.
GaussianState make_coherent(double amplitude, double phase);

/// Two-mode beam splitter with transmittance T:
///   out1 =  sqrt(T) in1 + sqrt(1-T) in2
///   out2 = -sqrt(1-T) in1 + sqrt(T) in2
/// acting identically on the x and p quadratures.
SymplecticOp bs_symplectic(double transmittance);

/// Single-mode op R(phi) Sq(w, alpha) followed by the displacement d e^{i beta}.
SymplecticOp process_symplectic(const ProcessParams& process);

/// Lossy thermal channel on one mode: m -> sqrt(T_C) m,
/// Sigma -> T_C Sigma + (1 - T_C) V_C I, cross terms scaled by sqrt(T_C).
GaussianState loss_channel(const GaussianState& state, int mode, double t_c, double v_c);

/// sqrt(det) of a 2x2 covariance; the single-mode symplectic eigenvalue.
double symplectic_eigenvalue(const Mat2& cov);

/// Maps a symmetric positive-definite 2x2 covariance onto a physical one by
/// isotropic inflation Sigma + (1 - nu) I when nu = sqrt(det Sigma) < 1.
/// Throws kInvalidArgument for non-symmetric or non-positive-definite input.
Mat2 repair_physicality(const Mat2& cov);

struct PolarDecomposition {
  double phi = 0.0;
  double w = 0.0;
  double alpha = 0.0;
  bool axis_undefined = false;  // w below the resolution limit; alpha set to 0
};

/// Inverts B = R(phi) Sq(w, alpha) via the polar factorization B = R S with
/// S = (B^T B)^{1/2}. When det B != 1 (noisy estimates) w is the log of the
/// largest singular value. Throws kDecompositionFailed if det B <= 0.
PolarDecomposition polar_decompose_2x2(const Mat2& b, double axis_tol = 1e-9);

}  // namespace lmi

#endif  // LMI_GAUSSIAN_H_
