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

// Small derivative-free optimizers shared by the estimators. Internal.

#ifndef LMI_SRC_OPTIMIZE_H_
#define LMI_SRC_OPTIMIZE_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace lmi::detail {

template <int N>
using Point = Eigen::Matrix<double, N, 1>;

template <int N>
struct SimplexResult {
  Point<N> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
template <int N, class F>
SimplexResult<N> nelder_mead(F&& f, const Point<N>& start, const Point<N>& step, double x_tol,
                             double f_tol, int max_evals) {
  std::array<Point<N>, N + 1> pts;
  std::array<double, N + 1> vals;
  pts[0] = start;
  for (int i = 0; i < N; ++i) {
    pts[i + 1] = start;
    pts[i + 1](i) += step(i);
  }
  int evals = 0;
  auto eval = [&](const Point<N>& x) {
    ++evals;
    return f(x);
  };
  for (int i = 0; i <= N; ++i) vals[i] = eval(pts[i]);

  std::array<int, N + 1> order;
  bool converged = false;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0];
    const int worst = order[N];
    const int second = order[N - 1];

    double diameter = 0.0;
    for (int i = 0; i <= N; ++i) {
      diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    }
    if (diameter <= x_tol || vals[worst] - vals[best] <= f_tol) {
      converged = true;
      break;
    }

    Point<N> centroid = Point<N>::Zero();
    for (int i = 0; i <= N; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= N;

    const Point<N> reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const Point<N> expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Point<N> contracted = outside ? Point<N>(centroid + 0.5 * (reflected - centroid))
                                        : Point<N>(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (int i = 0; i <= N; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(it - vals.begin());
  return {pts[idx], *it, evals, converged};
}

struct LineResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Golden-section search for a maximum of `f` on [lo, hi].
template <class F>
LineResult golden_section_max(F&& f, double lo, double hi, double tol, int max_iter) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > tol && it < max_iter) {
    ++it;
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it, b - a <= tol};
}

/// Levenberg-Marquardt on a residual vector with a central-difference
/// Jacobian. Returns the refined point; never increases the squared norm.
template <int N, int M, class F>
Point<N> levenberg_marquardt(F&& residual, Point<N> x, int max_iter, double h = 1e-7) {
  using Res = Eigen::Matrix<double, M, 1>;
  using Jac = Eigen::Matrix<double, M, N>;
  Res r = residual(x);
  double cost = r.squaredNorm();
  double lambda = 1e-6;
  for (int it = 0; it < max_iter && cost > 0; ++it) {
    Jac jac;
    for (int j = 0; j < N; ++j) {
      Point<N> xp = x;
      Point<N> xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (residual(xp) - residual(xm)) / (2 * h);
    }
    const Eigen::Matrix<double, N, N> jtj = jac.transpose() * jac;
    const Point<N> g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::Matrix<double, N, N> a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Point<N> step = a.ldlt().solve(-g);
      if (!step.allFinite()) break;
      const Point<N> trial = x + step;
      const Res rt = residual(trial);
      const double ct = rt.squaredNorm();
      if (ct < cost) {
        x = trial;
        r = rt;
        const double gain = cost - ct;
        cost = ct;
        lambda = std::max(lambda / 10, 1e-12);
        improved = gain > 1e-30;
        break;
      }
      lambda *= 10;
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace lmi::detail

#endif  // LMI_SRC_OPTIMIZE_H_
