/*
 Copyright 2026 The ileg Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ileg/approx.hpp"
#include "ileg/types.hpp"

namespace ileg {

/// Quadratic value model Psi(t, dx) = s0 + s'dx + 1/2 dx'S dx at every knot.
struct ValueQuadratic {
  std::vector<Matrix> S;
  std::vector<Vector> s;
  std::vector<double> s0;
  std::vector<double> times;
};

/// u(t_k, x) = u_nom_k + alpha * ff_k + fb_k (x - x_nom_k)
struct AffinePolicy {
  Trajectory nominal;
  std::vector<Vector> ff;
  std::vector<Matrix> fb;
  double alpha = 1.0;

  std::size_t steps() const { return ff.size(); }

  Vector control(std::size_t k, const Vector& x) const {
    return nominal.controls[k] + alpha * ff[k] + fb[k] * (x - nominal.states[k]);
  }

  AffinePolicy with_alpha(double a) const {
    AffinePolicy p = *this;
    p.alpha = a;
    return p;
  }

  /// Open-loop zero control along a resting nominal at x0.
  static AffinePolicy zero(const ControlProblem& problem, int steps) {
    AffinePolicy p;
    p.nominal.times = Trajectory::uniform_grid(problem.horizon, steps);
    p.nominal.states.assign(static_cast<std::size_t>(steps) + 1, problem.initial_state);
    p.nominal.controls.assign(static_cast<std::size_t>(steps), Vector::Zero(problem.control_dim));
    p.ff.assign(static_cast<std::size_t>(steps), Vector::Zero(problem.control_dim));
    p.fb.assign(static_cast<std::size_t>(steps),
                Matrix::Zero(problem.control_dim, problem.state_dim));
    return p;
  }
};

struct ExistenceReport {
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// M_k = B R^-1 B' - sigma C Sigma C'. Passes iff lambda_min(M_k) >= -1e-9 (1 + |M_k|).
inline ExistenceReport check_existence(const TimeVaryingLQ& lq, std::size_t k) {
  const Matrix& B = lq.B.at(k);
  const Matrix& C = lq.C.at(k);
  const Matrix RinvBt = lq.R.at(k).llt().solve(B.transpose());
  const Matrix M = symmetrized(B * RinvBt - lq.sigma * C * lq.Sigma * C.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  ExistenceReport r;
  r.min_eigenvalue = eig.eigenvalues().minCoeff();
  r.tolerance = 1e-9 * (1.0 + M.norm());
  r.pass = r.min_eigenvalue >= -r.tolerance;
  return r;
}

namespace detail {

/// Value coefficients plus dx = x_nom(t) - x_nom(t_k) inside the current interval.
struct ValueState {
  Matrix S;
  Vector s;
  double s0;
  Vector dx;
};

/// Coefficients of the value ODEs on one interval, frozen at the left knot.
/// Cost gradients are carried to first order along the in-interval nominal.
struct IntervalCoefficients {
  const Matrix& A;
  const Matrix& B;
  const Matrix& Q;
  const Matrix& P;
  const Vector& qx;
  const Vector& ru;
  double q0;
  Vector rate;
  Eigen::LLT<Matrix> R_llt;
  Matrix W;  // C Sigma C'
  double sigma;
};

/// Right-hand side of the backward ODEs, returned as -d/dt of (S, s, s0, dx).
inline ValueState value_rhs(const IntervalCoefficients& c, const ValueState& v) {
  const Vector qx = c.qx + c.Q * v.dx;
  const Vector ru = c.ru + c.P.transpose() * v.dx;
  const double q0 = c.q0 + c.qx.dot(v.dx) + 0.5 * v.dx.dot(c.Q * v.dx);

  const Matrix H = c.P.transpose() + c.B.transpose() * v.S;  // P' + B'S
  const Vector g = ru + c.B.transpose() * v.s;               // r + B's
  const Matrix RinvH = c.R_llt.solve(H);
  const Vector Rinvg = c.R_llt.solve(g);
  const Matrix WS = c.W * v.S;
  const Vector Ws = c.W * v.s;
  ValueState d;
  d.S = c.Q + c.A.transpose() * v.S + v.S.transpose() * c.A - H.transpose() * RinvH +
        c.sigma * v.S.transpose() * WS;
  d.s = qx + c.A.transpose() * v.s - H.transpose() * Rinvg + c.sigma * v.S.transpose() * Ws;
  d.s0 = q0 - 0.5 * g.dot(Rinvg) + 0.5 * (v.S * c.W).trace() + 0.5 * c.sigma * v.s.dot(Ws);
  d.dx = -(c.rate + c.A * v.dx);
  return d;
}

/// Stiffness estimate for the interval; keeps h * lambda <= 0.5 in each RK4 substep.
inline int riccati_substeps(const IntervalCoefficients& c, const Matrix& S, double dt) {
  const Matrix BRinvBt = c.B * c.R_llt.solve(c.B.transpose());
  const Matrix M = BRinvBt - c.sigma * c.W;
  const Matrix PRinvBt = c.P * c.R_llt.solve(c.B.transpose());
  const double lambda = 2.0 * c.A.norm() + 2.0 * PRinvBt.norm() + 2.0 * M.norm() * S.norm();
  const double m = std::ceil(dt * lambda / 0.5);
  if (!std::isfinite(m)) return 1;
  return static_cast<int>(std::clamp(m, 1.0, 1e6));
}

inline ValueState axpy(const ValueState& v, double h, const ValueState& d) {
  return {v.S + h * d.S, v.s + h * d.s, v.s0 + h * d.s0, v.dx + h * d.dx};
}

}  // namespace detail

/// Integrates the risk-sensitive Riccati system backward from the terminal
/// expansion with RK4. Dynamics and cost curvature are held at the left knot
/// of each interval; stiff intervals are subdivided and S is symmetrized after
/// every substep.
inline ValueQuadratic backward_pass(const TimeVaryingLQ& lq) {
  const std::size_t N = lq.steps();
  const Eigen::Index n = lq.terminal_Q.rows();
  for (std::size_t k = 0; k < N; ++k) {
    const ExistenceReport rep = check_existence(lq, k);
    if (!rep.pass) throw ExistenceViolation(k, rep.min_eigenvalue);
  }
  const bool track_nominal = lq.nominal_rate.size() == N && lq.nominal_step.size() == N;

  ValueQuadratic v;
  v.S.resize(N + 1);
  v.s.resize(N + 1);
  v.s0.resize(N + 1);
  v.times.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) v.times[k] = lq.dt * static_cast<double>(k);

  detail::ValueState state{symmetrized(lq.terminal_Q), lq.terminal_qx, lq.terminal_q0, Vector::Zero(n)};
  v.S[N] = state.S;
  v.s[N] = state.s;
  v.s0[N] = state.s0;

  for (std::size_t kk = N; kk-- > 0;) {
    detail::IntervalCoefficients c{lq.A[kk], lq.B[kk], lq.Q[kk], lq.P[kk], lq.qx[kk], lq.ru[kk],
                                   lq.q0[kk], track_nominal ? lq.nominal_rate[kk] : Vector::Zero(n),
                                   Eigen::LLT<Matrix>(lq.R[kk]),
                                   lq.C[kk] * lq.Sigma * lq.C[kk].transpose(), lq.sigma};
    if (c.R_llt.info() != Eigen::Success)
      throw NumericalError("R is not invertible at knot " + std::to_string(kk),
                           static_cast<std::ptrdiff_t>(kk));
    state.dx = track_nominal ? lq.nominal_step[kk] : Vector::Zero(n);

    const int m = detail::riccati_substeps(c, state.S, lq.dt);
    const double h = lq.dt / m;
    for (int i = 0; i < m; ++i) {
      // backward in time: y(t - h) = y(t) + h * (-dy/dt)
      const auto k1 = detail::value_rhs(c, state);
      const auto k2 = detail::value_rhs(c, detail::axpy(state, 0.5 * h, k1));
      const auto k3 = detail::value_rhs(c, detail::axpy(state, 0.5 * h, k2));
      const auto k4 = detail::value_rhs(c, detail::axpy(state, h, k3));
      state.S += (h / 6.0) * (k1.S + 2.0 * k2.S + 2.0 * k3.S + k4.S);
      state.s += (h / 6.0) * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
      state.s0 += (h / 6.0) * (k1.s0 + 2.0 * k2.s0 + 2.0 * k3.s0 + k4.s0);
      state.dx += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
      state.S = symmetrized(state.S);
    }
    if (!state.S.allFinite() || !state.s.allFinite() || !std::isfinite(state.s0))
      throw NumericalError("value function diverged at knot " + std::to_string(kk),
                           static_cast<std::ptrdiff_t>(kk));
    v.S[kk] = state.S;
    v.s[kk] = state.s;
    v.s0[kk] = state.s0;
  }
  return v;
}

/// l_k = -R^-1 (r + B's), L_k = -R^-1 (P' + B'S).
inline AffinePolicy extract_policy(const TimeVaryingLQ& lq, const ValueQuadratic& value,
                                   const Trajectory& nominal) {
  const std::size_t N = lq.steps();
  if (value.S.size() != N + 1 || nominal.steps() != N)
    throw ConfigError("extract_policy: value, model and nominal grids differ");
  AffinePolicy p;
  p.nominal = nominal;
  p.ff.resize(N);
  p.fb.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    Eigen::LLT<Matrix> llt(lq.R[k]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("R is not invertible at knot " + std::to_string(k),
                           static_cast<std::ptrdiff_t>(k));
    p.ff[k] = -llt.solve(lq.ru[k] + lq.B[k].transpose() * value.s[k]);
    p.fb[k] = -llt.solve(lq.P[k].transpose() + lq.B[k].transpose() * value.S[k]);
  }
  p.alpha = 1.0;
  return p;
}

}  // namespace ileg
