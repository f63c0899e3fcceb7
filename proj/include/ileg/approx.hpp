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

#include "ileg/problem.hpp"
#include "ileg/types.hpp"

namespace ileg {

/// Uniform time grid with N+1 knots, N+1 states and N piecewise-constant controls.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;

  std::size_t steps() const { return controls.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  static std::vector<double> uniform_grid(double horizon, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    const double dt = horizon / steps;
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = dt * static_cast<double>(k);
    t.back() = horizon;
    return t;
  }

  void check_consistent(int state_dim, int control_dim) const {
    const std::size_t n = controls.size();
    if (n < 1 || states.size() != n + 1 || times.size() != n + 1)
      throw ConfigError("trajectory: expected N+1 times/states and N controls");
    for (const auto& x : states)
      if (x.size() != state_dim) throw ConfigError("trajectory: state dimension mismatch");
    for (const auto& u : controls)
      if (u.size() != control_dim) throw ConfigError("trajectory: control dimension mismatch");
  }
};

/// Local linear-quadratic model along a nominal trajectory. Cost coefficients
/// are per unit time; the backward pass integrates them against dt.
///
/// nominal_rate (f + G u at each knot) and nominal_step (x_{k+1} - x_k) let the
/// backward pass follow the nominal inside each interval. Either may be left
/// empty, in which case the nominal is taken as constant over the interval.
struct TimeVaryingLQ {
  std::vector<Matrix> A, B, C;
  std::vector<Vector> nominal_rate, nominal_step;
  std::vector<double> q0;
  std::vector<Vector> qx, ru;
  std::vector<Matrix> Q, P, R;
  double terminal_q0 = 0.0;
  Vector terminal_qx;
  Matrix terminal_Q;
  double dt = 0.0;
  double sigma = 0.0;
  Matrix Sigma;

  std::size_t steps() const { return A.size(); }
  int state_dim() const { return static_cast<int>(terminal_Q.rows()); }
  int control_dim() const { return R.empty() ? 0 : static_cast<int>(R.front().rows()); }
};

namespace fd {

inline double step_for(double x, double h) { return h * std::max(1.0, std::abs(x)); }

/// Central-difference Jacobian of fn: R^n -> R^m.
template <typename Fn>
Matrix jacobian(Fn&& fn, const Vector& x, double h) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double hj = step_for(x(j), h);
    xp(j) = x(j) + hj;
    xm(j) = x(j) - hj;
    J.col(j) = (fn(xp) - fn(xm)) / (2.0 * hj);
    xp(j) = xm(j) = x(j);
  }
  return J;
}

template <typename Fn>
Vector gradient(Fn&& fn, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double hj = step_for(x(j), h);
    xp(j) = x(j) + hj;
    xm(j) = x(j) - hj;
    g(j) = (fn(xp) - fn(xm)) / (2.0 * hj);
    xp(j) = xm(j) = x(j);
  }
  return g;
}

/// Central-difference Hessian, symmetrized.
template <typename Fn>
Matrix hessian(Fn&& fn, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix H(n, n);
  const double f0 = fn(x);
  Vector xs = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = step_for(x(i), h);
    xs(i) = x(i) + hi;
    const double fp = fn(xs);
    xs(i) = x(i) - hi;
    const double fm = fn(xs);
    xs(i) = x(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = step_for(x(j), h);
      auto eval = [&](double si, double sj) {
        xs(i) = x(i) + si * hi;
        xs(j) = x(j) + sj * hj;
        const double v = fn(xs);
        xs(i) = x(i);
        xs(j) = x(j);
        return v;
      };
      H(i, j) = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * hi * hj);
      H(j, i) = H(i, j);
    }
  }
  return symmetrized(H);
}

}  // namespace fd

namespace detail {

inline void require_finite(const Matrix& m, std::size_t knot, const char* what) {
  if (m.allFinite()) return;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw NumericalError(std::string("non-finite ") + what + " at knot " + std::to_string(knot) +
                                 ", entry (" + std::to_string(i) + "," + std::to_string(j) + ")",
                             static_cast<std::ptrdiff_t>(knot));
}

}  // namespace detail

struct LinearDynamics {
  std::vector<Matrix> A, B, C;
};

/// A_k = df/dx + dG/dx u_k, B_k = G, C_k = C at every knot of the nominal.
inline LinearDynamics linearize_dynamics(const ControlProblem& problem, const Trajectory& nominal,
                                         const SolverConfig& cfg) {
  nominal.check_consistent(problem.state_dim, problem.control_dim);
  const std::size_t N = nominal.steps();
  LinearDynamics lin;
  lin.A.resize(N);
  lin.B.resize(N);
  lin.C.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double t = nominal.times[k];
    const Vector& x = nominal.states[k];
    const Vector& u = nominal.controls[k];
    if (problem.dynamics_jacobian) {
      lin.A[k] = problem.dynamics_jacobian(t, x, u);
    } else {
      lin.A[k] = fd::jacobian([&](const Vector& xx) { return problem.dynamics(t, xx, u); }, x,
                              cfg.fd_step);
    }
    lin.B[k] = problem.control_matrix(t, x);
    lin.C[k] = problem.noise_matrix(t, x);
    detail::require_finite(lin.A[k], k, "dynamics Jacobian A");
    detail::require_finite(lin.B[k], k, "control matrix B");
    detail::require_finite(lin.C[k], k, "noise matrix C");
  }
  return lin;
}

struct QuadraticCost {
  std::vector<double> q0;
  std::vector<Vector> qx, ru;
  std::vector<Matrix> Q, P, R;
  double terminal_q0 = 0.0;
  Vector terminal_qx;
  Matrix terminal_Q;
};

/// Second-order expansion of L(t,x,u) about each (x_k, u_k) plus the terminal
/// expansion of Phi_f. State derivatives are central differences; the control
/// block is analytic since L is quadratic in u.
inline QuadraticCost quadratize_cost(const ControlProblem& problem, const Trajectory& nominal,
                                     const SolverConfig& cfg) {
  nominal.check_consistent(problem.state_dim, problem.control_dim);
  const std::size_t N = nominal.steps();
  const double h = cfg.fd_step;
  QuadraticCost c;
  c.q0.resize(N);
  c.qx.resize(N);
  c.ru.resize(N);
  c.Q.resize(N);
  c.P.resize(N);
  c.R.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double t = nominal.times[k];
    const Vector& x = nominal.states[k];
    const Vector& u = nominal.controls[k];
    auto L = [&](const Vector& xx) { return problem.running_cost(t, xx, u); };
    c.q0[k] = L(x);
    c.qx[k] = fd::gradient(L, x, h);
    c.Q[k] = fd::hessian(L, x, h);
    c.R[k] = symmetrized(problem.control_weight(t, x));
    c.ru[k] = c.R[k] * u + problem.control_linear(t, x);
    // d/dx (R(x) u + r(x)), transposed to state x control
    c.P[k] = fd::jacobian(
                 [&](const Vector& xx) -> Vector {
                   return problem.control_weight(t, xx) * u + problem.control_linear(t, xx);
                 },
                 x, h)
                 .transpose();

    if (!std::isfinite(c.q0[k]))
      throw NumericalError("non-finite running cost at knot " + std::to_string(k),
                           static_cast<std::ptrdiff_t>(k));
    detail::require_finite(c.qx[k], k, "cost gradient");
    detail::require_finite(c.Q[k], k, "cost Hessian");
    detail::require_finite(c.ru[k], k, "control gradient");
    detail::require_finite(c.P[k], k, "cross term P");
    Eigen::LLT<Matrix> llt(c.R[k]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("control weight R is not positive definite at knot " + std::to_string(k),
                           static_cast<std::ptrdiff_t>(k));
  }
  const Vector& xf = nominal.states.back();
  c.terminal_q0 = problem.terminal_cost(xf);
  c.terminal_qx = fd::gradient(problem.terminal_cost, xf, h);
  c.terminal_Q = fd::hessian(problem.terminal_cost, xf, h);
  if (!std::isfinite(c.terminal_q0))
    throw NumericalError("non-finite terminal cost", static_cast<std::ptrdiff_t>(N));
  detail::require_finite(c.terminal_qx, N, "terminal gradient");
  detail::require_finite(c.terminal_Q, N, "terminal Hessian");
  return c;
}

inline TimeVaryingLQ approximate(const ControlProblem& problem, const Trajectory& nominal,
                                 const SolverConfig& cfg) {
  LinearDynamics lin = linearize_dynamics(problem, nominal, cfg);
  QuadraticCost cost = quadratize_cost(problem, nominal, cfg);
  TimeVaryingLQ lq;
  lq.A = std::move(lin.A);
  lq.B = std::move(lin.B);
  lq.C = std::move(lin.C);
  const std::size_t N = nominal.steps();
  lq.nominal_rate.resize(N);
  lq.nominal_step.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    lq.nominal_rate[k] = problem.dynamics(nominal.times[k], nominal.states[k], nominal.controls[k]);
    lq.nominal_step[k] = nominal.states[k + 1] - nominal.states[k];
    detail::require_finite(lq.nominal_rate[k], k, "nominal state derivative");
  }
  lq.q0 = std::move(cost.q0);
  lq.qx = std::move(cost.qx);
  lq.ru = std::move(cost.ru);
  lq.Q = std::move(cost.Q);
  lq.P = std::move(cost.P);
  lq.R = std::move(cost.R);
  lq.terminal_q0 = cost.terminal_q0;
  lq.terminal_qx = std::move(cost.terminal_qx);
  lq.terminal_Q = std::move(cost.terminal_Q);
  lq.dt = nominal.dt();
  lq.sigma = problem.risk_param;
  lq.Sigma = problem.noise_covariance;
  return lq;
}

}  // namespace ileg
