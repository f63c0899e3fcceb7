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

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "ileg/types.hpp"

namespace ileg {

/// Continuous-time stochastic control problem
///
///   dx = (f(t,x) + G(t,x) u) dt + C(t,x) dw,   Cov(dw) = Sigma dt
///   cost = Phi_f(x(tf)) + int_0^tf Phi(t,x) + 1/2 u'R(t,x)u + u'r(t,x) dt
///
/// optimized through E[exp(risk_param * cost)]. Instances are immutable after
/// construction; all callbacks must be pure.
struct ControlProblem {
  using VectorField = std::function<Vector(double, const Vector&)>;
  using MatrixField = std::function<Matrix(double, const Vector&)>;
  using ScalarField = std::function<double(double, const Vector&)>;
  using TerminalCost = std::function<double(const Vector&)>;
  /// Optional analytic df/dx + dG/dx u, evaluated at (t, x, u).
  using DynamicsJacobian = std::function<Matrix(double, const Vector&, const Vector&)>;

  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int noise_dim = 0;

  VectorField drift;
  MatrixField control_matrix;
  MatrixField noise_matrix;
  Matrix noise_covariance;

  ScalarField running_state_cost;
  MatrixField control_weight;
  VectorField control_linear;
  TerminalCost terminal_cost;

  double horizon = 0.0;
  Vector initial_state;
  double risk_param = 0.0;

  DynamicsJacobian dynamics_jacobian;

  Vector dynamics(double t, const Vector& x, const Vector& u) const {
    return drift(t, x) + control_matrix(t, x) * u;
  }

  /// L(t,x,u) = Phi(t,x) + 1/2 u'R u + u'r.
  double running_cost(double t, const Vector& x, const Vector& u) const {
    return running_state_cost(t, x) + 0.5 * u.dot(control_weight(t, x) * u) +
           u.dot(control_linear(t, x));
  }

  ControlProblem with_risk_param(double sigma) const {
    ControlProblem p = *this;
    p.risk_param = sigma;
    return p;
  }
};

/// Discretization, termination and sampling knobs for the solver stack.
struct SolverConfig {
  int grid_steps = 300;
  int max_iterations = 100;
  double cost_tolerance = 1e-6;
  double fd_step = 1e-4;
  double line_search_shrink = 0.5;
  double line_search_min_alpha = 1.0 / 64.0;
  std::uint64_t rng_seed = 0;
  int mc_samples = 2000;

  double dt(const ControlProblem& problem) const { return problem.horizon / grid_steps; }

  void validate() const {
    if (grid_steps < 2) throw ConfigError("grid_steps must be >= 2");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(cost_tolerance > 0.0)) throw ConfigError("cost_tolerance must be > 0");
    if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
    if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
      throw ConfigError("line_search_shrink must lie in (0,1)");
    if (!(line_search_min_alpha > 0.0 && line_search_min_alpha < 1.0))
      throw ConfigError("line_search_min_alpha must lie in (0,1)");
    if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  }
};

/// Shape and definiteness checks, evaluated at (0, x0).
inline void validate(const ControlProblem& p) {
  if (p.state_dim < 1 || p.control_dim < 1 || p.noise_dim < 1)
    throw ConfigError(p.name + ": dimensions must be positive");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon))
    throw ConfigError(p.name + ": horizon must be a positive finite number");
  if (!p.drift || !p.control_matrix || !p.noise_matrix || !p.running_state_cost ||
      !p.control_weight || !p.control_linear || !p.terminal_cost)
    throw ConfigError(p.name + ": every problem callback must be set");
  if (p.initial_state.size() != p.state_dim)
    throw ConfigError(p.name + ": initial_state has " + std::to_string(p.initial_state.size()) +
                      " entries, expected " + std::to_string(p.state_dim));
  const auto n = p.state_dim, m = p.control_dim, w = p.noise_dim;
  const Vector& x0 = p.initial_state;
  auto check_shape = [&](const Matrix& mat, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (mat.rows() != rows || mat.cols() != cols)
      throw ConfigError(p.name + ": " + what + " is " + std::to_string(mat.rows()) + "x" +
                        std::to_string(mat.cols()) + ", expected " + std::to_string(rows) +
                        "x" + std::to_string(cols));
  };
  check_shape(p.drift(0.0, x0), n, 1, "drift");
  check_shape(p.control_matrix(0.0, x0), n, m, "control_matrix");
  check_shape(p.noise_matrix(0.0, x0), n, w, "noise_matrix");
  check_shape(p.noise_covariance, w, w, "noise_covariance");
  check_shape(p.control_weight(0.0, x0), m, m, "control_weight");
  check_shape(p.control_linear(0.0, x0), m, 1, "control_linear");

  if (!p.noise_covariance.isApprox(p.noise_covariance.transpose(), 1e-12))
    throw ConfigError(p.name + ": noise_covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.noise_covariance, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * (1.0 + p.noise_covariance.norm()))
    throw ConfigError(p.name + ": noise_covariance must be positive semidefinite");

  const Matrix R = p.control_weight(0.0, x0);
  if (!R.isApprox(R.transpose(), 1e-12))
    throw ConfigError(p.name + ": control_weight must be symmetric");
  Eigen::LLT<Matrix> llt(symmetrized(R));
  if (llt.info() != Eigen::Success)
    throw ConfigError(p.name + ": control_weight must be positive definite");
}

/// Smallest control-weight eigenvalue guaranteed by the bundled presets.
inline constexpr double kPresetControlWeightFloor = 0.02;

/// Running cost value returned on or beyond the cliff-world pole at y = -10.
inline constexpr double kCliffPenaltyCap = 1e9;

struct CliffWorldParams {
  double noise_sd_x = 0.1;
  double noise_sd_y = 1.0;
  double horizon = 3.0;
  double sigma = 0.0;
  Vector initial_state = Vector::Zero(4);
  Eigen::Vector2d goal{10.0, 0.0};
};

/// Cliff penalty 0.1 / (0.1 y + 1)^10, capped near the pole.
inline double cliff_penalty(double y) {
  if (y <= -10.0 + 1e-6) return kCliffPenaltyCap;
  return 0.1 / std::pow(0.1 * y + 1.0, 10);
}

/// Point mass (1 kg) in the plane, state (x, y, vx, vy), forces (ux, uy).
/// Brownian forcing enters the velocity rows; the cliff lies at negative y.
inline ControlProblem make_cliff_world(const CliffWorldParams& params = {}) {
  if (params.initial_state.size() != 4)
    throw ConfigError("cliff_world: initial_state must have 4 entries");
  ControlProblem p;
  p.name = "cliff_world";
  p.state_dim = 4;
  p.control_dim = 2;
  p.noise_dim = 2;

  Matrix force = Matrix::Zero(4, 2);
  force(2, 0) = 1.0;
  force(3, 1) = 1.0;

  p.drift = [](double, const Vector& x) {
    Vector dx = Vector::Zero(4);
    dx(0) = x(2);
    dx(1) = x(3);
    return dx;
  };
  p.control_matrix = [force](double, const Vector&) { return force; };
  p.noise_matrix = [force](double, const Vector&) { return force; };
  p.noise_covariance = Eigen::Vector2d(params.noise_sd_x * params.noise_sd_x,
                                       params.noise_sd_y * params.noise_sd_y)
                           .asDiagonal();

  p.running_state_cost = [](double, const Vector& x) { return cliff_penalty(x(1)); };
  // u_x^2 + 0.01 u_y^2 == 1/2 u' diag(2, 0.02) u
  p.control_weight = [](double, const Vector&) -> Matrix {
    return Eigen::Vector2d(2.0, 0.02).asDiagonal();
  };
  p.control_linear = [](double, const Vector&) -> Vector { return Vector::Zero(2); };

  const Eigen::Vector2d goal = params.goal;
  p.terminal_cost = [goal](const Vector& x) {
    const double ex = x(0) - goal(0), ey = x(1) - goal(1);
    return 100.0 * ex * ex + 100.0 * ey * ey + 10.0 * (x(2) * x(2) + x(3) * x(3));
  };

  p.horizon = params.horizon;
  p.initial_state = params.initial_state;
  p.risk_param = params.sigma;

  Matrix double_integrator = Matrix::Zero(4, 4);
  double_integrator(0, 2) = 1.0;
  double_integrator(1, 3) = 1.0;
  p.dynamics_jacobian = [double_integrator](double, const Vector&, const Vector&) {
    return double_integrator;
  };
  validate(p);
  return p;
}

struct ScalarLqParams {
  double a = 0.0;
  double b = 1.0;
  double c = 1.0;
  double q = 1.0;
  double r_w = 1.0;
  double sigma = 0.0;
  double horizon = 1.0;
  double noise_sd = 1.0;
  double initial_state = 1.0;
  double goal = 0.0;
};

/// dx = (a x + b u) dt + c dw with cost 1/2 q (x - goal)^2 + 1/2 r_w u^2 and no
/// terminal cost. Linear dynamics and quadratic cost make the local model exact.
inline ControlProblem make_scalar_lq(const ScalarLqParams& s) {
  if (!(s.r_w > 0.0)) throw ConfigError("scalar_lq: r_w must be > 0");
  if (!(s.q >= 0.0)) throw ConfigError("scalar_lq: q must be >= 0");
  ControlProblem p;
  p.name = "scalar_lq";
  p.state_dim = p.control_dim = p.noise_dim = 1;
  p.drift = [a = s.a](double, const Vector& x) -> Vector { return a * x; };
  p.control_matrix = [b = s.b](double, const Vector&) -> Matrix { return Matrix::Constant(1, 1, b); };
  p.noise_matrix = [c = s.c](double, const Vector&) -> Matrix { return Matrix::Constant(1, 1, c); };
  p.noise_covariance = Matrix::Constant(1, 1, s.noise_sd * s.noise_sd);
  p.running_state_cost = [q = s.q, g = s.goal](double, const Vector& x) {
    const double e = x(0) - g;
    return 0.5 * q * e * e;
  };
  p.control_weight = [r = s.r_w](double, const Vector&) -> Matrix { return Matrix::Constant(1, 1, r); };
  p.control_linear = [](double, const Vector&) -> Vector { return Vector::Zero(1); };
  p.terminal_cost = [](const Vector&) { return 0.0; };
  p.horizon = s.horizon;
  p.initial_state = Vector::Constant(1, s.initial_state);
  p.risk_param = s.sigma;
  p.dynamics_jacobian = [a = s.a](double, const Vector&, const Vector&) -> Matrix {
    return Matrix::Constant(1, 1, a);
  };
  validate(p);
  return p;
}

inline ControlProblem make_scalar_lq(double a, double b, double c, double q, double r_w, double sigma,
                                     double tf) {
  ScalarLqParams s;
  s.a = a;
  s.b = b;
  s.c = c;
  s.q = q;
  s.r_w = r_w;
  s.sigma = sigma;
  s.horizon = tf;
  return make_scalar_lq(s);
}

}  // namespace ileg
