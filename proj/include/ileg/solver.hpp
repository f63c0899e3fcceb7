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
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ileg/approx.hpp"
#include "ileg/problem.hpp"
#include "ileg/riccati.hpp"
#include "ileg/rollout.hpp"

namespace ileg {

enum class Termination {
  converged,
  max_iterations,
  existence_violation,
  line_search_failed,
  numerical_error,  // only produced by sigma_sweep for captured exceptions
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    case Termination::existence_violation: return "existence_violation";
    case Termination::line_search_failed: return "line_search_failed";
    case Termination::numerical_error: return "numerical_error";
  }
  return "unknown";
}

/// How an iterate was accepted.
enum class StepKind {
  descent,      // strict decrease of the plain cost
  fixed_point,  // full step, no decrease, but the feedforward residual contracted
  stationary,   // full step flat within tolerance; the current iterate is kept
};

inline const char* to_string(StepKind s) {
  switch (s) {
    case StepKind::descent: return "descent";
    case StepKind::fixed_point: return "fixed_point";
    case StepKind::stationary: return "stationary";
  }
  return "unknown";
}

struct IterationRecord {
  int iteration = 0;
  double alpha = 0.0;
  double cost = 0.0;
  double relative_change = 0.0;
  double min_existence_eigenvalue = 0.0;
  std::size_t min_existence_knot = 0;
  double max_ff = 0.0;  // max |l|
  double max_fb = 0.0;  // max Frobenius norm of L
  StepKind step = StepKind::descent;
};

struct ExistenceFailure {
  std::size_t knot = 0;
  double min_eigenvalue = 0.0;
};

struct SolveResult {
  AffinePolicy policy;
  Trajectory nominal;
  ValueQuadratic value;
  std::vector<double> cost_history;  // entry 0 is the initial policy's cost
  int iterations = 0;
  Termination termination = Termination::max_iterations;
  std::vector<IterationRecord> diagnostics;
  std::optional<ExistenceFailure> existence_failure;
  double sigma = 0.0;
  std::string message;

  double final_cost() const { return cost_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                          : cost_history.back(); }
};

namespace detail {

inline double max_abs(const std::vector<Vector>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.lpNorm<Eigen::Infinity>());
  return m;
}

inline double max_norm(const std::vector<Matrix>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.norm());
  return m;
}

struct Candidate {
  Trajectory trajectory;
  double cost = std::numeric_limits<double>::infinity();
  bool finite = false;
};

inline Candidate try_rollout(const ControlProblem& problem, const AffinePolicy& policy,
                             const SolverConfig& cfg) {
  Candidate c;
  try {
    c.trajectory = rollout_deterministic(problem, policy, cfg);
    c.cost = evaluate_cost(problem, c.trajectory, cfg);
    c.finite = true;
  } catch (const NumericalError&) {
    c.finite = false;
  }
  return c;
}

}  // namespace detail

/// Iterative linear / exponential-quadratic solver.
///
/// Each iteration rolls the current policy out without noise, builds the local
/// LQ model, checks the existence condition at every knot, integrates the
/// risk-sensitive Riccati system and forms the affine update. The feedforward
/// part is scaled by alpha in {1, shrink, shrink^2, ...} and the first alpha
/// whose rollout strictly lowers the plain cost is taken. If none does and the
/// full step changes the cost by at most cost_tolerance, the current iterate
/// is returned as converged. For sigma != 0 the risk-sensitive fixed point is
/// generally not a minimizer of the plain cost; there the full step is still
/// taken when max|l| contracted relative to the previous iteration.
inline SolveResult ileg_solve(const ControlProblem& problem, const SolverConfig& cfg,
                              std::optional<AffinePolicy> initial_policy = std::nullopt) {
  validate(problem);
  cfg.validate();

  SolveResult res;
  res.sigma = problem.risk_param;
  res.policy = initial_policy ? std::move(*initial_policy) : AffinePolicy::zero(problem, cfg.grid_steps);
  if (!(res.policy.alpha > 0.0 && res.policy.alpha <= 1.0))
    throw ConfigError("initial policy alpha must lie in (0,1]");
  res.nominal = rollout_deterministic(problem, res.policy, cfg);
  double cost = evaluate_cost(problem, res.nominal, cfg);
  res.cost_history.push_back(cost);

  double prev_residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    res.iterations = it;
    const TimeVaryingLQ lq = approximate(problem, res.nominal, cfg);

    IterationRecord rec;
    rec.iteration = it;
    rec.min_existence_eigenvalue = std::numeric_limits<double>::infinity();
    std::optional<ExistenceFailure> failure;
    for (std::size_t k = 0; k < lq.steps(); ++k) {
      const ExistenceReport rep = check_existence(lq, k);
      if (rep.min_eigenvalue < rec.min_existence_eigenvalue) {
        rec.min_existence_eigenvalue = rep.min_eigenvalue;
        rec.min_existence_knot = k;
      }
      if (!rep.pass && !failure) failure = ExistenceFailure{k, rep.min_eigenvalue};
    }
    if (failure) {
      rec.cost = cost;
      res.termination = Termination::existence_violation;
      res.existence_failure = failure;
      res.message = ExistenceViolation(failure->knot, failure->min_eigenvalue).what();
      res.diagnostics.push_back(rec);
      return res;
    }

    ValueQuadratic value = backward_pass(lq);
    AffinePolicy step = extract_policy(lq, value, res.nominal);
    rec.max_ff = detail::max_abs(step.ff);
    rec.max_fb = detail::max_norm(step.fb);

    std::optional<detail::Candidate> accepted;
    detail::Candidate full;
    double alpha = 1.0;
    for (double a = 1.0; a >= cfg.line_search_min_alpha; a *= cfg.line_search_shrink) {
      detail::Candidate c = detail::try_rollout(problem, step.with_alpha(a), cfg);
      if (a == 1.0) full = c;
      if (c.finite && c.cost < cost) {
        accepted = std::move(c);
        alpha = a;
        rec.step = StepKind::descent;
        break;
      }
    }
    if (!accepted && full.finite) {
      const double change = std::abs(full.cost - cost) / std::max(std::abs(cost), 1e-300);
      if (change <= cfg.cost_tolerance) {
        // no descent left and the full step is flat: keep the current iterate
        rec.alpha = 1.0;
        rec.cost = cost;
        rec.relative_change = change;
        rec.step = StepKind::stationary;
        res.diagnostics.push_back(rec);
        res.cost_history.push_back(cost);
        res.termination = Termination::converged;
        return res;
      }
      if (problem.risk_param != 0.0 && rec.max_ff < prev_residual) {
        accepted = full;
        alpha = 1.0;
        rec.step = StepKind::fixed_point;
      }
    }
    if (!accepted) {
      res.termination = Termination::line_search_failed;
      res.message = "no step size in [" + std::to_string(cfg.line_search_min_alpha) +
                    ", 1] reduced the cost";
      rec.cost = cost;
      res.diagnostics.push_back(rec);
      return res;
    }

    const double rel = std::abs(cost - accepted->cost) / std::max(std::abs(cost), 1e-300);
    rec.alpha = alpha;
    rec.cost = accepted->cost;
    rec.relative_change = rel;
    res.diagnostics.push_back(rec);

    res.policy = step.with_alpha(alpha);
    res.value = std::move(value);
    res.nominal = std::move(accepted->trajectory);
    cost = accepted->cost;
    res.cost_history.push_back(cost);
    prev_residual = rec.max_ff;

    if (rel <= cfg.cost_tolerance) {
      res.termination = Termination::converged;
      return res;
    }
  }
  res.termination = Termination::max_iterations;
  return res;
}

/// One independent solve per sigma, run concurrently; output order follows input.
inline std::vector<SolveResult> sigma_sweep(const ControlProblem& problem, const SolverConfig& cfg,
                                            std::span<const double> sigmas) {
  std::vector<SolveResult> out(sigmas.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(sigmas.size());
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      pool.emplace_back([&, i] {
        try {
          out[i] = ileg_solve(problem.with_risk_param(sigmas[i]), cfg);
        } catch (const std::exception& e) {
          out[i] = SolveResult{};
          out[i].sigma = sigmas[i];
          out[i].termination = Termination::numerical_error;
          out[i].message = e.what();
        }
      });
    }
  }
  return out;
}

}  // namespace ileg
