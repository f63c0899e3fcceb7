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
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ileg/approx.hpp"
#include "ileg/problem.hpp"
#include "ileg/riccati.hpp"

namespace ileg {

namespace detail {

inline void require_grid(const AffinePolicy& policy, const SolverConfig& cfg) {
  if (static_cast<int>(policy.steps()) != cfg.grid_steps)
    throw ConfigError("policy has " + std::to_string(policy.steps()) + " intervals, solver grid has " +
                      std::to_string(cfg.grid_steps));
}

inline void require_finite_state(const Vector& x, std::size_t knot) {
  if (!x.allFinite())
    throw NumericalError("state became non-finite at knot " + std::to_string(knot),
                         static_cast<std::ptrdiff_t>(knot));
}

/// Symmetric square root of a PSD matrix (clips round-off negatives).
inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// Noise-free closed-loop rollout, RK4 with the control held over each interval.
inline Trajectory rollout_deterministic(const ControlProblem& problem, const AffinePolicy& policy,
                                        const SolverConfig& cfg) {
  detail::require_grid(policy, cfg);
  const std::size_t N = policy.steps();
  const double dt = cfg.dt(problem);
  Trajectory traj;
  traj.times = Trajectory::uniform_grid(problem.horizon, cfg.grid_steps);
  traj.states.resize(N + 1);
  traj.controls.resize(N);
  traj.states[0] = problem.initial_state;
  for (std::size_t k = 0; k < N; ++k) {
    const double t = traj.times[k];
    const Vector& x = traj.states[k];
    const Vector u = policy.control(k, x);
    const Vector k1 = problem.dynamics(t, x, u);
    const Vector k2 = problem.dynamics(t + 0.5 * dt, x + 0.5 * dt * k1, u);
    const Vector k3 = problem.dynamics(t + 0.5 * dt, x + 0.5 * dt * k2, u);
    const Vector k4 = problem.dynamics(t + dt, x + dt * k3, u);
    traj.controls[k] = u;
    traj.states[k + 1] = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    detail::require_finite_state(traj.states[k + 1], k + 1);
  }
  return traj;
}

/// Rectangle-rule performance index: sum_k L(t_k, x_k, u_k) dt + Phi_f(x_N).
inline double evaluate_cost(const ControlProblem& problem, const Trajectory& traj,
                            const SolverConfig& /*cfg*/) {
  const std::size_t N = traj.steps();
  const double dt = traj.dt();
  double running = 0.0;
  for (std::size_t k = 0; k < N; ++k)
    running += problem.running_cost(traj.times[k], traj.states[k], traj.controls[k]);
  const double cost = running * dt + problem.terminal_cost(traj.states.back());
  if (!std::isfinite(cost)) throw NumericalError("non-finite trajectory cost", -1);
  return cost;
}

struct StochasticRollout {
  Trajectory trajectory;
  double cost = 0.0;
};

/// Generator for one Monte-Carlo sample; a pure function of (seed, index).
inline std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t sample_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sample_index),
                    static_cast<std::uint32_t>(sample_index >> 32)};
  return std::mt19937_64(seq);
}

/// Euler-Maruyama closed-loop rollout: x+ = x + (f + G u) dt + C dw, dw ~ N(0, Sigma dt).
inline StochasticRollout rollout_stochastic(const ControlProblem& problem, const AffinePolicy& policy,
                                            const SolverConfig& cfg, std::uint64_t sample_index) {
  detail::require_grid(policy, cfg);
  const std::size_t N = policy.steps();
  const double dt = cfg.dt(problem);
  const Matrix noise_scale = detail::psd_sqrt(problem.noise_covariance) * std::sqrt(dt);
  auto rng = sample_rng(cfg.rng_seed, sample_index);
  std::normal_distribution<double> normal(0.0, 1.0);

  StochasticRollout out;
  Trajectory& traj = out.trajectory;
  traj.times = Trajectory::uniform_grid(problem.horizon, cfg.grid_steps);
  traj.states.resize(N + 1);
  traj.controls.resize(N);
  traj.states[0] = problem.initial_state;
  Vector z(problem.noise_dim);
  double running = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const double t = traj.times[k];
    const Vector& x = traj.states[k];
    const Vector u = policy.control(k, x);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    traj.controls[k] = u;
    running += problem.running_cost(t, x, u);
    traj.states[k + 1] = x + problem.dynamics(t, x, u) * dt + problem.noise_matrix(t, x) * (noise_scale * z);
    detail::require_finite_state(traj.states[k + 1], k + 1);
  }
  out.cost = running * dt + problem.terminal_cost(traj.states.back());
  if (!std::isfinite(out.cost)) throw NumericalError("non-finite sample cost", -1);
  return out;
}

/// (1/sigma) log mean exp(sigma J_i), evaluated as a shifted log-sum-exp; the
/// sample mean for sigma == 0.
inline double estimate_risk_objective(const std::vector<double>& samples, double sigma) {
  if (samples.empty()) throw ConfigError("estimate_risk_objective: no samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw NumericalError("estimate_risk_objective: non-finite sample", -1);
  const double n = static_cast<double>(samples.size());
  if (sigma == 0.0) {
    double sum = 0.0;
    for (double v : samples) sum += v;
    return sum / n;
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double shift = sigma > 0.0 ? *hi : *lo;  // maximizer of sigma * J
  double acc = 0.0;
  for (double v : samples) acc += std::exp(sigma * (v - shift));
  const double result = std::log(acc / n) / sigma + shift;
  if (!std::isfinite(result))
    throw NumericalError("risk objective overflow: sigma * range = " +
                             std::to_string(sigma * (*hi - *lo)),
                         -1);
  return result;
}

/// Sample statistics of a set of cost realizations. Moments are central
/// moments normalized by n, so they coincide with the first three cumulants of
/// the empirical distribution.
struct RolloutStats {
  std::vector<double> samples;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;  // third central moment
  double risk_objective = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
};

inline RolloutStats make_stats(std::vector<double> samples, double sigma, std::uint64_t seed) {
  RolloutStats st;
  st.n_samples = samples.size();
  st.sigma = sigma;
  st.seed = seed;
  st.risk_objective = estimate_risk_objective(samples, sigma);
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  st.mean = sum / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : samples) {
    const double d = v - st.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  st.variance = m2 / n;
  st.skewness = m3 / n;
  st.samples = std::move(samples);
  return st;
}

/// Truncations of the cumulant expansion of the risk objective.
struct CumulantReport {
  double sigma = 0.0;
  double one_term = 0.0;    // mean
  double two_term = 0.0;    // + sigma/2 variance
  double three_term = 0.0;  // + sigma^2/6 third cumulant
  double risk_objective = 0.0;
};

inline CumulantReport cumulant_report(const RolloutStats& st) {
  CumulantReport r;
  r.sigma = st.sigma;
  r.one_term = st.mean;
  r.two_term = st.mean + 0.5 * st.sigma * st.variance;
  r.three_term = r.two_term + st.sigma * st.sigma / 6.0 * st.skewness;
  r.risk_objective = st.risk_objective;
  return r;
}

struct MonteCarloResult {
  RolloutStats stats;
  std::vector<double> times;
  std::vector<Vector> state_mean;  // per knot
  std::vector<Vector> state_sd;    // per knot, population SD
};

/// cfg.mc_samples independent stochastic rollouts. Samples run on worker
/// threads; every reduction walks samples in index order.
inline MonteCarloResult monte_carlo(const ControlProblem& problem, const AffinePolicy& policy,
                                    const SolverConfig& cfg, unsigned threads = 0) {
  detail::require_grid(policy, cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.mc_samples);
  std::vector<StochasticRollout> runs(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) runs[i] = rollout_stochastic(problem, policy, cfg, i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  MonteCarloResult mc;
  std::vector<double> costs(n);
  for (std::size_t i = 0; i < n; ++i) costs[i] = runs[i].cost;
  mc.stats = make_stats(std::move(costs), problem.risk_param, cfg.rng_seed);

  const std::size_t K = policy.steps() + 1;
  mc.times = runs.front().trajectory.times;
  mc.state_mean.assign(K, Vector::Zero(problem.state_dim));
  mc.state_sd.assign(K, Vector::Zero(problem.state_dim));
  for (std::size_t k = 0; k < K; ++k) {
    Vector& mean = mc.state_mean[k];
    for (std::size_t i = 0; i < n; ++i) mean += runs[i].trajectory.states[k];
    mean /= static_cast<double>(n);
    Vector var = Vector::Zero(problem.state_dim);
    for (std::size_t i = 0; i < n; ++i) var += (runs[i].trajectory.states[k] - mean).cwiseAbs2();
    mc.state_sd[k] = (var / static_cast<double>(n)).cwiseSqrt();
  }
  return mc;
}

}  // namespace ileg
