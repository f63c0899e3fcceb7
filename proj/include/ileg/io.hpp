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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ileg/riccati.hpp"
#include "ileg/rollout.hpp"
#include "ileg/solver.hpp"

namespace ileg::io {

/// Shortest-round-trip-safe text form used in every CSV cell.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Compact sigma label used in file names, e.g. "45", "-100", "0.5", "1e+06".
inline std::string sigma_label(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", sigma);
  return buf;
}

inline std::string file_name(const std::string& stem, double sigma, const std::string& ext) {
  return stem + "_sigma" + sigma_label(sigma) + "." + ext;
}

/// Columns: t, x0..x{n-1}, u0..u{m-1}. The final knot leaves the control cells empty.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto n = traj.states.front().size();
  const auto m = traj.controls.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i;
  os << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << fmt(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt(traj.states[k](i));
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ",";
      if (k < traj.controls.size()) os << fmt(traj.controls[k](i));
    }
    os << "\n";
  }
}

/// Columns: t, l0..l{m-1}, then L row-major as L{i}_{j}.
inline void write_gains_csv(std::ostream& os, const AffinePolicy& policy) {
  const auto m = policy.fb.front().rows();
  const auto n = policy.fb.front().cols();
  os << "t";
  for (Eigen::Index i = 0; i < m; ++i) os << ",l" << i;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) os << ",L" << i << "_" << j;
  os << "\n";
  for (std::size_t k = 0; k < policy.steps(); ++k) {
    os << fmt(policy.nominal.times[k]);
    for (Eigen::Index i = 0; i < m; ++i) os << "," << fmt(policy.alpha * policy.ff[k](i));
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) os << "," << fmt(policy.fb[k](i, j));
    os << "\n";
  }
}

/// Columns: iteration, cost, alpha, relative_change, min_existence_eigenvalue, max_ff, max_fb, step.
/// Row 0 is the initial policy.
inline void write_costs_csv(std::ostream& os, const SolveResult& r) {
  os << "iteration,cost,alpha,relative_change,min_existence_eigenvalue,max_ff,max_fb,step\n";
  if (!r.cost_history.empty()) os << "0," << fmt(r.cost_history.front()) << ",,,,,,initial\n";
  std::size_t accepted = 1;
  for (const auto& d : r.diagnostics) {
    const bool ok = accepted < r.cost_history.size() && d.alpha > 0.0;
    os << d.iteration << "," << fmt(d.cost) << ",";
    if (ok) os << fmt(d.alpha) << "," << fmt(d.relative_change);
    else os << ",";
    os << "," << fmt(d.min_existence_eigenvalue) << "," << fmt(d.max_ff) << "," << fmt(d.max_fb) << ","
       << (ok ? to_string(d.step) : "rejected") << "\n";
    if (ok) ++accepted;
  }
}

/// Columns: t, then per state i: mean_x{i}, sd_x{i}, lo_x{i}, hi_x{i}, lo15_x{i}, hi15_x{i}
/// (mean -/+ SD and mean -/+ 0.15 SD).
inline void write_bands_csv(std::ostream& os, const MonteCarloResult& mc) {
  const auto n = mc.state_mean.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i)
    os << ",mean_x" << i << ",sd_x" << i << ",lo_x" << i << ",hi_x" << i << ",lo15_x" << i << ",hi15_x" << i;
  os << "\n";
  for (std::size_t k = 0; k < mc.state_mean.size(); ++k) {
    os << fmt(mc.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = mc.state_mean[k](i), sd = mc.state_sd[k](i);
      os << "," << fmt(mu) << "," << fmt(sd) << "," << fmt(mu - sd) << "," << fmt(mu + sd) << ","
         << fmt(mu - 0.15 * sd) << "," << fmt(mu + 0.15 * sd);
    }
    os << "\n";
  }
}

inline void write_samples_csv(std::ostream& os, const RolloutStats& st) {
  os << "sample,cost\n";
  for (std::size_t i = 0; i < st.samples.size(); ++i) os << i << "," << fmt(st.samples[i]) << "\n";
}

/// Mean over knots of the per-knot SD of state i.
inline double mean_band_width(const MonteCarloResult& mc, Eigen::Index i) {
  double acc = 0.0;
  for (const auto& sd : mc.state_sd) acc += sd(i);
  return acc / static_cast<double>(mc.state_sd.size());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("csv: missing column " + name);
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    cells.resize(t.header.size());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

/// Rebuilds the closed-loop policy u_k(x) = u_k + L_k (x - x_k) about the
/// final nominal from a trajectory CSV and a gains CSV.
inline AffinePolicy read_policy(const std::string& trajectory_csv, const std::string& gains_csv,
                                int state_dim, int control_dim) {
  const CsvTable traj = read_csv(trajectory_csv);
  const CsvTable gains = read_csv(gains_csv);
  if (traj.rows.size() < 2 || gains.rows.size() + 1 != traj.rows.size())
    throw ConfigError("policy files have inconsistent lengths: " + trajectory_csv + ", " + gains_csv);
  const std::size_t N = gains.rows.size();
  AffinePolicy p;
  p.nominal.times.resize(N + 1);
  p.nominal.states.resize(N + 1);
  p.nominal.controls.resize(N);
  p.ff.assign(N, Vector::Zero(control_dim));
  p.fb.resize(N);
  auto num = [](const std::string& s) { return std::stod(s); };
  for (std::size_t k = 0; k <= N; ++k) {
    const auto& row = traj.rows[k];
    p.nominal.times[k] = num(row[0]);
    Vector x(state_dim);
    for (int i = 0; i < state_dim; ++i) x(i) = num(row[traj.column("x" + std::to_string(i))]);
    p.nominal.states[k] = x;
    if (k < N) {
      Vector u(control_dim);
      for (int i = 0; i < control_dim; ++i) u(i) = num(row[traj.column("u" + std::to_string(i))]);
      p.nominal.controls[k] = u;
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    Matrix L(control_dim, state_dim);
    for (int i = 0; i < control_dim; ++i)
      for (int j = 0; j < state_dim; ++j)
        L(i, j) = num(gains.rows[k][gains.column("L" + std::to_string(i) + "_" + std::to_string(j))]);
    p.fb[k] = L;
  }
  return p;
}

}  // namespace ileg::io
