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
// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "ileg/ileg.hpp"
#include "test_support.hpp"

using namespace ileg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::array<double, 5> kSweep = {45.0, 35.0, 0.0, -45.0, -100.0};

const std::vector<SolveResult>& cliff_sweep() {
  static const std::vector<SolveResult> results = sigma_sweep(make_cliff_world(), SolverConfig{}, kSweep);
  return results;
}

const SolveResult& sweep_at(double sigma) {
  for (const auto& r : cliff_sweep())
    if (r.sigma == sigma) return r;
  throw std::logic_error("sigma not in sweep");
}

Outcome riccati_oracle() {
  const auto t0 = Clock::now();
  const double s0 = backward_pass(testing::scalar_lq_model(0.0, 10.0, 10000)).S[0](0, 0);
  const double s5 = backward_pass(testing::scalar_lq_model(0.5, 10.0, 10000)).S[0](0, 0);
  const double t = seconds_since(t0);
  const bool ok = std::abs(s0 - 1.0) <= 1e-5 && std::abs(s5 - 1.414214) <= 1e-5 && t < 1.0;
  return {ok, format("S(0)=%.7f (sigma 0), %.7f (sigma 0.5), %.3f s", s0, s5, t)};
}

Outcome neutral_reduction() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4, m = 1 + (trial / 4) % 2;
    const auto sys = testing::random_lti(rng, n, m);
    const auto lq = testing::constant_lq(sys.A, sys.B, Matrix::Identity(n, n), Matrix::Identity(n, n), sys.Q,
                                         sys.R, sys.Qf, 0.0, 1.0, 1000);
    const auto v = backward_pass(lq);
    const Matrix ref =
        testing::reference_riccati(sys.A, sys.B, Matrix::Zero(n, n), sys.Q, sys.R, sys.Qf, 0.0, 1.0, 8000);
    worst = std::max(worst, testing::rel_err(v.S[0], ref));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 10.0, format("max relative error %.2e over 20 systems, %.3f s", worst, t)};
}

Outcome lq_one_shot() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double sigma : {0.0, 0.5, -1.0}) {
    const auto r = ileg_solve(make_scalar_lq(0, 1, 1, 1, 1, sigma, 1.0), SolverConfig{});
    const double rel = r.diagnostics.size() >= 2 ? r.diagnostics[1].relative_change : 1.0;
    ok = ok && r.termination == Termination::converged && r.iterations == 2 && rel <= 1e-9;
    detail += format("sigma %g: %s at %d, change %.1e; ", sigma, to_string(r.termination), r.iterations, rel);
  }
  const double t = seconds_since(t0);
  return {ok && t < 1.0, detail + format("%.3f s", t)};
}

Outcome cliff_convergence() {
  const auto t0 = Clock::now();
  const auto& results = cliff_sweep();
  const double t = seconds_since(t0);
  bool ok = results.size() == kSweep.size();
  std::string detail;
  for (const auto& r : results) {
    ok = ok && r.termination == Termination::converged && r.iterations <= 20;
    detail += format("%g:%d ", r.sigma, r.iterations);
  }
  return {ok && t < 30.0, "iterations " + detail + format("(%s), %.2f s", "dt 0.01", t)};
}

Outcome gain_ordering() {
  const std::size_t N = sweep_at(0).policy.fb.size();
  bool ok = true;
  double min_gap_hi = 1e300, min_gap_lo = 1e300;
  for (std::size_t k = N / 3; k <= 2 * N / 3; ++k) {
    double g[5];
    for (int i = 0; i < 5; ++i) g[i] = std::abs(sweep_at(kSweep[i]).policy.fb[k](1, 1));
    ok = ok && g[0] >= g[1] && g[1] >= g[2] && g[2] >= g[3] && g[3] >= g[4];
    min_gap_hi = std::min(min_gap_hi, (g[0] - g[2]) / g[2]);
    min_gap_lo = std::min(min_gap_lo, (g[2] - g[4]) / g[2]);
  }
  ok = ok && min_gap_hi >= 0.01 && min_gap_lo >= 0.01;
  const std::size_t mid = N / 2;
  return {ok, format("|L_yy| at t=1.5: %.3f %.3f %.3f %.3f %.3f; min gaps %.0f%% / %.0f%%",
                     std::abs(sweep_at(45).policy.fb[mid](1, 1)), std::abs(sweep_at(35).policy.fb[mid](1, 1)),
                     std::abs(sweep_at(0).policy.fb[mid](1, 1)), std::abs(sweep_at(-45).policy.fb[mid](1, 1)),
                     std::abs(sweep_at(-100).policy.fb[mid](1, 1)), 100 * min_gap_hi, 100 * min_gap_lo)};
}

Outcome path_ordering() {
  auto mean_y = [](const Trajectory& t) {
    double s = 0.0;
    for (const auto& x : t.states) s += x(1);
    return s / static_cast<double>(t.states.size());
  };
  SolverConfig cfg;
  cfg.mc_samples = 2000;
  cfg.rng_seed = 7;
  const auto p = make_cliff_world();
  auto band = [&](double sigma) {
    const auto mc = monte_carlo(p.with_risk_param(sigma), sweep_at(sigma).policy, cfg);
    double s = 0.0;
    for (const auto& sd : mc.state_sd) s += sd(1);
    return s / static_cast<double>(mc.state_sd.size());
  };
  const double y_lo = mean_y(sweep_at(-100).nominal), y_hi = mean_y(sweep_at(45).nominal);
  const double b_lo = band(-100), b_hi = band(45);
  return {y_lo > y_hi && b_lo > b_hi,
          format("mean y %.4f (sigma -100) vs %.4f (sigma 45); Y band %.4f vs %.4f", y_lo, y_hi, b_lo, b_hi)};
}

Outcome existence() {
  const auto r = ileg_solve(make_cliff_world(CliffWorldParams{.sigma = 1e6}), SolverConfig{});
  const bool cliff = r.termination == Termination::existence_violation && r.existence_failure &&
                     r.message.find("knot " + std::to_string(r.existence_failure->knot)) != std::string::npos;
  const auto fail = check_existence(testing::scalar_lq_model(2.0, 1.0, 2), 0);
  const auto edge = check_existence(testing::scalar_lq_model(1.0, 1.0, 2), 0);
  return {cliff && !fail.pass && edge.pass,
          format("cliff sigma 1e6: %s at knot %zu; scalar sigma 2 min eig %g (%s); sigma 1 min eig %g (%s)",
                 to_string(r.termination), r.existence_failure ? r.existence_failure->knot : 0,
                 fail.min_eigenvalue, fail.pass ? "pass" : "fail", edge.min_eigenvalue, edge.pass ? "pass" : "fail")};
}

Outcome cumulant_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(5.0, 2.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = g(rng);
  bool ok = true;
  std::string detail;
  for (double s : {0.01, 0.05, 0.1}) {
    const double est = estimate_risk_objective(x, s);
    double m1 = 0.0, m2 = 0.0;
    for (double v : x) {
      const double e = std::exp(s * (v - 5.0));
      m1 += e;
      m2 += e * e;
    }
    m1 /= x.size();
    m2 /= x.size();
    const double se = std::sqrt((m2 - m1 * m1) / x.size()) / (s * m1);
    const double err = std::abs(est - (5.0 + 2.0 * s));
    ok = ok && err <= 3.0 * se;
    detail += format("sigma %g: |err| %.4f <= 3 SE %.4f; ", s, err, 3.0 * se);
  }
  const double t = seconds_since(t0);
  return {ok && t < 5.0, detail + format("%.3f s", t)};
}

Outcome gradient_check() {
  const auto p = make_cliff_world();
  SolverConfig cfg;
  cfg.fd_step = 1e-4;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dy(-6.0, 20.0), dx(-15.0, 15.0);
  Trajectory nom;
  nom.times = Trajectory::uniform_grid(3.0, 100);
  nom.states.resize(101);
  nom.controls.assign(100, Vector::Zero(2));
  for (auto& x : nom.states) {
    x.resize(4);
    x << dx(rng), dy(rng), dx(rng), dx(rng);
  }
  auto mp = p;
  mp.dynamics_jacobian = nullptr;
  const auto c = quadratize_cost(p, nom, cfg);
  const auto lin = linearize_dynamics(mp, nom, cfg);
  Matrix A = Matrix::Zero(4, 4);
  A(0, 2) = A(1, 3) = 1.0;
  double worst = 0.0;
  auto rel = [](const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-12, b.norm()); };
  for (std::size_t k = 0; k < 100; ++k) {
    const double y = nom.states[k](1);
    Vector g = Vector::Zero(4);
    g(1) = -0.1 * std::pow(0.1 * y + 1.0, -11);
    Matrix H = Matrix::Zero(4, 4);
    H(1, 1) = 0.11 * std::pow(0.1 * y + 1.0, -12);
    worst = std::max({worst, rel(c.qx[k], g), rel(c.Q[k], H), rel(lin.A[k], A)});
  }
  const Vector& xf = nom.states.back();
  Vector gf(4);
  gf << 200.0 * (xf(0) - 10.0), 200.0 * xf(1), 20.0 * xf(2), 20.0 * xf(3);
  worst = std::max({worst, rel(c.terminal_qx, gf),
                    rel(c.terminal_Q, Matrix(Eigen::Vector4d(200, 200, 20, 20).asDiagonal()))});
  return {worst <= 1e-5, format("max relative error %.2e over 100 random knots", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int shell(const std::string& args) {
  const std::string cmd = std::string("\"") + ILEG_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path root = ILEG_TEST_TMP;
  fs::remove_all(root);
  std::map<std::string, std::string> files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cfg = std::string(ILEG_CONFIG_DIR) + "/cliff.json";
    if (shell("solve --config " + cfg + " --sigma 45,35,0,-45,-100 --out " + out.string()) != 0)
      return {false, "solve failed"};
    if (shell("evaluate --run " + out.string() + " --samples 2000 --seed 7") != 0) return {false, "evaluate failed"};
    for (const auto& e : fs::directory_iterator(out)) files[i][e.path().filename().string()] = slurp(e.path());
  }
  std::size_t same = 0;
  for (const auto& [name, body] : files[0])
    if (files[1].count(name) && files[1][name] == body) ++same;
  const bool ok = same == files[0].size() && files[0].size() == files[1].size() && !files[0].empty();
  return {ok, format("%zu of %zu files byte-identical", same, files[0].size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"risk-sensitive Riccati steady states", riccati_oracle},
      {"sigma = 0 reduces to LQR", neutral_reduction},
      {"LQ one-shot convergence", lq_one_shot},
      {"cliff-world convergence", cliff_convergence},
      {"gain ordering in sigma", gain_ordering},
      {"safer path and wider band for negative sigma", path_ordering},
      {"existence condition enforcement", existence},
      {"Gaussian cumulant check", cumulant_check},
      {"finite-difference derivative checks", gradient_check},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
