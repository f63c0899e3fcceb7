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

// ileg command-line front end.
//
//   ileg solve    --config cliff.json --sigma 45,35,0,-45,-100 --out runs/fig2
//   ileg evaluate --run runs/fig2 --samples 2000 --seed 7

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ileg/ileg.hpp"
#include "ileg/io.hpp"

#ifndef ILEG_VERSION
#define ILEG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitExistence = 2;
constexpr int kExitNotConverged = 3;

std::vector<double> parse_sigma_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ileg::ConfigError("--sigma: cannot parse \"" + item + "\"");
    }
    if (used != item.size() || !std::isfinite(v)) throw ileg::ConfigError("--sigma: cannot parse \"" + item + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ileg::ConfigError("--sigma: empty list");
  return out;
}

ordered_json solver_json(const ileg::SolverConfig& c) {
  ordered_json j;
  j["grid_steps"] = c.grid_steps;
  j["max_iterations"] = c.max_iterations;
  j["cost_tolerance"] = c.cost_tolerance;
  j["fd_step"] = c.fd_step;
  j["line_search_shrink"] = c.line_search_shrink;
  j["line_search_min_alpha"] = c.line_search_min_alpha;
  j["rng_seed"] = c.rng_seed;
  j["mc_samples"] = c.mc_samples;
  return j;
}

ileg::SolverConfig solver_from_json(const nlohmann::json& j) {
  ileg::SolverConfig c;
  c.grid_steps = j.at("grid_steps").get<int>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.cost_tolerance = j.at("cost_tolerance").get<double>();
  c.fd_step = j.at("fd_step").get<double>();
  c.line_search_shrink = j.at("line_search_shrink").get<double>();
  c.line_search_min_alpha = j.at("line_search_min_alpha").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.mc_samples = j.at("mc_samples").get<int>();
  return c;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ileg::ConfigError("cannot write " + path.string());
  writer(os);
}

struct SolveArgs {
  std::string config;
  std::string sigma;
  std::string out;
  std::optional<int> steps, max_iters, samples;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
};

int cmd_solve(const SolveArgs& a) {
  const ileg::ProblemConfig pc = ileg::read_problem_config(a.config);
  const ileg::ControlProblem problem = ileg::make_problem(pc);
  ileg::SolverConfig cfg;
  if (a.steps) cfg.grid_steps = *a.steps;
  if (a.tol) cfg.cost_tolerance = *a.tol;
  if (a.max_iters) cfg.max_iterations = *a.max_iters;
  if (a.samples) cfg.mc_samples = *a.samples;
  if (a.seed) cfg.rng_seed = *a.seed;
  cfg.validate();
  const std::vector<double> sigmas =
      a.sigma.empty() ? std::vector<double>{problem.risk_param} : parse_sigma_list(a.sigma);

  const std::vector<ileg::SolveResult> results = ileg::sigma_sweep(problem, cfg, sigmas);

  const fs::path out(a.out);
  fs::create_directories(out);

  ordered_json manifest;
  manifest["tool"] = std::string("ileg ") + ILEG_VERSION;
  manifest["problem"] = ileg::to_json(pc);
  manifest["solver"] = solver_json(cfg);
  manifest["results"] = ordered_json::array();

  bool existence = false, other_failure = false;
  for (const auto& r : results) {
    ordered_json e;
    e["sigma"] = r.sigma;
    e["termination"] = ileg::to_string(r.termination);
    e["iterations"] = r.iterations;
    e["final_cost"] = r.final_cost();
    e["message"] = r.message;
    if (r.existence_failure)
      e["existence_failure"] = {{"knot", r.existence_failure->knot},
                                {"min_eigenvalue", r.existence_failure->min_eigenvalue}};
    if (r.termination != ileg::Termination::numerical_error) {
      const std::string traj = ileg::io::file_name("trajectory", r.sigma, "csv");
      const std::string gains = ileg::io::file_name("gains", r.sigma, "csv");
      const std::string costs = ileg::io::file_name("costs", r.sigma, "csv");
      // The closed-loop policy is recoverable from these two files as
      // u = u_k + L_k (x - x_k) about the final nominal.
      write_file(out / traj, [&](std::ostream& os) { ileg::io::write_trajectory_csv(os, r.nominal); });
      write_file(out / gains, [&](std::ostream& os) { ileg::io::write_gains_csv(os, r.policy); });
      write_file(out / costs, [&](std::ostream& os) { ileg::io::write_costs_csv(os, r); });
      e["files"] = {{"trajectory", traj}, {"gains", gains}, {"costs", costs}};
    }
    manifest["results"].push_back(e);

    if (r.termination == ileg::Termination::existence_violation) {
      existence = true;
      std::cerr << "sigma=" << ileg::io::sigma_label(r.sigma) << ": " << r.message << "\n";
    } else if (r.termination != ileg::Termination::converged) {
      other_failure = true;
      std::cerr << "sigma=" << ileg::io::sigma_label(r.sigma) << ": " << ileg::to_string(r.termination)
                << (r.message.empty() ? "" : ": " + r.message) << "\n";
    }
  }
  write_file(out / "manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << "\n"; });

  if (existence) return kExitExistence;
  if (other_failure) return kExitNotConverged;
  return kExitOk;
}

struct EvaluateArgs {
  std::string run;
  std::string sigma;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  double noise_scale = 1.0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const fs::path run(a.run);
  std::ifstream in(run / "manifest.json");
  if (!in) throw ileg::ConfigError("no manifest.json in " + run.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ileg::ConfigError("manifest.json: " + std::string(e.what()));
  }
  const ileg::ProblemConfig pc = ileg::parse_problem_config(manifest.at("problem").dump(), "manifest problem");
  const ileg::ControlProblem base = ileg::make_problem(pc);
  ileg::SolverConfig cfg = solver_from_json(manifest.at("solver"));
  if (a.samples) cfg.mc_samples = *a.samples;
  if (a.seed) cfg.rng_seed = *a.seed;
  cfg.validate();
  if (!(a.noise_scale >= 0.0)) throw ileg::ConfigError("--noise-scale must be >= 0");

  std::optional<std::vector<double>> wanted;
  if (!a.sigma.empty()) wanted = parse_sigma_list(a.sigma);

  std::vector<double> done;
  for (const auto& e : manifest.at("results")) {
    const double sigma = e.at("sigma").get<double>();
    if (wanted && std::find(wanted->begin(), wanted->end(), sigma) == wanted->end()) continue;
    if (!e.contains("files")) continue;
    ileg::ControlProblem problem = base.with_risk_param(sigma);
    problem.noise_covariance *= a.noise_scale * a.noise_scale;
    const auto& files = e.at("files");
    const ileg::AffinePolicy policy =
        ileg::io::read_policy((run / files.at("trajectory").get<std::string>()).string(),
                              (run / files.at("gains").get<std::string>()).string(), problem.state_dim,
                              problem.control_dim);
    const ileg::MonteCarloResult mc = ileg::monte_carlo(problem, policy, cfg);
    const ileg::CumulantReport cr = ileg::cumulant_report(mc.stats);

    const std::string samples = ileg::io::file_name("samples", sigma, "csv");
    const std::string bands = ileg::io::file_name("bands", sigma, "csv");
    const std::string stats = ileg::io::file_name("stats", sigma, "json");
    write_file(run / samples, [&](std::ostream& os) { ileg::io::write_samples_csv(os, mc.stats); });
    write_file(run / bands, [&](std::ostream& os) { ileg::io::write_bands_csv(os, mc); });

    ordered_json j;
    j["sigma"] = sigma;
    j["n_samples"] = mc.stats.n_samples;
    j["seed"] = mc.stats.seed;
    j["noise_scale"] = a.noise_scale;
    j["mean"] = mc.stats.mean;
    j["variance"] = mc.stats.variance;
    j["skewness"] = mc.stats.skewness;
    j["risk_objective"] = mc.stats.risk_objective;
    j["cumulants"] = {{"one_term", cr.one_term}, {"two_term", cr.two_term}, {"three_term", cr.three_term}};
    ordered_json widths = ordered_json::array();
    for (int i = 0; i < problem.state_dim; ++i) widths.push_back(ileg::io::mean_band_width(mc, i));
    j["mean_band_sd"] = widths;
    j["files"] = {{"samples", samples}, {"bands", bands}};
    write_file(run / stats, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
    done.push_back(sigma);
  }
  if (wanted) {
    for (double s : *wanted)
      if (std::find(done.begin(), done.end(), s) == done.end())
        throw ileg::ConfigError("sigma " + ileg::io::sigma_label(s) + " has no solved policy in " + run.string());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive iterative linear-quadratic trajectory optimization"};
  app.set_version_flag("--version", std::string("ileg ") + ILEG_VERSION);
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem for one or more sigma values");
  solve_cmd->add_option("--config", solve.config, "Problem config JSON")->required();
  solve_cmd->add_option("--sigma", solve.sigma, "Comma-separated sigma list (default: config sigma)");
  solve_cmd->add_option("--out", solve.out, "Output directory")->required();
  solve_cmd->add_option("--steps", solve.steps, "Grid intervals N");
  solve_cmd->add_option("--tol", solve.tol, "Relative cost tolerance");
  solve_cmd->add_option("--max-iters", solve.max_iters, "Iteration cap");
  solve_cmd->add_option("--samples", solve.samples, "Monte-Carlo samples recorded for evaluate");
  solve_cmd->add_option("--seed", solve.seed, "RNG seed recorded for evaluate");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo evaluation of solved policies");
  eval_cmd->add_option("--run", eval.run, "Directory written by solve")->required();
  eval_cmd->add_option("--sigma", eval.sigma, "Comma-separated subset of solved sigma values");
  eval_cmd->add_option("--samples", eval.samples, "Number of stochastic rollouts");
  eval_cmd->add_option("--seed", eval.seed, "RNG seed");
  eval_cmd->add_option("--noise-scale", eval.noise_scale, "Multiplier on the noise standard deviations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve);
    return cmd_evaluate(eval);
  } catch (const ileg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed manifest: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotConverged;
  }
}
