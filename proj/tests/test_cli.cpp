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
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(ILEG_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + ILEG_CLI_PATH + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::string config(const std::string& name) { return std::string(ILEG_CONFIG_DIR) + "/" + name; }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name == "stdout.txt" || name == "stderr.txt") continue;
    files[name] = slurp(e.path());
  }
  return files;
}

}  // namespace

TEST(Cli, ScalarLqConvergesAtIterationTwo) {
  const auto dir = scratch("scalar");
  const auto r = run("solve --config " + config("scalar_lq.json") + " --sigma 0 --out " + (dir / "run").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir / "run" / "manifest.json");
  ASSERT_EQ(m["results"].size(), 1u);
  EXPECT_EQ(m["results"][0]["termination"], "converged");
  EXPECT_EQ(m["results"][0]["iterations"], 2);
  for (const char* f : {"trajectory_sigma0.csv", "gains_sigma0.csv", "costs_sigma0.csv"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
}

TEST(Cli, OutputSchemas) {
  const auto dir = scratch("schema");
  const auto out = dir / "run";
  ASSERT_EQ(run("solve --config " + config("cliff.json") + " --sigma 0,-45 --out " + out.string(), dir).code, 0);
  auto header = [&](const std::string& f) {
    std::ifstream in(out / f);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(header("trajectory_sigma0.csv"), "t,x0,x1,x2,x3,u0,u1");
  EXPECT_EQ(header("gains_sigma-45.csv"),
            "t,l0,l1,L0_0,L0_1,L0_2,L0_3,L1_0,L1_1,L1_2,L1_3");
  EXPECT_EQ(header("costs_sigma0.csv").substr(0, 20), "iteration,cost,alpha");
  const auto m = read_json(out / "manifest.json");
  for (const auto& res : m["results"])
    for (const auto& [key, file] : res["files"].items()) EXPECT_TRUE(fs::exists(out / file.get<std::string>())) << file;

  ASSERT_EQ(run("evaluate --run " + out.string() + " --sigma 0 --samples 50 --seed 3", dir).code, 0);
  EXPECT_EQ(header("bands_sigma0.csv").substr(0, 43), "t,mean_x0,sd_x0,lo_x0,hi_x0,lo15_x0,hi15_x0");
  const auto st = read_json(out / "stats_sigma0.json");
  for (const char* key : {"mean", "variance", "skewness", "risk_objective", "cumulants", "n_samples", "seed"})
    EXPECT_TRUE(st.contains(key)) << key;
  EXPECT_EQ(st["n_samples"], 50);
  EXPECT_EQ(st["seed"], 3);
}

TEST(Cli, ExistenceFailureExitsTwo) {
  const auto dir = scratch("existence");
  const auto r = run("solve --config " + config("cliff.json") + " --sigma 1e6 --out " + (dir / "run").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("existence condition"), std::string::npos) << r.err;
  const auto m = read_json(dir / "run" / "manifest.json");
  EXPECT_EQ(m["results"][0]["termination"], "existence_violation");
  EXPECT_EQ(m["results"][0]["existence_failure"]["knot"], 0);
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run("solve --out " + (dir / "x").string(), dir).code, 1);
  EXPECT_EQ(run("solve --config " + config("cliff.json") + " --out " + (dir / "x").string() + " --bogus", dir).code, 1);
  EXPECT_EQ(run("solve --config " + config("cliff.json") + " --sigma a,b --out " + (dir / "x").string(), dir).code, 1);
  std::ofstream(dir / "bad.json") << "{\"preset\": \"cliff_world\", \"sigmaa\": 1}";
  auto r = run("solve --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sigmaa"), std::string::npos) << r.err;
  r = run("evaluate --run " + (dir / "missing").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("manifest"), std::string::npos) << r.err;
}

TEST(Cli, EvaluateUnsolvedSigmaIsAnError) {
  const auto dir = scratch("unsolved");
  const auto out = dir / "run";
  ASSERT_EQ(run("solve --config " + config("scalar_lq.json") + " --out " + out.string(), dir).code, 0);
  EXPECT_EQ(run("evaluate --run " + out.string() + " --sigma 3", dir).code, 1);
}

TEST(Cli, ZeroNoiseOverrideGivesZeroVariance) {
  const auto dir = scratch("noise");
  const auto out = dir / "run";
  ASSERT_EQ(run("solve --config " + config("cliff.json") + " --sigma 0 --out " + out.string(), dir).code, 0);
  ASSERT_EQ(run("evaluate --run " + out.string() + " --samples 20 --noise-scale 0", dir).code, 0);
  const auto st = read_json(out / "stats_sigma0.json");
  EXPECT_NEAR(st["variance"].get<double>(), 0.0, 1e-20);
}

TEST(Cli, RepeatedRunsAreByteIdenticalAndEvaluateLeavesSolveOutputs) {
  const auto dir = scratch("determinism");
  std::map<std::string, std::string> files[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = dir / ("run" + std::to_string(i));
    ASSERT_EQ(run("solve --config " + config("cliff.json") + " --sigma 45,-100 --out " + out.string(), dir).code, 0);
    const auto before = outputs(out);
    ASSERT_EQ(run("evaluate --run " + out.string() + " --samples 200 --seed 7", dir).code, 0);
    const auto after = outputs(out);
    for (const auto& [name, body] : before) EXPECT_EQ(after.at(name), body) << name;
    files[i] = after;
  }
  ASSERT_EQ(files[0].size(), files[1].size());
  for (const auto& [name, body] : files[0]) {
    ASSERT_TRUE(files[1].count(name)) << name;
    EXPECT_TRUE(body == files[1][name]) << name << " differs";
  }
  EXPECT_TRUE(files[0].count("stats_sigma-100.json"));
  EXPECT_TRUE(files[0].count("bands_sigma45.csv"));
  EXPECT_TRUE(files[0].count("samples_sigma45.csv"));
}
