// Copyright 2026 The dysoncirc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <sys/wait.h>

#include "dysoncirc/commands.hpp"
#include "dysoncirc/config.hpp"

using namespace dysoncirc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("dyson_circ_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
  json error() const { return json::parse(err.substr(err.rfind("{\"error\""))); }
};

Run run(const std::vector<std::string> &args) {
  std::vector<const char *> argv = {"dyson_circ"};
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Run run_config(const std::string &command, const json &cfg, const fs::path &dir,
               std::vector<std::string> extra = {}) {
  fs::path c = dir / "config.json";
  std::ofstream(c) << cfg.dump(2);
  std::vector<std::string> args = {command, "--config", c.string(), "--out", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

json circular_density() {
  return {{"model", {{"type", "averaging"}}}, {"dimension", 3}, {"density", {{"points", 64}}}};
}

json small_simulate(int n) {
  return {{"model", {{"type", "averaging"}}},
          {"dimension", 1},
          {"seed", 42},
          {"simulate", {{"n", n}, {"probes", 8}, {"girko", {{"points", 16}}}}}};
}

// sigma column of a profile CSV
std::vector<double> sigma_column(const std::string &csv) {
  std::istringstream in(csv);
  std::vector<double> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#' || line.rfind("tau,", 0) == 0) continue;
    std::stringstream ls(line);
    std::string cell;
    for (int k = 0; k < 3; ++k) std::getline(ls, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace

TEST_CASE("density: circular config") {
  fs::path d = scratch("density");
  Run r = run_config("density", circular_density(), d);
  REQUIRE(r.code == 0);
  std::string csv = slurp(d / "density.csv");
  std::vector<double> s = sigma_column(csv);
  REQUIRE(s.size() == 64);
  for (double v : s) CHECK(std::abs(v - 1 / std::numbers::pi) <= 1e-6);

  RunConfig cfg = parse_config(circular_density(), "density", std::nullopt, 1);
  CHECK(csv.find("# config_hash " + cfg.hash) != std::string::npos);
  CHECK(csv.find("# dyson_circ " + std::string(kVersion)) != std::string::npos);
  json j = json::parse(slurp(d / "density.json"));
  CHECK(j.at("config_hash") == cfg.hash);
  CHECK(j.at("version") == kVersion);
  CHECK(std::abs(j.at("profile").at("normalization").get<double>() - 1) < 1e-6);
  CHECK(r.out == csv);
}

TEST_CASE("density: Kronecker config normalizes") {
  fs::path d = scratch("kron");
  json cfg = {{"model",
               {{"type", "kronecker"},
                {"coefficients",
                 {{{1.0, 0.0}, {0.0, 0.6}},
                  {{"real", {{0, 0}, {0, 0}}}, {"imag", {{0.3, 0.8}, {0.5, 0.2}}}}}}}},
              {"density", {{"points", 64}}}};
  Run r = run_config("density", cfg, d, {"--format", "json"});
  REQUIRE(r.code == 0);
  json report = json::parse(r.out);
  CHECK(std::abs(report.at("normalization").get<double>() - 1) < 1e-3);
}

TEST_CASE("schema errors exit 2 with machine-readable JSON") {
  fs::path d = scratch("schema");
  Run missing = run_config("density", json{{"dimension", 3}}, d);
  CHECK(missing.code == 2);
  CHECK(missing.error().at("error").at("kind") == "schema");
  CHECK(missing.error().at("error").at("exit_code") == 2);

  json negative = {{"model", {{"type", "variance_profile"}, {"s", {{1, -2}, {3, 4}}}}}};
  Run neg = run_config("check", negative, d);
  CHECK(neg.code == 2);
  CHECK(neg.error().at("error").at("message").get<std::string>().find("negative") != std::string::npos);

  json unknown = circular_density();
  unknown["density"]["pionts"] = 3;
  CHECK(run_config("density", unknown, d).code == 2);

  json one_point = circular_density();
  one_point["density"]["points"] = 1;
  CHECK(run_config("density", one_point, d).code == 2);

  CHECK(run({"density", "--config", (d / "nope.json").string()}).code == 2);
  CHECK(run({"density"}).code == 2);
  CHECK(run({"frobnicate", "--config", "x"}).code == 2);
}

TEST_CASE("simulate: invalid dimension") {
  fs::path d = scratch("sim0");
  Run r = run_config("simulate", small_simulate(0), d);
  CHECK(r.code == 2);
  CHECK(r.error().at("error").at("kind") == "dimension");
}

TEST_CASE("simulate: report fields and determinism") {
  fs::path a = scratch("simA"), b = scratch("simB"), c = scratch("simC");
  json cfg = small_simulate(128);
  Run ra = run_config("simulate", cfg, a);
  REQUIRE(ra.code == 0);
  Run rb = run_config("simulate", cfg, b);
  Run rc = run_config("simulate", cfg, c, {"--threads", "3"});
  for (const char *f : {"spectrum.csv", "spectrum.json", "report.json"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  json rep = json::parse(slurp(a / "report.json"));
  REQUIRE(rep.contains("checks"));
  for (const char *k : {"outliers", "radial_cdf", "angle_uniformity", "resolvent", "small_singular",
                        "delocalization", "smallest_singular", "girko"}) {
    CAPTURE(k);
    REQUIRE(rep.at("checks").contains(k));
    CHECK(rep.at("checks").at(k).at("pass").is_boolean());
  }
  CHECK(rep.contains("all_pass"));
  std::string csv = slurp(a / "spectrum.csv");
  CHECK(csv.find("sample,re,im") != std::string::npos);
  CHECK(csv.find("# config_hash ") != std::string::npos);

  Run seeded = run_config("simulate", cfg, c, {"--seed", "43"});
  REQUIRE(seeded.code == 0);
  CHECK(slurp(c / "spectrum.csv") != slurp(a / "spectrum.csv"));
}

TEST_CASE("check: default suite and precondition rejection") {
  fs::path d = scratch("check");
  json cfg = {{"model", {{"type", "averaging"}}}, {"dimension", 2}, {"check", {{"taus", {1.5}}}}};
  Run r = run_config("check", cfg, d, {"--format", "json"});
  CHECK(r.code == 0);
  json rep = json::parse(r.out);
  CHECK(rep.at("all_pass") == true);
  int rejected = 0, passed = 0;
  for (const auto &e : rep.at("entries")) {
    if (e.at("status") == "precondition_rejected") {
      ++rejected;
      CHECK(e.at("tau").get<double>() == 1.5);
    }
    if (e.at("status") == "pass") ++passed;
    CHECK(e.at("status") != "fail");
  }
  CHECK(rejected == 1);
  CHECK(passed > 10);
}

TEST_CASE("brown") {
  fs::path d = scratch("brown");
  json cfg = {{"brown", {{"coefficients", {{{1, 0}, {0, 1}}}}}}, {"density", {{"points", 16}}}};
  Run r = run_config("brown", cfg, d);
  REQUIRE(r.code == 0);
  for (double v : sigma_column(slurp(d / "brown.csv"))) CHECK(std::abs(v - 1 / std::numbers::pi) <= 1e-6);

  json diag = {{"brown", {{"coefficients", {{{0.5, 0}, {0, 1}}}}}}, {"density", {{"points", 16}}}};
  Run w = run_config("brown", diag, d);
  REQUIRE(w.code == 0);
  CHECK(w.err.find("warning: ") != std::string::npos);
  CHECK(json::parse(slurp(d / "brown.json")).at("flatness_warning") == true);
  CHECK(slurp(d / "brown.csv").find("# warning ") != std::string::npos);

  json empty = {{"brown", {{"coefficients", json::array()}}}};
  CHECK(run_config("brown", empty, d).code == 2);
}

TEST_CASE("threads from the environment") {
  fs::path d = scratch("env");
  ::setenv("DYSON_CIRC_THREADS", "zero", 1);
  CHECK(run_config("density", circular_density(), d).code == 2);
  ::setenv("DYSON_CIRC_THREADS", "2", 1);
  CHECK(run_config("density", circular_density(), d).code == 0);
  ::unsetenv("DYSON_CIRC_THREADS");
}

TEST_CASE("installed binary") {
  const char *bin = std::getenv("DYSON_CIRC_BIN");
  if (!bin) {
    MESSAGE("DYSON_CIRC_BIN not set; binary checks skipped");
    return;
  }
  fs::path d = scratch("bin");
  std::ofstream(d / "config.json") << small_simulate(64).dump();
  std::ofstream(d / "bad.json") << json{{"model", {{"type", "averaging"}}}, {"dimension", 1},
                                       {"simulate", {{"n", 0}}}}.dump();
  const std::string base = std::string(bin) + " simulate --config ";
  auto sh = [](const std::string &cmd) {
    int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(sh(base + (d / "config.json").string() + " --out " + (d / "a").string() + " > /dev/null 2>&1") == 0);
  CHECK(sh(base + (d / "config.json").string() + " --out " + (d / "b").string() + " > /dev/null 2>&1") == 0);
  CHECK(slurp(d / "a" / "spectrum.csv") == slurp(d / "b" / "spectrum.csv"));
  CHECK(sh(base + (d / "bad.json").string() + " 2> " + (d / "err.txt").string()) == 2);
  json e = json::parse(slurp(d / "err.txt"));
  CHECK(e.at("error").at("exit_code") == 2);
  CHECK(sh(std::string(bin) + " --version > /dev/null") == 0);
}
