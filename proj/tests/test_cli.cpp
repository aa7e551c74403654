// Copyright 2026 The mpsntk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "harness/config.hpp"
#include "harness/experiments.hpp"

using namespace mpsntk::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(MPSNTK_SOURCE_DIR) / "configs";

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool names_field(const ParseResult& r, const std::string& field) {
  for (const auto& d : r.diagnostics) {
    if (d.field == field) return true;
  }
  return false;
}

ParseResult parse(const std::string& text) { return parse_config(text, kConfigs); }

const char* kGp = R"(
experiment = gp-test
sites = 3
bond_dims = 2, 6
feature_map = trig_pair
dataset = uniform
points = 4
trials = 500
seed = 11
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mpsntk_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + std::string(MPSNTK_CLI_PATH) + "' " + args +
                          " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("bundled configs validate cleanly") {
  for (const auto& name : experiment_names()) {
    const auto r = load_config(kConfigs / (name + ".cfg"));
    for (const auto& d : r.diagnostics) MESSAGE(name << ": " << d.field << ": " << d.message);
    CHECK(r.diagnostics.empty());
    REQUIRE(r.config);
    CHECK(experiment_name(r.config->experiment) == name);
  }
}

TEST_CASE("diagnostics name the offending field") {
  CHECK(parse(kGp).diagnostics.empty());
  CHECK(names_field(parse(std::string(kGp) + "colour = blue\n"), "colour"));
  std::string no_data = kGp;
  no_data.replace(no_data.find("dataset = uniform"), 17, "");
  CHECK(names_field(parse(no_data), "dataset"));
  std::string zero = kGp;
  zero.replace(zero.find("2, 6"), 4, "0, 6");
  CHECK(names_field(parse(zero), "bond_dims"));
  CHECK(names_field(parse(std::string(kGp) + "seed = 3\n"), "seed"));
  CHECK(names_field(parse(std::string(kGp) + "kernel = gaussian\n"), "kernel"));
  CHECK(names_field(parse("experiment = nope\n"), "experiment"));
  CHECK(names_field(parse("sites = 3\n"), "experiment"));
  CHECK(!parse("this line has no separator\n").diagnostics.empty());
  std::string few = kGp;
  few.replace(few.find("trials = 500"), 12, "trials = 20");
  CHECK(names_field(parse(few), "trials"));
  std::string sig = kGp;
  CHECK(names_field(parse(sig + "sigmas = 1, 2\n"), "sigmas"));
  CHECK(names_field(parse(sig + "sigma = -1\n"), "sigma"));
  CHECK(names_field(parse(sig + "phys_dim = 3\n"), "phys_dim"));
  CHECK(names_field(parse(sig + "rff_width = 8\n"), "rff_width"));
}

TEST_CASE("Born experiments enforce the enumeration guard") {
  const char* born = R"(
experiment = born-flow
sites = 25
bond_dim = 4
dataset = random_binary
points = 4
)";
  const auto r = parse(born);
  REQUIRE(names_field(r, "sites"));
  CHECK(r.diagnostics.front().message.find("22") != std::string::npos);
  CHECK(names_field(parse("experiment = z-dist\nsites = 4\nbond_dim = 2\nfeature_map = trig_pair\n"),
                    "feature_map"));
}

TEST_CASE("dataset domain and label checks") {
  const char* flow = R"(
experiment = rmse-flow
sites = 2
bond_dim = 2
feature_map = born_binary
dataset = inline
inputs = 0, 1; 1, 0.5
labels = 1
)";
  CHECK(names_field(parse(flow), "inputs"));
  std::string ok = flow;
  ok.replace(ok.find("0.5"), 3, "1");
  const auto r = parse(ok);
  REQUIRE(r.config);
  CHECK(r.config->labels == std::vector<double>{1.0, 1.0});
  CHECK(names_field(parse(ok + "points = 3\n"), "points"));
  std::string wrong_len = ok;
  wrong_len.replace(wrong_len.find("labels = 1"), 10, "labels = 1, 2, 3");
  CHECK(names_field(parse(wrong_len), "labels"));
  std::string missing = ok;
  missing.replace(missing.find("labels = 1"), 10, "");
  CHECK(names_field(parse(missing), "labels"));
  std::string bad_file = ok;
  bad_file.replace(bad_file.find("dataset = inline"), 16, "dataset = file");
  bad_file.replace(bad_file.find("inputs = 0, 1; 1, 1"), 19, "dataset_file = nowhere.csv");
  CHECK(names_field(parse(bad_file), "dataset_file"));
}

TEST_CASE("file datasets carry labels and resolve relative to the config") {
  const auto r = load_config(kConfigs / "rmse-flow.cfg");
  REQUIRE(r.config);
  CHECK(r.config->inputs.size() == 8);
  CHECK(r.config->inputs[0].size() == 4);
  CHECK(r.config->labels.size() == 8);
  CHECK(r.config->labels[1] == -0.5);
}

TEST_CASE("generated datasets") {
  const auto eq = parse_config(
      "experiment = ensemble-check\nsites = 3\nbond_dim = 2\nfeature_map = trig_pair\n"
      "dataset = equispaced\npoints = 4\n",
      ".");
  REQUIRE(eq.config);
  CHECK(eq.config->inputs.size() == 4);
  CHECK(eq.config->inputs[0][0] == doctest::Approx(0.0625));
  CHECK(eq.config->inputs[3][2] == doctest::Approx(0.9375));
  const auto gp = parse(kGp);
  REQUIRE(gp.config);
  CHECK(gp.config->trial_inputs(0) == gp.config->inputs);
  CHECK(gp.config->trial_inputs(1) != gp.config->inputs);
  for (const auto& row : gp.config->inputs) {
    for (double v : row) CHECK((v >= 0.0 && v < 1.0));
  }
}

TEST_CASE("config hash follows content and seed") {
  const auto a = parse(kGp);
  const auto b = parse(std::string("# comment\n") + kGp);
  const auto c = parse_config(kGp, kConfigs, std::nullopt, 12);
  REQUIRE(a.config);
  REQUIRE(b.config);
  REQUIRE(c.config);
  CHECK(a.config->hash() == b.config->hash());
  CHECK(a.config->hash() != c.config->hash());
  CHECK(c.config->seed == 12);
  CHECK(c.config->seed_from_env);
  CHECK(run_directory(*a.config, "out").filename().string() == "gp-test-" + a.config->hash().substr(0, 12));
}

TEST_CASE("experiments are byte-reproducible and thread-independent") {
  const auto cfg = *parse(kGp).config;
  const RunOutput x = run_experiment(cfg);
  const RunOutput y = run_experiment(cfg);
  const RunOutput z = run_experiment(cfg, 4);
  REQUIRE(x.artifacts.size() == 3);
  for (std::size_t i = 0; i < x.artifacts.size(); ++i) {
    CHECK(x.artifacts[i].name == y.artifacts[i].name);
    CHECK(x.artifacts[i].content == y.artifacts[i].content);
    CHECK(x.artifacts[i].content == z.artifacts[i].content);
  }
  CHECK(manifest(cfg, x).dump() == manifest(cfg, z).dump());
}

TEST_CASE("every experiment runs on a small config") {
  const char* configs[] = {
      "experiment = ntk-converge\nsites = 3\nbond_dims = 2, 4\nfeature_map = trig_pair\n"
      "dataset = uniform\npoints = 3\ntrials = 2\n",
      "experiment = pd-check\nsites = 3\nfeature_map = trig_pair\ndataset = uniform\npoints = 5\ntrials = 3\n",
      "experiment = rmse-flow\nsites = 3\nbond_dim = 3\nfeature_map = trig_pair\ndataset = uniform\n"
      "points = 3\nlabels = 0.5\nt_end = 0.5\ndt = 0.1\ntrials = 2\n",
      "experiment = lazy-train\nsites = 3\nbond_dims = 2, 4\nfeature_map = trig_pair\ndataset = uniform\n"
      "points = 3\nlabels = 0.5\nt_end = 0.5\ndt = 0.1\n",
      "experiment = born-flow\nsites = 3\nbond_dim = 3\ndataset = random_binary\npoints = 2\n"
      "t_end = 0.5\ndt = 0.1\n",
      "experiment = z-dist\nsites = 3\nbond_dim = 3\ntrials = 200\n",
      "experiment = gp-test\nsites = 2\nbond_dims = 2\nfeature_map = trig_pair\ndataset = uniform\n"
      "points = 2\ntrials = 500\n",
      "experiment = ensemble-check\nsites = 2\nbond_dim = 2\nfeature_map = trig_pair\n"
      "dataset = equispaced\npoints = 3\n",
  };
  for (const char* text : configs) {
    const auto r = parse(text);
    for (const auto& d : r.diagnostics) MESSAGE(text << d.field << ": " << d.message);
    REQUIRE(r.config);
    const RunOutput out = run_experiment(*r.config);
    CHECK(!out.artifacts.empty());
    for (const auto& a : out.artifacts) {
      CHECK(!a.content.empty());
      CHECK(a.content.back() == '\n');
      CHECK(a.content.find('\r') == std::string::npos);
    }
  }
}

TEST_CASE("ensemble check reproduces the chain") {
  const auto r = parse(
      "experiment = ensemble-check\nsites = 3\nbond_dim = 3\nfeature_map = trig_pair\n"
      "dataset = uniform\npoints = 6\ntrials = 4\n");
  const RunOutput out = run_experiment(*r.config);
  CHECK(out.results["members"] == 8);
  CHECK(out.results["max_relative_difference"].get<double>() < 1e-12);
}

TEST_CASE("run directories are never overwritten silently") {
  const fs::path dir = scratch("write");
  const auto cfg = *parse(kGp).config;
  const RunOutput out = run_experiment(cfg);
  const fs::path run = write_run(cfg, out, dir, false, "log\n");
  CHECK(fs::exists(run / "manifest.json"));
  CHECK(fs::exists(run / "gp_summary.csv"));
  CHECK(read(run / "run.log") == "log\n");
  CHECK_THROWS(write_run(cfg, out, dir, false, "again\n"));
  write_run(cfg, out, dir, true, "again\n");
  CHECK(read(run / "run.log") == "again\n");
  const auto m = nlohmann::json::parse(read(run / "manifest.json"));
  CHECK(m["seed"] == 11);
  CHECK(m["config"]["experiment"] == "gp-test");
  CHECK(m["artifacts"].size() == out.artifacts.size());
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("exit");
  {
    std::ofstream(dir / "ok.cfg") << kGp;
    std::string d0 = kGp;
    d0.replace(d0.find("2, 6"), 4, "0");
    std::ofstream(dir / "d0.cfg") << d0;
    std::ofstream(dir / "born.cfg") << "experiment = born-flow\nsites = 25\nbond_dim = 2\n"
                                       "dataset = random_binary\npoints = 2\n";
    std::ofstream(dir / "unknown.cfg") << kGp << "colour = blue\n";
    std::ofstream(dir / "diverge.cfg")
        << "experiment = rmse-flow\nsites = 2\nbond_dim = 2\nfeature_map = trig_pair\n"
           "dataset = uniform\npoints = 2\nlabels = 1\nlr_scale = 1000\ndt = 1\nt_end = 50\n"
           "integrator = euler\n";
  }
  CHECK(run_cli("validate --config ok.cfg", dir) == 0);
  CHECK(read(dir / "stdout.txt").empty());
  CHECK(run_cli("validate --config unknown.cfg", dir) == 2);
  CHECK(read(dir / "stdout.txt").find("field=colour") != std::string::npos);
  CHECK(run_cli("run --config d0.cfg", dir) == 2);
  CHECK(read(dir / "stderr.txt").find("field=bond_dims") != std::string::npos);
  CHECK(run_cli("run --config born.cfg", dir) == 2);
  CHECK(read(dir / "stderr.txt").find("sites <= 22") != std::string::npos);
  CHECK(run_cli("run --config missing.cfg", dir) == 2);
  CHECK(run_cli("run --config diverge.cfg", dir) == 3);
  CHECK(read(dir / "stderr.txt").find("kind=numerical") != std::string::npos);

  CHECK(run_cli("run --config ok.cfg --out a", dir) == 0);
  CHECK(run_cli("run --config ok.cfg --out a", dir) == 1);
  CHECK(run_cli("gp-test --config ok.cfg --out b --threads 3", dir) == 0);
  const auto cfg = *parse(kGp).config;
  const std::string leaf = run_directory(cfg, "").string();
  for (const char* f : {"gp_summary.csv", "covariance_D2.csv", "covariance_D6.csv", "manifest.json"}) {
    CHECK(read(dir / "a" / leaf / f) == read(dir / "b" / leaf / f));
  }
  CHECK(run_cli("pd-check --config ok.cfg --out c", dir) == 2);
  CHECK(setenv("MPSNTK_SEED", "5", 1) == 0);
  CHECK(run_cli("run --config ok.cfg --out d", dir) == 0);
  unsetenv("MPSNTK_SEED");
  const auto seeded = *parse_config(kGp, ".", std::nullopt, 5).config;
  CHECK(fs::exists(run_directory(seeded, dir / "d") / "manifest.json"));
  fs::remove_all(dir);
}
