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

// mpsntk: config-driven experiment runner.
//
//   mpsntk run --config PATH [--threads N] [--force] [--out DIR]
//   mpsntk validate --config PATH
//   mpsntk <experiment> --config PATH ...
//
// Exit codes: 0 success, 2 configuration error, 3 numerical abort, 1 other.

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/simd/kernels.hpp"

namespace {

using namespace mpsntk;
using namespace mpsntk::harness;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string quote(std::string s) {
  for (char& c : s) {
    if (c == '"') c = '\'';
    if (c == '\n') c = ' ';
  }
  return "\"" + s + "\"";
}

void report(const std::string& kind, const std::string& field, int code, const std::string& message) {
  std::cerr << "error kind=" << kind << " field=" << (field.empty() ? "-" : field) << " exit=" << code
            << " message=" << quote(message) << "\n";
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const CapacityError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitOther;
}

struct Options {
  std::string config;
  std::size_t threads = 1;
  bool force = false;
  std::string out;
};

std::optional<ExperimentConfig> load(const Options& opt, std::optional<Experiment> hint, int& code) {
  ParseResult parsed;
  try {
    parsed = load_config(opt.config, hint, seed_from_environment());
  } catch (const ConfigError& e) {
    report("config", e.field(), kExitConfig, e.what());
    code = kExitConfig;
    return std::nullopt;
  } catch (const InputError& e) {
    report("config", "", kExitConfig, e.what());
    code = kExitConfig;
    return std::nullopt;
  }
  for (const auto& d : parsed.diagnostics) report("config", d.field, kExitConfig, d.message);
  if (!parsed.config) code = kExitConfig;
  return parsed.config;
}

int do_validate(const Options& opt) {
  ParseResult parsed;
  try {
    parsed = load_config(opt.config, std::nullopt, seed_from_environment());
  } catch (const Error& e) {
    report(e.kind(), "", kExitConfig, e.what());
    return kExitConfig;
  }
  for (const auto& d : parsed.diagnostics) {
    std::cout << "diagnostic field=" << (d.field.empty() ? "-" : d.field) << " message=" << quote(d.message)
              << "\n";
  }
  return parsed.diagnostics.empty() ? kExitOk : kExitConfig;
}

int do_run(const Options& opt, std::optional<Experiment> hint) {
  int code = kExitOk;
  const auto cfg = load(opt, hint, code);
  if (!cfg) return code;
  const std::filesystem::path root = opt.out.empty() ? cfg->output_dir : opt.out;
  try {
    if (std::filesystem::exists(run_directory(*cfg, root)) && !opt.force) {
      report("output", "", kExitOther,
             "output directory " + run_directory(*cfg, root).string() + " exists; pass --force to overwrite");
      return kExitOther;
    }
    const auto start = std::chrono::steady_clock::now();
    const RunOutput out = run_experiment(*cfg, opt.threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream log;
    log << "version " << kArtifactVersion << "\n"
        << "experiment " << experiment_name(cfg->experiment) << "\n"
        << "config " << opt.config << "\n"
        << "config_hash " << cfg->hash() << "\n"
        << "seed " << cfg->seed << (cfg->seed_from_env ? " (MPSNTK_SEED)" : "") << "\n"
        << "threads " << opt.threads << "\n"
        << "kernels " << simd::active().name << "\n"
        << "wall_seconds " << wall << "\n";
    const auto dir = write_run(*cfg, out, root, opt.force, log.str());
    std::cout << dir.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    const int c = exit_code_for(e);
    const auto* ce = dynamic_cast<const ConfigError*>(&e);
    report(e.kind(), ce ? ce->field() : "", c, e.what());
    return c;
  } catch (const std::exception& e) {
    report("internal", "", kExitOther, e.what());
    return kExitOther;
  }
}

void add_options(CLI::App* sub, Options& opt, bool running) {
  sub->add_option("--config", opt.config, "Experiment config file")->required();
  if (!running) return;
  sub->add_option("--threads", opt.threads, "Worker threads (output does not depend on this)")
      ->check(CLI::Range(1, 256));
  sub->add_flag("--force", opt.force, "Overwrite an existing run directory");
  sub->add_option("--out", opt.out, "Output root; overrides output_dir from the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix product state kernel and training-dynamics experiments"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  add_options(validate, opt, false);
  auto* run = app.add_subcommand("run", "Run the experiment named in the config");
  add_options(run, opt, true);
  std::vector<std::pair<CLI::App*, Experiment>> experiments;
  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run " + name + " (config may omit 'experiment')");
    add_options(sub, opt, true);
    experiments.emplace_back(sub, *parse_experiment(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", "", kExitConfig, e.what());
    return kExitConfig;
  }

  if (validate->parsed()) return do_validate(opt);
  if (run->parsed()) return do_run(opt, std::nullopt);
  for (const auto& [sub, kind] : experiments) {
    if (sub->parsed()) return do_run(opt, kind);
  }
  return kExitOther;
}
