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

#pragma once

// Experiment configuration: flat `key = value` text, one key per line, '#'
// starts a comment. Lists are comma separated; row lists (inputs,
// custom_table) separate rows with ';'.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/flow.hpp"
#include "mpsntk/ntk.hpp"

namespace mpsntk::harness {

inline constexpr const char* kArtifactVersion = "mpsntk-1.0.0";

enum class Experiment {
  kNtkConverge,
  kPdCheck,
  kRmseFlow,
  kLazyTrain,
  kBornFlow,
  kZDist,
  kGpTest,
  kEnsembleCheck,
};

const std::vector<std::string>& experiment_names();
std::optional<Experiment> parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

struct Diagnostic {
  std::string field;  // empty for file-level problems
  std::string message;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kNtkConverge;
  std::size_t sites = 0;
  std::vector<std::size_t> bond_dims;
  std::vector<double> sigmas;  // one per site
  bool periodic = true;

  std::string feature_map;  // born_binary | trig_pair | random_fourier | custom
  std::size_t rff_width = 16;
  double rff_bandwidth = 1.0;
  std::vector<std::vector<double>> custom_table;

  std::string dataset;  // inline | file | equispaced | uniform | random_binary
  std::size_t points = 0;
  Dataset inputs;  // resolved for every generator
  std::vector<double> labels;

  std::string kernel = "feature";  // pd-check: feature | gaussian
  double kernel_tau = 1.0;

  Integrator integrator = Integrator::rk4(0.05);
  double t_end = 1.0;
  std::size_t record_every = 1;
  double lr_scale = 1.0;

  std::size_t trials = 1;
  std::uint64_t seed = 0;
  bool seed_from_env = false;
  std::string output_dir = "runs";

  /// Canonical `key = value` pairs, sorted by key, after defaults and the
  /// seed override. This is what gets hashed and echoed.
  std::vector<std::pair<std::string, std::string>> echo;

  FeatureMaps feature_maps() const;
  /// Inputs of a randomly generated dataset for trial `t`; the configured
  /// inputs for fixed datasets.
  Dataset trial_inputs(std::size_t t) const;
  bool random_dataset() const noexcept { return dataset == "uniform" || dataset == "random_binary"; }

  /// 16 hex digits of FNV-1a over the echo and the artifact version.
  std::string hash() const;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;  // set iff diagnostics is empty
  std::vector<Diagnostic> diagnostics;
};

/// Parses and checks `text`. `experiment_hint` supplies the experiment when
/// the config omits it and must agree with it otherwise. `seed_override`
/// replaces the base seed. Relative file references resolve against
/// `base_dir`. No experiment work is done.
ParseResult parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         std::optional<Experiment> experiment_hint = std::nullopt,
                         std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads `path` and forwards to parse_config. Throws InputError when the file
/// cannot be read.
ParseResult load_config(const std::filesystem::path& path,
                        std::optional<Experiment> experiment_hint = std::nullopt,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Parses MPSNTK_SEED; throws ConfigError on a malformed value.
std::optional<std::uint64_t> seed_from_environment();

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace mpsntk::harness
