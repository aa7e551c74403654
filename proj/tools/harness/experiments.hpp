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

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace mpsntk::harness {

struct Artifact {
  std::string name;
  std::string content;
};

struct RunOutput {
  std::vector<Artifact> artifacts;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
};

/// Runs the configured experiment in memory. Output bytes depend only on the
/// config (including its seed), never on `threads`.
RunOutput run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

/// <output_root>/<experiment>-<first 12 hex digits of the config hash>
std::filesystem::path run_directory(const ExperimentConfig& cfg, const std::filesystem::path& output_root);

/// The manifest as written next to the artifacts. Deterministic; wall time and
/// host details go to run.log instead.
nlohmann::ordered_json manifest(const ExperimentConfig& cfg, const RunOutput& out);

/// Writes artifacts, manifest.json and run.log into run_directory(). Throws
/// InputError when the directory exists and `force` is not set.
std::filesystem::path write_run(const ExperimentConfig& cfg, const RunOutput& out,
                                const std::filesystem::path& output_root, bool force,
                                const std::string& log_text);

}  // namespace mpsntk::harness
