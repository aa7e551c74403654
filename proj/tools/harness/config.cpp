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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mpsntk/born.hpp"
#include "mpsntk/ensemble.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk::harness {
namespace {

constexpr std::uint64_t kDatasetStream = 0xda7a;
constexpr std::size_t kMaxBondDim = 4096;
constexpr std::size_t kMaxPoints = 4096;
constexpr std::size_t kMaxSites = 64;
constexpr std::size_t kMaxTrials = 1000000;
constexpr double kMaxSteps = 1e7;

const std::vector<std::string> kNames = {"ntk-converge", "pd-check",  "rmse-flow", "lazy-train",
                                         "born-flow",    "z-dist",    "gp-test",   "ensemble-check"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(std::string_view(s).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

std::string join_rows(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ";";
    out += join(rows[i]);
  }
  return out;
}

struct Entry {
  std::string value;
  int line;
};

// Keys each experiment accepts, beyond the common ones.
std::set<std::string> allowed_keys(Experiment e) {
  std::set<std::string> keys = {"experiment", "sites", "sigma", "sigmas", "seed", "output_dir", "trials"};
  const std::set<std::string> chain = {"bond_dim", "bond_dims", "periodic"};
  const std::set<std::string> fmap = {"feature_map", "rff_width", "rff_bandwidth", "custom_table",
                                      "phys_dim"};
  const std::set<std::string> data = {"dataset", "points", "inputs", "dataset_file"};
  const std::set<std::string> flow = {"integrator", "dt", "t_end", "record_every", "lr_scale"};
  auto add = [&](const std::set<std::string>& s) { keys.insert(s.begin(), s.end()); };
  switch (e) {
    case Experiment::kNtkConverge:
    case Experiment::kGpTest:
    case Experiment::kEnsembleCheck:
      add(chain), add(fmap), add(data);
      break;
    case Experiment::kPdCheck:
      add(fmap), add(data);
      keys.insert({"kernel", "kernel_tau"});
      break;
    case Experiment::kRmseFlow:
    case Experiment::kLazyTrain:
      add(chain), add(fmap), add(data), add(flow);
      keys.insert("labels");
      break;
    case Experiment::kBornFlow:
      add(chain), add(data), add(flow);
      keys.erase("integrator");
      keys.insert({"feature_map", "phys_dim"});
      break;
    case Experiment::kZDist:
      add(chain);
      keys.insert({"feature_map", "phys_dim"});
      break;
  }
  return keys;
}

std::set<std::string> all_keys() {
  std::set<std::string> keys;
  for (const auto& name : kNames) {
    const auto k = allowed_keys(*parse_experiment(name));
    keys.insert(k.begin(), k.end());
  }
  return keys;
}

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::vector<Diagnostic>& diags)
      : entries_(std::move(entries)), diags_(diags) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

  void fail(const std::string& key, const std::string& message) {
    diags_.push_back({key, message});
  }

  std::optional<std::uint64_t> uint(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return parse_uint(key, raw(key));
  }

  std::optional<double> real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return parse_real(key, raw(key));
  }

  std::optional<bool> boolean(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const std::string v = raw(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(key, "expected true or false, got '" + v + "'");
    return std::nullopt;
  }

  std::optional<std::vector<std::uint64_t>> uint_list(const std::string& key) {
    if (!has(key)) return std::nullopt;
    std::vector<std::uint64_t> out;
    for (const auto& item : split(raw(key), ',')) {
      const auto v = parse_uint(key, item);
      if (!v) return std::nullopt;
      out.push_back(*v);
    }
    return out;
  }

  std::optional<std::vector<double>> real_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
      const auto v = parse_real(key, item);
      if (!v) return std::nullopt;
      out.push_back(*v);
    }
    return out;
  }

  std::optional<std::vector<double>> real_list(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return real_list(key, raw(key));
  }

  std::optional<std::vector<std::vector<double>>> rows(const std::string& key) {
    if (!has(key)) return std::nullopt;
    std::vector<std::vector<double>> out;
    for (const auto& row : split(raw(key), ';')) {
      if (row.empty()) continue;
      auto r = real_list(key, row);
      if (!r) return std::nullopt;
      out.push_back(std::move(*r));
    }
    return out;
  }

  std::optional<std::uint64_t> parse_uint(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      fail(key, "expected a non-negative integer, got '" + text + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> parse_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
        !std::isfinite(v)) {
      fail(key, "expected a finite number, got '" + text + "'");
      return std::nullopt;
    }
    return v;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::vector<Diagnostic>& diags_;
};

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const std::vector<std::string>& experiment_names() { return kNames; }

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Experiment>(i);
  }
  return std::nullopt;
}

std::string experiment_name(Experiment e) { return kNames.at(static_cast<std::size_t>(e)); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

FeatureMaps ExperimentConfig::feature_maps() const {
  FeatureMap fmap = FeatureMap::born_binary();
  if (feature_map == "trig_pair") {
    fmap = FeatureMap::trig_pair();
  } else if (feature_map == "random_fourier") {
    // Same frequencies on every site, drawn from the base seed.
    fmap = FeatureMap::random_fourier(rff_width, rff_bandwidth, derive_seed(seed, 0xf0u, 0));
  } else if (feature_map == "custom") {
    fmap = FeatureMap::custom(custom_table);
  }
  return replicate(fmap, sites);
}

Dataset ExperimentConfig::trial_inputs(std::size_t t) const {
  if (!random_dataset()) return inputs;
  Rng rng(derive_seed(seed, kDatasetStream, t));
  Dataset out(points, Sample(sites));
  for (auto& row : out) {
    for (double& v : row) {
      v = dataset == "uniform" ? rng.uniform() : static_cast<double>(rng.bits() & 1u);
    }
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  std::string text = std::string(kArtifactVersion) + "\n";
  for (const auto& [k, v] : echo) text += k + " = " + v + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* env = std::getenv("MPSNTK_SEED");
  if (env == nullptr) return std::nullopt;
  const std::string text = trim(env);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("MPSNTK_SEED must be a non-negative integer", "MPSNTK_SEED");
  }
  return v;
}

ParseResult load_config(const std::filesystem::path& path, std::optional<Experiment> experiment_hint,
                        std::optional<std::uint64_t> seed_override) {
  const auto text = read_file(path);
  if (!text) throw InputError("cannot read config file " + path.string());
  return parse_config(*text, path.parent_path(), experiment_hint, seed_override);
}

ParseResult parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         std::optional<Experiment> experiment_hint,
                         std::optional<std::uint64_t> seed_override) {
  ParseResult result;
  auto& diags = result.diagnostics;

  // Lexing.
  std::map<std::string, Entry> entries;
  {
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        diags.push_back({"", "line " + std::to_string(number) + ": expected 'key = value'"});
        continue;
      }
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty()) {
        diags.push_back({"", "line " + std::to_string(number) + ": empty key"});
        continue;
      }
      if (entries.count(key)) {
        diags.push_back({key, "duplicate key (lines " + std::to_string(entries[key].line) + " and " +
                                  std::to_string(number) + ")"});
        continue;
      }
      entries[key] = {value, number};
    }
  }

  Reader rd(entries, diags);
  ExperimentConfig cfg;

  // Experiment kind.
  std::optional<Experiment> kind = experiment_hint;
  if (rd.has("experiment")) {
    const auto parsed = parse_experiment(rd.raw("experiment"));
    if (!parsed) {
      rd.fail("experiment", "unknown experiment '" + rd.raw("experiment") + "'");
    } else if (experiment_hint && *parsed != *experiment_hint) {
      rd.fail("experiment", "config declares '" + rd.raw("experiment") + "' but the subcommand is '" +
                                experiment_name(*experiment_hint) + "'");
    } else {
      kind = parsed;
    }
  } else if (!kind) {
    rd.fail("experiment", "missing required key");
  }

  // Unknown and inapplicable keys.
  const auto known = all_keys();
  for (const auto& [key, entry] : entries) {
    if (!known.count(key)) {
      rd.fail(key, "unknown key (line " + std::to_string(entry.line) + ")");
    } else if (kind && !allowed_keys(*kind).count(key)) {
      rd.fail(key, "not used by " + experiment_name(*kind));
    }
  }
  if (!kind) return result;
  cfg.experiment = *kind;
  const Experiment e = *kind;
  const bool born = e == Experiment::kBornFlow || e == Experiment::kZDist;
  const bool flow = e == Experiment::kRmseFlow || e == Experiment::kLazyTrain || e == Experiment::kBornFlow;
  const std::size_t diags_before_values = diags.size();

  // Seed and trials.
  if (auto v = rd.uint("seed")) cfg.seed = *v;
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.seed_from_env = true;
  }
  const std::size_t min_trials = e == Experiment::kLazyTrain ? 5
                                 : e == Experiment::kGpTest  ? 500
                                 : e == Experiment::kZDist   ? 200
                                                             : 1;
  cfg.trials = min_trials;
  if (auto v = rd.uint("trials")) {
    cfg.trials = *v;
    if (*v < min_trials || *v > kMaxTrials) {
      rd.fail("trials", "must be in [" + std::to_string(min_trials) + ", " + std::to_string(kMaxTrials) +
                            "] for " + experiment_name(e));
    }
  }
  if (rd.has("output_dir")) {
    cfg.output_dir = rd.raw("output_dir");
    if (cfg.output_dir.empty()) rd.fail("output_dir", "must not be empty");
  }

  // Chain.
  if (auto v = rd.uint("sites")) {
    cfg.sites = *v;
    if (*v == 0 || *v > kMaxSites) {
      rd.fail("sites", "must be in [1, " + std::to_string(kMaxSites) + "]");
      cfg.sites = 0;
    } else if (born && *v > kMaxBornSites) {
      rd.fail("sites", "enumeration guard: Born machine experiments need sites <= " +
                           std::to_string(kMaxBornSites) + ", got " + std::to_string(*v));
      cfg.sites = 0;
    }
  } else if (!rd.has("sites")) {
    rd.fail("sites", "missing required key");
  }
  const std::size_t n = cfg.sites;

  if (rd.has("sigma") && rd.has("sigmas")) {
    rd.fail("sigmas", "give either sigma or sigmas, not both");
  } else if (auto v = rd.real("sigma")) {
    if (!(*v > 0.0)) rd.fail("sigma", "must be positive");
    cfg.sigmas.assign(n, *v);
  } else if (auto l = rd.real_list("sigmas")) {
    if (l->size() != n && n != 0) {
      rd.fail("sigmas", "expected " + std::to_string(n) + " entries, got " + std::to_string(l->size()));
    }
    for (double s : *l) {
      if (!(s > 0.0)) rd.fail("sigmas", "every entry must be positive");
    }
    cfg.sigmas = *l;
  } else if (!rd.has("sigma") && !rd.has("sigmas")) {
    cfg.sigmas.assign(n, 1.0);
  }

  if (e != Experiment::kPdCheck) {
    std::string dim_key;
    if (rd.has("bond_dim") && rd.has("bond_dims")) {
      rd.fail("bond_dims", "give either bond_dim or bond_dims, not both");
    } else if (rd.has("bond_dim")) {
      dim_key = "bond_dim";
      if (auto v = rd.uint("bond_dim")) cfg.bond_dims = {*v};
    } else if (rd.has("bond_dims")) {
      dim_key = "bond_dims";
      if (auto v = rd.uint_list("bond_dims")) cfg.bond_dims.assign(v->begin(), v->end());
    } else {
      rd.fail("bond_dim", "missing required key");
    }
    for (std::size_t d : cfg.bond_dims) {
      if (d == 0) rd.fail(dim_key, "bond dimension must be >= 1, got 0");
      if (d > kMaxBondDim) rd.fail(dim_key, "bond dimension must be <= " + std::to_string(kMaxBondDim));
    }
    const bool single = e == Experiment::kRmseFlow || e == Experiment::kBornFlow ||
                        e == Experiment::kZDist || e == Experiment::kEnsembleCheck;
    if (!dim_key.empty() && single && cfg.bond_dims.size() > 1) {
      rd.fail(dim_key, experiment_name(e) + " takes a single bond dimension");
    }
    if (e == Experiment::kLazyTrain && !dim_key.empty() && cfg.bond_dims.size() < 2) {
      rd.fail(dim_key, "lazy-train needs at least two bond dimensions");
    }
    if (auto v = rd.boolean("periodic")) cfg.periodic = *v;
  }

  // Feature map.
  cfg.feature_map = born ? "born_binary" : "";
  if (rd.has("feature_map")) {
    const std::string fm = rd.raw("feature_map");
    if (fm != "born_binary" && fm != "trig_pair" && fm != "random_fourier" && fm != "custom") {
      rd.fail("feature_map", "unknown feature map '" + fm + "'");
    } else if (born && fm != "born_binary") {
      rd.fail("feature_map", experiment_name(e) + " requires born_binary");
    } else {
      cfg.feature_map = fm;
    }
  } else if (!born) {
    rd.fail("feature_map", "missing required key");
  }
  if (auto v = rd.uint("rff_width")) {
    cfg.rff_width = *v;
    if (*v == 0 || *v % 2 != 0) rd.fail("rff_width", "must be even and positive");
  }
  if (auto v = rd.real("rff_bandwidth")) {
    cfg.rff_bandwidth = *v;
    if (!(*v > 0.0)) rd.fail("rff_bandwidth", "must be positive");
  }
  if (cfg.feature_map != "random_fourier") {
    for (const char* key : {"rff_width", "rff_bandwidth"}) {
      if (rd.has(key)) rd.fail(key, "only used with feature_map = random_fourier");
    }
  }
  if (cfg.feature_map == "custom") {
    if (auto t = rd.rows("custom_table")) {
      cfg.custom_table = *t;
      if (t->empty() || t->front().empty()) {
        rd.fail("custom_table", "must have at least one row and one column");
      }
      for (const auto& row : *t) {
        if (row.size() != t->front().size()) rd.fail("custom_table", "rows must have equal length");
      }
    } else if (!rd.has("custom_table")) {
      rd.fail("custom_table", "required with feature_map = custom");
    }
  } else if (rd.has("custom_table")) {
    rd.fail("custom_table", "only used with feature_map = custom");
  }
  const bool fmap_ok = diags.size() == diags_before_values && !cfg.feature_map.empty() && n > 0;
  std::optional<FeatureMaps> fmaps;
  if (fmap_ok) {
    try {
      fmaps = cfg.feature_maps();
    } catch (const Error& err) {
      rd.fail("feature_map", err.what());
    }
  }
  if (auto v = rd.uint("phys_dim"); v && fmaps && fmaps->front().phys_dim() != *v) {
    rd.fail("phys_dim", "feature map has physical dimension " +
                            std::to_string(fmaps->front().phys_dim()) + ", config says " +
                            std::to_string(*v));
  }
  if (e == Experiment::kEnsembleCheck && fmaps) {
    double members = 1.0;
    for (const auto& f : *fmaps) members *= static_cast<double>(f.phys_dim());
    if (members > static_cast<double>(kMaxEnsembleMembers)) {
      rd.fail("sites", "ensemble would have more than " + std::to_string(kMaxEnsembleMembers) + " members");
    }
  }

  // Dataset.
  std::string dataset_fingerprint;
  if (e != Experiment::kZDist) {
    if (!rd.has("dataset")) {
      rd.fail("dataset", "missing required key");
    } else {
      cfg.dataset = rd.raw("dataset");
      const std::set<std::string> kinds = {"inline", "file", "equispaced", "uniform", "random_binary"};
      if (!kinds.count(cfg.dataset)) rd.fail("dataset", "unknown dataset kind '" + cfg.dataset + "'");
    }
    if (auto v = rd.uint("points")) {
      cfg.points = *v;
      if (*v == 0 || *v > kMaxPoints) rd.fail("points", "must be in [1, " + std::to_string(kMaxPoints) + "]");
    }
    std::vector<double> file_labels;
    if (cfg.dataset == "inline") {
      if (rd.has("dataset_file")) rd.fail("dataset_file", "only used with dataset = file");
      if (auto rows = rd.rows("inputs")) {
        cfg.inputs = *rows;
      } else if (!rd.has("inputs")) {
        rd.fail("inputs", "required with dataset = inline");
      }
    } else if (cfg.dataset == "file") {
      if (rd.has("inputs")) rd.fail("inputs", "only used with dataset = inline");
      if (!rd.has("dataset_file")) {
        rd.fail("dataset_file", "required with dataset = file");
      } else {
        std::filesystem::path p = rd.raw("dataset_file");
        if (p.is_relative()) p = base_dir / p;
        const auto body = read_file(p);
        if (!body) {
          rd.fail("dataset_file", "cannot read " + p.string());
        } else {
          std::istringstream in(*body);
          std::string line;
          while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto row = rd.real_list("dataset_file", line);
            if (!row) break;
            if (n > 0 && row->size() == n + 1) {
              file_labels.push_back(row->back());
              row->pop_back();
            }
            cfg.inputs.push_back(std::move(*row));
          }
          if (!file_labels.empty() && file_labels.size() != cfg.inputs.size()) {
            rd.fail("dataset_file", "either every row or no row carries a label column");
          }
          char buf[17];
          std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(*body)));
          dataset_fingerprint = buf;
        }
      }
    } else if (!cfg.dataset.empty()) {
      for (const char* key : {"inputs", "dataset_file"}) {
        if (rd.has(key)) rd.fail(key, "not used with dataset = " + cfg.dataset);
      }
      if (!rd.has("points")) rd.fail("points", "required with dataset = " + cfg.dataset);
    }
    if ((cfg.dataset == "inline" || cfg.dataset == "file") && !cfg.inputs.empty()) {
      if (rd.has("points") && cfg.points != cfg.inputs.size()) {
        rd.fail("points", "says " + std::to_string(cfg.points) + " but the dataset has " +
                              std::to_string(cfg.inputs.size()) + " rows");
      }
      cfg.points = cfg.inputs.size();
      if (cfg.points > kMaxPoints) rd.fail("inputs", "more than " + std::to_string(kMaxPoints) + " points");
      const std::string key = cfg.dataset == "inline" ? "inputs" : "dataset_file";
      for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
        if (n > 0 && cfg.inputs[i].size() != n) {
          rd.fail(key, "row " + std::to_string(i) + " has " + std::to_string(cfg.inputs[i].size()) +
                           " coordinates, expected " + std::to_string(n));
          break;
        }
      }
    }
    if (cfg.dataset == "equispaced" && cfg.points > 0 && n > 0) {
      cfg.inputs.assign(cfg.points, Sample(n));
      for (std::size_t i = 0; i < cfg.points; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          cfg.inputs[i][k] = (static_cast<double>(i) + static_cast<double>(k + 1) / static_cast<double>(n + 1)) /
                             static_cast<double>(cfg.points);
        }
      }
    }
    if (cfg.random_dataset() && cfg.points > 0 && n > 0) cfg.inputs = cfg.trial_inputs(0);
    if (fmaps && !cfg.inputs.empty() && cfg.inputs.front().size() == n) {
      const std::string key = cfg.dataset == "file" ? "dataset_file" : cfg.dataset == "inline" ? "inputs" : "dataset";
      bool bad = false;
      for (std::size_t i = 0; i < cfg.inputs.size() && !bad; ++i) {
        if (cfg.inputs[i].size() != n) break;
        try {
          for (std::size_t k = 0; k < n; ++k) (void)(*fmaps)[k].apply(cfg.inputs[i][k]);
        } catch (const Error& err) {
          rd.fail(key, "point " + std::to_string(i) + ": " + err.what());
          bad = true;
        }
      }
    }

    // Labels.
    if (e == Experiment::kRmseFlow || e == Experiment::kLazyTrain) {
      if (rd.has("labels") && !file_labels.empty()) {
        rd.fail("labels", "dataset file already carries labels");
      } else if (auto l = rd.real_list("labels")) {
        cfg.labels = *l;
        if (cfg.labels.size() == 1 && cfg.points > 1) cfg.labels.assign(cfg.points, cfg.labels[0]);
        if (cfg.points > 0 && cfg.labels.size() != cfg.points) {
          rd.fail("labels", "expected 1 or " + std::to_string(cfg.points) + " entries, got " +
                                std::to_string(l->size()));
        }
      } else if (!file_labels.empty()) {
        cfg.labels = file_labels;
      } else if (!rd.has("labels")) {
        rd.fail("labels", "missing required key");
      }
    } else if (!file_labels.empty()) {
      rd.fail("dataset_file", experiment_name(e) + " takes no labels");
    }
  }

  // Flow.
  if (flow) {
    if (rd.has("integrator")) {
      const std::string v = rd.raw("integrator");
      if (v == "rk4") {
        cfg.integrator.kind = Integrator::Kind::kRk4;
      } else if (v == "euler") {
        cfg.integrator.kind = Integrator::Kind::kEuler;
      } else {
        rd.fail("integrator", "expected rk4 or euler, got '" + v + "'");
      }
    }
    if (auto v = rd.real("dt")) {
      cfg.integrator.dt = *v;
      if (!(*v > 0.0)) rd.fail("dt", "must be positive");
    }
    if (auto v = rd.real("t_end")) {
      cfg.t_end = *v;
      if (*v < 0.0) rd.fail("t_end", "must be non-negative");
    }
    if (cfg.integrator.dt > 0.0 && cfg.t_end / cfg.integrator.dt > kMaxSteps) {
      rd.fail("t_end", "more than 1e7 integration steps");
    }
    if (auto v = rd.uint("record_every")) {
      cfg.record_every = *v;
      if (*v == 0) rd.fail("record_every", "must be >= 1");
    }
    if (auto v = rd.real("lr_scale")) {
      cfg.lr_scale = *v;
      if (*v < 0.0) rd.fail("lr_scale", "must be non-negative");
    }
  }

  // Positive definiteness check.
  if (e == Experiment::kPdCheck) {
    if (rd.has("kernel")) {
      cfg.kernel = rd.raw("kernel");
      if (cfg.kernel != "feature" && cfg.kernel != "gaussian") {
        rd.fail("kernel", "expected feature or gaussian, got '" + cfg.kernel + "'");
      }
    }
    if (auto v = rd.real("kernel_tau")) {
      cfg.kernel_tau = *v;
      if (!(*v > 0.0)) rd.fail("kernel_tau", "must be positive");
      if (cfg.kernel != "gaussian") rd.fail("kernel_tau", "only used with kernel = gaussian");
    }
  }

  if (!diags.empty()) return result;

  // Canonical echo.
  auto& echo = cfg.echo;
  echo.emplace_back("experiment", experiment_name(e));
  echo.emplace_back("sites", std::to_string(n));
  echo.emplace_back("sigmas", join(cfg.sigmas));
  echo.emplace_back("seed", std::to_string(cfg.seed));
  echo.emplace_back("trials", std::to_string(cfg.trials));
  echo.emplace_back("output_dir", cfg.output_dir);
  if (e != Experiment::kPdCheck) {
    echo.emplace_back("bond_dims", join(cfg.bond_dims));
    echo.emplace_back("periodic", cfg.periodic ? "true" : "false");
  }
  echo.emplace_back("feature_map", cfg.feature_map);
  if (cfg.feature_map == "random_fourier") {
    echo.emplace_back("rff_width", std::to_string(cfg.rff_width));
    echo.emplace_back("rff_bandwidth", format_double(cfg.rff_bandwidth));
  }
  if (cfg.feature_map == "custom") echo.emplace_back("custom_table", join_rows(cfg.custom_table));
  if (e != Experiment::kZDist) {
    echo.emplace_back("dataset", cfg.dataset);
    echo.emplace_back("points", std::to_string(cfg.points));
    if (cfg.dataset == "inline") echo.emplace_back("inputs", join_rows(cfg.inputs));
    if (cfg.dataset == "file") {
      echo.emplace_back("dataset_file", rd.raw("dataset_file"));
      echo.emplace_back("dataset_file_fnv1a", dataset_fingerprint);
    }
  }
  if (!cfg.labels.empty()) echo.emplace_back("labels", join(cfg.labels));
  if (flow) {
    if (e != Experiment::kBornFlow) {
      echo.emplace_back("integrator", cfg.integrator.kind == Integrator::Kind::kRk4 ? "rk4" : "euler");
    }
    echo.emplace_back("dt", format_double(cfg.integrator.dt));
    echo.emplace_back("t_end", format_double(cfg.t_end));
    echo.emplace_back("record_every", std::to_string(cfg.record_every));
    echo.emplace_back("lr_scale", format_double(cfg.lr_scale));
  }
  if (e == Experiment::kPdCheck) {
    echo.emplace_back("kernel", cfg.kernel);
    if (cfg.kernel == "gaussian") echo.emplace_back("kernel_tau", format_double(cfg.kernel_tau));
  }
  std::sort(echo.begin(), echo.end());
  result.config = std::move(cfg);
  return result;
}

}  // namespace mpsntk::harness
