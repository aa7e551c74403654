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

#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mpsntk/born.hpp"
#include "mpsntk/csv.hpp"
#include "mpsntk/ensemble.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/flow.hpp"
#include "mpsntk/gp_check.hpp"
#include "mpsntk/ntk.hpp"
#include "mpsntk/parallel.hpp"
#include "mpsntk/rng.hpp"
#include "mpsntk/stats.hpp"

namespace mpsntk::harness {
namespace {

using json = nlohmann::ordered_json;
using csv::RowWriter;

// Non-finite values are not representable in JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Builder {
 public:
  std::ostringstream& open(std::string name) {
    names_.push_back(std::move(name));
    streams_.emplace_back(std::make_unique<std::ostringstream>());
    return *streams_.back();
  }
  RunOutput finish(json results) {
    RunOutput out;
    for (std::size_t i = 0; i < names_.size(); ++i) out.artifacts.push_back({names_[i], streams_[i]->str()});
    out.results = std::move(results);
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<std::ostringstream>> streams_;
};

TensorChain trial_chain(const ExperimentConfig& cfg, const FeatureMaps& fmaps, std::size_t d,
                        std::size_t t) {
  return init_random(ChainSpec::uniform(fmaps, d, cfg.periodic), cfg.sigmas,
                     derive_seed(cfg.seed, d, t));
}

RegressionTask regression_task(const ExperimentConfig& cfg) {
  RegressionTask task{cfg.inputs, cfg.labels, cfg.feature_maps()};
  task.validate();
  return task;
}

FlowOptions flow_options(const ExperimentConfig& cfg) {
  FlowOptions opt;
  opt.t_end = cfg.t_end;
  opt.record_every = cfg.record_every;
  opt.lr_scale = cfg.lr_scale;
  return opt;
}

RunOutput ntk_converge(const ExperimentConfig& cfg, std::size_t threads) {
  const FeatureMaps fmaps = cfg.feature_maps();
  const auto rows = convergence_curve(cfg.bond_dims, cfg.trials, fmaps, cfg.sigmas, cfg.inputs,
                                      cfg.seed, cfg.periodic, threads);
  Builder b;
  auto& per_trial = b.open("convergence.csv");
  RowWriter(per_trial) << "bond_dim" << "trial" << "seed" << "relative_error";
  auto& summary = b.open("summary.csv");
  RowWriter(summary) << "bond_dim" << "mean_error" << "std_error" << "median_error";
  json medians = json::array();
  bool monotone = true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    for (std::size_t t = 0; t < row.errors.size(); ++t) {
      RowWriter(per_trial) << row.bond_dim << t << derive_seed(cfg.seed, row.bond_dim, t) << row.errors[t];
    }
    RowWriter(summary) << row.bond_dim << row.mean_error << row.std_error << row.median_error;
    medians.push_back({{"bond_dim", row.bond_dim}, {"median_error", number(row.median_error)}});
    if (r > 0 && !(row.median_error < rows[r - 1].median_error)) monotone = false;
  }
  write_kernel_csv(b.open("kernel_analytic.csv"),
                   analytic_ntk(kernels_for(fmaps), cfg.sigmas, cfg.inputs));
  return b.finish({{"median_errors", medians}, {"median_strictly_decreasing", monotone}});
}

RunOutput pd_check(const ExperimentConfig& cfg, std::size_t) {
  const FeatureMaps fmaps = cfg.feature_maps();
  const MercerKernels kernels = cfg.kernel == "gaussian"
                                    ? MercerKernels(cfg.sites, MercerKernel::gaussian(cfg.kernel_tau))
                                    : kernels_for(fmaps);
  const std::size_t trials = cfg.random_dataset() ? cfg.trials : 1;
  Builder b;
  auto& eig = b.open("eigenvalues.csv");
  RowWriter(eig) << "trial" << "points" << "min_eigenvalue" << "max_eigenvalue" << "positive";
  double worst = std::numeric_limits<double>::infinity();
  std::size_t positive = 0;
  KernelMatrix first;
  for (std::size_t t = 0; t < trials; ++t) {
    const Dataset data = cfg.trial_inputs(t);
    const KernelMatrix k = analytic_ntk(kernels, cfg.sigmas, data);
    const PdReport rep = check_positive_definite(k);
    RowWriter(eig) << t << data.size() << rep.min_eigenvalue << rep.max_eigenvalue
                   << (rep.positive ? "true" : "false");
    worst = std::min(worst, rep.min_eigenvalue);
    positive += rep.positive ? 1 : 0;
    if (t == 0) first = k;
  }
  write_kernel_csv(b.open("kernel_trial0.csv"), first);
  return b.finish({{"datasets", trials}, {"positive_definite", positive}, {"min_eigenvalue", number(worst)}});
}

RunOutput rmse_flow(const ExperimentConfig& cfg, std::size_t threads) {
  const RegressionTask task = regression_task(cfg);
  const std::size_t d = cfg.bond_dims.front();
  FlowOptions opt = flow_options(cfg);
  opt.ntk_times = {0.0, cfg.t_end};
  const Eigen::MatrixXd k_inf = analytic_ntk(kernels_for(task.fmaps), cfg.sigmas, task.inputs).values;

  struct TrialResult {
    Trajectory traj;
    std::vector<std::vector<double>> closed;
    double sup_gap = 0.0;
    double ntk_drift = 0.0;
  };
  std::vector<TrialResult> res(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::size_t t) {
    const TensorChain chain = trial_chain(cfg, task.fmaps, d, t);
    TrialResult& r = res[t];
    r.traj = integrate_flow(chain, task, cfg.integrator, opt);
    r.closed = closed_form_responses(k_inf, r.traj.responses.front(), task.labels, r.traj.times);
    for (std::size_t i = 0; i < r.traj.size(); ++i) {
      for (std::size_t j = 0; j < task.size(); ++j) {
        r.sup_gap = std::max(r.sup_gap, std::abs(r.traj.responses[i][j] - r.closed[i][j]));
      }
    }
    r.ntk_drift = ntk_drift(r.traj).back().second;
  });

  Builder b;
  write_trajectory_csv(b.open("trajectory.csv"), res[0].traj);
  auto& cf = b.open("closed_form.csv");
  {
    RowWriter h(cf);
    h << "t";
    for (std::size_t j = 0; j < task.size(); ++j) h << ("psi_" + std::to_string(j));
  }
  for (std::size_t i = 0; i < res[0].traj.size(); ++i) {
    RowWriter row(cf);
    row << res[0].traj.times[i];
    for (double v : res[0].closed[i]) row << v;
  }
  write_kernel_csv(b.open("kernel_t0.csv"), res[0].traj.ntk_snapshots.begin()->second);
  write_kernel_csv(b.open("kernel_tend.csv"), res[0].traj.ntk_snapshots.rbegin()->second);
  auto& trials = b.open("trials.csv");
  RowWriter(trials) << "trial" << "seed" << "final_loss" << "sup_gap" << "ntk_drift" << "param_drift";
  std::vector<double> gaps, drifts;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto& r = res[t];
    RowWriter(trials) << t << derive_seed(cfg.seed, d, t) << r.traj.loss.back() << r.sup_gap
                      << r.ntk_drift << r.traj.param_drift.back();
    gaps.push_back(r.sup_gap);
    drifts.push_back(r.ntk_drift);
  }
  return b.finish({{"bond_dim", d},
                   {"median_sup_gap", number(median(gaps))},
                   {"median_ntk_drift", number(median(drifts))},
                   {"final_loss_trial0", number(res[0].traj.loss.back())}});
}

RunOutput lazy_train(const ExperimentConfig& cfg, std::size_t threads) {
  const RegressionTask task = regression_task(cfg);
  const LazyReport rep = lazy_training_report(cfg.bond_dims, cfg.trials, task, cfg.sigmas, cfg.integrator,
                                              flow_options(cfg), cfg.seed, cfg.periodic, threads);
  Builder b;
  auto& drift = b.open("drift.csv");
  RowWriter(drift) << "bond_dim" << "trial" << "seed" << "param_drift" << "ntk_drift";
  auto& summary = b.open("summary.csv");
  RowWriter(summary) << "bond_dim" << "median_drift" << "iqr_drift" << "median_drift_fro"
                     << "median_ntk_drift";
  json rows = json::array();
  for (const auto& row : rep.rows) {
    for (std::size_t t = 0; t < row.drifts.size(); ++t) {
      RowWriter(drift) << row.bond_dim << t << derive_seed(cfg.seed, row.bond_dim, t) << row.drifts[t]
                       << row.ntk_drifts[t];
    }
    RowWriter(summary) << row.bond_dim << row.median_drift << row.iqr_drift << row.median_drift_fro
                       << row.median_ntk_drift;
    rows.push_back({{"bond_dim", row.bond_dim},
                    {"median_drift", number(row.median_drift)},
                    {"median_ntk_drift", number(row.median_ntk_drift)}});
  }
  auto& fit = b.open("fit.csv");
  RowWriter(fit) << "loglog_slope" << "loglog_slope_fro" << "bootstrap_monotone_fraction";
  RowWriter(fit) << rep.slope << rep.slope_fro << rep.monotone_fraction;
  return b.finish({{"rows", rows},
                   {"loglog_slope", number(rep.slope)},
                   {"loglog_slope_fro", number(rep.slope_fro)},
                   {"bootstrap_monotone_fraction", number(rep.monotone_fraction)}});
}

std::vector<BitString> training_strings(const Dataset& data) {
  std::vector<BitString> out;
  for (const auto& row : data) {
    BitString code = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] == 1.0) code |= BitString{1} << k;
    }
    out.push_back(code);
  }
  return out;
}

RunOutput born_flow(const ExperimentConfig& cfg, std::size_t threads) {
  const std::size_t d = cfg.bond_dims.front();
  const std::size_t n = cfg.sites;
  const std::vector<BitString> training = training_strings(cfg.inputs);
  const std::size_t m = training.size();
  BornFlowOptions opt;
  opt.t_end = cfg.t_end;
  opt.dt = cfg.integrator.dt;
  opt.record_every = cfg.record_every;
  opt.lr_scale = cfg.lr_scale;

  struct TrialResult {
    std::vector<std::pair<BitString, std::size_t>> strings;
    std::vector<double> psi0, k_diag, p_final;
    double z0 = 0.0;
    BornTrajectory traj;
  };
  std::vector<TrialResult> res(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::size_t t) {
    const TensorChain chain = init_random(ChainSpec::uniform(n, 2, d, cfg.periodic), cfg.sigmas,
                                          derive_seed(cfg.seed, d, t));
    BornModel model(chain, training);
    TrialResult& r = res[t];
    r.strings = model.distinct_training();
    std::vector<BitString> codes;
    for (const auto& [x, c] : r.strings) {
      codes.push_back(x);
      r.psi0.push_back(model.amplitude(x));
    }
    r.z0 = partition_function(model);
    const KernelMatrix k = born_ntk(model, codes);
    for (std::size_t i = 0; i < codes.size(); ++i) r.k_diag.push_back(k.values(i, i) * cfg.lr_scale);
    r.traj = integrate_born_flow(model, opt);
    r.p_final = r.traj.probabilities.back();
  });

  Builder b;
  write_born_csv(b.open("born_flow.csv"), res[0].traj, res[0].strings, n);
  auto& per = b.open("strings.csv");
  RowWriter(per) << "trial" << "seed" << "string" << "multiplicity" << "psi0" << "k_diag" << "z0"
                 << "t_char" << "unnormalized_time_estimate" << "p_target" << "p_closed_form" << "p_flow";
  double worst_gap = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto& r = res[t];
    for (std::size_t i = 0; i < r.strings.size(); ++i) {
      const auto [x, c] = r.strings[i];
      const double target = static_cast<double>(c) / static_cast<double>(m);
      const double t_char = characteristic_time(r.z0, m, r.k_diag[i]);
      const BornClosedForm cf = closed_form_born(r.psi0[i], r.z0, m, r.k_diag[i], cfg.t_end);
      RowWriter(per) << t << derive_seed(cfg.seed, d, t) << format_bits(x, n) << c << r.psi0[i]
                     << r.k_diag[i] << r.z0 << t_char << unnormalized_time_estimate(n, m) << target
                     << cf.probability << r.p_final[i];
      worst_gap = std::max(worst_gap, std::abs(r.p_final[i] - target));
    }
  }
  return b.finish({{"training_strings", m},
                   {"distinct_strings", res[0].strings.size()},
                   {"rejected_steps_trial0", res[0].traj.rejected_steps},
                   {"max_abs_gap_to_target", number(worst_gap)}});
}

RunOutput z_dist(const ExperimentConfig& cfg, std::size_t threads) {
  const ZStudy st = z_distribution_study(cfg.sites, cfg.sigmas, cfg.bond_dims.front(), cfg.trials,
                                         cfg.seed, threads);
  Builder b;
  write_z_csv(b.open("z_samples.csv"), st);
  auto& fit = b.open("z_fit.csv");
  RowWriter(fit) << "sites" << "bond_dim" << "trials" << "shape" << "scale" << "ks_statistic"
                 << "ks_p_value" << "expected_shape" << "fixed_shape_scale" << "ks_fixed_shape"
                 << "oracle_mean" << "oracle_scale" << "unnormalized_scale" << "relative_std";
  RowWriter(fit) << st.sites << st.bond_dim << st.samples.size() << st.fit.shape << st.fit.scale
                 << st.fit.ks_statistic << st.fit.ks_p_value << st.expected_shape << st.fixed_shape_scale
                 << st.ks_fixed_shape << st.oracle_mean << st.oracle_scale << st.unnormalized_scale
                 << st.relative_std;
  return b.finish({{"shape", number(st.fit.shape)},
                   {"expected_shape", number(st.expected_shape)},
                   {"scale", number(st.fit.scale)},
                   {"oracle_scale", number(st.oracle_scale)},
                   {"ks_fixed_shape", number(st.ks_fixed_shape)},
                   {"relative_std", number(st.relative_std)}});
}

RunOutput gp_test(const ExperimentConfig& cfg, std::size_t threads) {
  const auto reports = gp_limit_check(cfg.bond_dims, cfg.feature_maps(), cfg.sigmas, cfg.inputs,
                                      cfg.trials, cfg.seed, cfg.periodic, threads);
  Builder b;
  auto& summary = b.open("gp_summary.csv");
  RowWriter(summary) << "bond_dim" << "trials" << "max_abs_deviation" << "max_z" << "min_normality_p";
  json rows = json::array();
  for (const auto& rep : reports) {
    const double min_p = *std::min_element(rep.normality_p.begin(), rep.normality_p.end());
    RowWriter(summary) << rep.bond_dim << rep.trials << rep.max_abs_deviation << rep.max_z << min_p;
    rows.push_back({{"bond_dim", rep.bond_dim},
                    {"max_abs_deviation", number(rep.max_abs_deviation)},
                    {"max_z", number(rep.max_z)}});
    auto& cov = b.open("covariance_D" + std::to_string(rep.bond_dim) + ".csv");
    RowWriter(cov) << "i" << "j" << "empirical" << "analytic" << "standard_error" << "z";
    for (Eigen::Index i = 0; i < rep.covariance.rows(); ++i) {
      for (Eigen::Index j = i; j < rep.covariance.cols(); ++j) {
        const double dev = rep.covariance(i, j) - rep.analytic(i, j);
        RowWriter(cov) << static_cast<std::size_t>(i) << static_cast<std::size_t>(j) << rep.covariance(i, j)
                       << rep.analytic(i, j) << rep.standard_error(i, j) << dev / rep.standard_error(i, j);
      }
    }
  }
  return b.finish({{"rows", rows}});
}

RunOutput ensemble_check(const ExperimentConfig& cfg, std::size_t threads) {
  const FeatureMaps fmaps = cfg.feature_maps();
  const std::size_t d = cfg.bond_dims.front();
  struct Row {
    double mps, ens;
  };
  std::vector<std::vector<Row>> res(cfg.trials);
  std::size_t members = 0;
  parallel_for(cfg.trials, threads, [&](std::size_t t) {
    const TensorChain chain = trial_chain(cfg, fmaps, d, t);
    const LinearNetEnsemble ens = expand_ensemble(chain);
    if (t == 0) members = ens.size();
    for (const auto& x : cfg.inputs) res[t].push_back({evaluate(chain, fmaps, x), ens.evaluate(fmaps, x)});
  });
  Builder b;
  auto& out = b.open("ensemble.csv");
  RowWriter(out) << "trial" << "point" << "mps" << "ensemble" << "relative_difference";
  double worst = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    for (std::size_t i = 0; i < res[t].size(); ++i) {
      const auto [a, e] = res[t][i];
      const double rel = std::abs(a - e) / std::max(std::abs(a), std::numeric_limits<double>::min());
      RowWriter(out) << t << i << a << e << rel;
      worst = std::max(worst, rel);
    }
  }
  return b.finish({{"members", members}, {"max_relative_difference", number(worst)}});
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  threads = std::max<std::size_t>(threads, 1);
  switch (cfg.experiment) {
    case Experiment::kNtkConverge: return ntk_converge(cfg, threads);
    case Experiment::kPdCheck: return pd_check(cfg, threads);
    case Experiment::kRmseFlow: return rmse_flow(cfg, threads);
    case Experiment::kLazyTrain: return lazy_train(cfg, threads);
    case Experiment::kBornFlow: return born_flow(cfg, threads);
    case Experiment::kZDist: return z_dist(cfg, threads);
    case Experiment::kGpTest: return gp_test(cfg, threads);
    case Experiment::kEnsembleCheck: return ensemble_check(cfg, threads);
  }
  throw InputError("unhandled experiment");
}

std::filesystem::path run_directory(const ExperimentConfig& cfg, const std::filesystem::path& output_root) {
  return output_root / (experiment_name(cfg.experiment) + "-" + cfg.hash().substr(0, 12));
}

nlohmann::ordered_json manifest(const ExperimentConfig& cfg, const RunOutput& out) {
  json config = json::object();
  for (const auto& [k, v] : cfg.echo) config[k] = v;
  json artifacts = json::array();
  for (const auto& a : out.artifacts) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(a.content)));
    artifacts.push_back({{"file", a.name}, {"bytes", a.content.size()}, {"fnv1a", buf}});
  }
  return {{"version", kArtifactVersion},
          {"experiment", experiment_name(cfg.experiment)},
          {"config_hash", cfg.hash()},
          {"seed", cfg.seed},
          {"seed_source", cfg.seed_from_env ? "MPSNTK_SEED" : "config"},
          {"config", config},
          {"artifacts", artifacts},
          {"log", "run.log"},
          {"results", out.results}};
}

std::filesystem::path write_run(const ExperimentConfig& cfg, const RunOutput& out,
                                const std::filesystem::path& output_root, bool force,
                                const std::string& log_text) {
  namespace fs = std::filesystem;
  const fs::path dir = run_directory(cfg, output_root);
  if (fs::exists(dir)) {
    if (!force) throw InputError("output directory " + dir.string() + " exists; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    if (!f) throw InputError("cannot write " + (dir / name).string());
  };
  for (const auto& a : out.artifacts) put(a.name, a.content);
  put("manifest.json", manifest(cfg, out).dump(2) + "\n");
  put("run.log", log_text);
  return dir;
}

}  // namespace mpsntk::harness
