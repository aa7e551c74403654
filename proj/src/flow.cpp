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

#include "mpsntk/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "mpsntk/csv.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/parallel.hpp"
#include "mpsntk/rng.hpp"
#include "mpsntk/stats.hpp"

namespace mpsntk {
namespace {

using SiteArrays = std::vector<std::vector<double>>;

SiteArrays zero_like(const TensorChain& chain) {
  SiteArrays out(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) out[k].assign(chain.site(k).values().size(), 0.0);
  return out;
}

// Environments and responses at `chain`, and the parameter velocity
// -lr eta_k sum_i d_i dPsi_i/dA_k.
void evaluate_flow(const TensorChain& chain, const RegressionTask& task, double lr,
                   std::vector<Environments>& envs, std::vector<double>& responses,
                   SiteArrays& velocity) {
  const std::size_t m = task.size();
  envs.clear();
  envs.reserve(m);
  responses.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    envs.emplace_back(chain, task.fmaps, task.inputs[i]);
    responses[i] = envs[i].value();
  }
  velocity = zero_like(chain);
  if (lr == 0.0) return;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const double eta = lr * chain.bond_learning_rate(k);
    const std::size_t sz = chain.site(k).slice_size();
    for (std::size_t i = 0; i < m; ++i) {
      const double d = responses[i] - task.labels[i];
      if (d == 0.0) continue;
      const auto phi = envs[i].features(k);
      for (std::size_t s = 0; s < phi.size(); ++s) {
        if (phi[s] == 0.0) continue;
        axpy(-eta * d * phi[s], envs[i].env(k).flat(),
             std::span<double>(velocity[k].data() + s * sz, sz));
      }
    }
  }
}

// out <- base + h * v
void shifted(const TensorChain& base, double h, const SiteArrays& v, TensorChain& out) {
  for (std::size_t k = 0; k < base.size(); ++k) {
    auto src = base.site(k).values();
    auto dst = out.mutable_site(k).values();
    std::copy(src.begin(), src.end(), dst.begin());
    axpy(h, v[k], dst);
  }
}

void accumulate(SiteArrays& acc, double c, const SiteArrays& v) {
  for (std::size_t k = 0; k < acc.size(); ++k) axpy(c, v[k], acc[k]);
}

}  // namespace

void RegressionTask::validate() const {
  if (inputs.empty()) throw ConfigError("regression task needs at least one sample", "dataset");
  if (labels.size() != inputs.size()) throw ConfigError("one label per input is required", "labels");
  for (double y : labels) {
    if (!std::isfinite(y)) throw ConfigError("labels must be finite", "labels");
  }
  for (const auto& x : inputs) {
    if (x.size() != fmaps.size()) throw ShapeError("sample length differs from the number of sites");
  }
}

void Trajectory::validate() const {
  const std::size_t n = times.size();
  if (n == 0 || times.front() != 0.0) throw InputError("trajectory must start at t = 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("trajectory times must increase strictly");
  }
  if (responses.size() != n || loss.size() != n || param_drift.size() != n ||
      param_drift_fro.size() != n) {
    throw InputError("trajectory series lengths differ");
  }
}

double squared_loss(std::span<const double> responses, std::span<const double> labels) {
  if (responses.size() != labels.size()) throw ShapeError("responses and labels differ in length");
  double l = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    l += (responses[i] - labels[i]) * (responses[i] - labels[i]);
  }
  return l;
}

Trajectory integrate_flow(const TensorChain& chain, const RegressionTask& task,
                          const Integrator& integrator, const FlowOptions& options,
                          TensorChain* final_chain) {
  task.validate();
  if (!(integrator.dt > 0.0) || !std::isfinite(integrator.dt)) {
    throw ConfigError("time step must be positive", "dt");
  }
  if (!(options.t_end >= 0.0) || !std::isfinite(options.t_end)) {
    throw ConfigError("t_end must be non-negative", "t_end");
  }
  if (options.record_every == 0) throw ConfigError("record_every must be >= 1", "record_every");

  const double dt = integrator.dt;
  const double lr = options.lr_scale;
  const TensorChain initial = chain;
  TensorChain current = chain;
  TensorChain stage = chain;

  std::vector<double> initial_norms(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    double ss = 0.0;
    for (double v : chain.site(k).values()) ss += v * v;
    initial_norms[k] = std::sqrt(ss);
  }

  std::vector<double> pending = options.ntk_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_snapshot = 0;

  const auto steps = options.t_end > 0.0
                         ? static_cast<std::size_t>(std::ceil(options.t_end / dt - 1e-9))
                         : std::size_t{0};

  Trajectory traj;
  std::vector<Environments> envs;
  std::vector<double> responses;
  SiteArrays k1, k2, k3, k4, incr;
  double drift = 0.0;
  double drift_fro = 0.0;
  double loss0 = 0.0;
  double t = 0.0;

  for (std::size_t step = 0;; ++step) {
    evaluate_flow(current, task, lr, envs, responses, k1);
    const double loss = squared_loss(responses, task.labels);
    if (!std::isfinite(loss)) throw NumericalError("loss became non-finite at t = " + csv::format(t));
    if (step == 0) loss0 = loss;
    if (loss0 > 0.0 && loss > options.divergence_factor * loss0) {
      throw NumericalError("flow diverged at t = " + csv::format(t) + "; reduce dt");
    }

    if (step > 0) {
      for (std::size_t k = 0; k < current.size(); ++k) {
        const auto a = current.site(k).values();
        const auto b = initial.site(k).values();
        double max_abs = 0.0;
        double ss = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double diff = a[i] - b[i];
          max_abs = std::max(max_abs, std::abs(diff));
          ss += diff * diff;
        }
        drift = std::max(drift, max_abs);
        if (initial_norms[k] > 0.0) drift_fro = std::max(drift_fro, std::sqrt(ss) / initial_norms[k]);
      }
    }

    const bool last = step == steps;
    if (step % options.record_every == 0 || last) {
      traj.times.push_back(t);
      traj.responses.push_back(responses);
      traj.loss.push_back(loss);
      traj.param_drift.push_back(drift);
      traj.param_drift_fro.push_back(drift_fro);
    }
    bool take_snapshot = false;
    while (next_snapshot < pending.size() && pending[next_snapshot] <= t + 1e-9 * std::max(1.0, t)) {
      take_snapshot = true;
      ++next_snapshot;
    }
    if (take_snapshot) {
      KernelMatrix k = empirical_ntk(current, envs);
      k.time = t;
      traj.ntk_snapshots.emplace(t, std::move(k));
    }
    if (last) break;

    const double t_next = std::min(static_cast<double>(step + 1) * dt, options.t_end);
    const double h = t_next - t;
    if (integrator.kind == Integrator::Kind::kEuler) {
      shifted(current, h, k1, stage);
      std::swap(current, stage);
    } else {
      std::vector<double> scratch;
      shifted(current, 0.5 * h, k1, stage);
      evaluate_flow(stage, task, lr, envs, scratch, k2);
      shifted(current, 0.5 * h, k2, stage);
      evaluate_flow(stage, task, lr, envs, scratch, k3);
      shifted(current, h, k3, stage);
      evaluate_flow(stage, task, lr, envs, scratch, k4);
      incr = k1;
      accumulate(incr, 2.0, k2);
      accumulate(incr, 2.0, k3);
      accumulate(incr, 1.0, k4);
      shifted(current, h / 6.0, incr, stage);
      std::swap(current, stage);
    }
    t = t_next;
  }
  if (final_chain) *final_chain = current;
  return traj;
}

std::vector<std::vector<double>> closed_form_responses(const Eigen::MatrixXd& k,
                                                       std::span<const double> psi0,
                                                       std::span<const double> y,
                                                       std::span<const double> times) {
  require_symmetric(k, "kernel");
  const auto m = static_cast<std::size_t>(k.rows());
  if (psi0.size() != m || y.size() != m) throw ShapeError("kernel and response sizes differ");
  const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-solve did not converge");
  const Eigen::MatrixXd& v = solver.eigenvectors();
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  Eigen::VectorXd gap(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) gap(static_cast<Eigen::Index>(i)) = psi0[i] - y[i];
  const Eigen::VectorXd coeff = v.transpose() * gap;

  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t == 0.0) {
      out.emplace_back(psi0.begin(), psi0.end());
      continue;
    }
    const Eigen::VectorXd decayed = coeff.array() * (-t * lambda.array()).exp();
    const Eigen::VectorXd r = v * decayed;
    std::vector<double> row(m);
    for (std::size_t i = 0; i < m; ++i) row[i] = y[i] + r(static_cast<Eigen::Index>(i));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> closed_form_response(const Eigen::MatrixXd& k, std::span<const double> psi0,
                                         std::span<const double> y, double t) {
  const double times[] = {t};
  return closed_form_responses(k, psi0, y, times).front();
}

std::vector<std::pair<double, double>> mean_response_curve(
    std::span<const double> times, const std::vector<std::vector<double>>& responses) {
  if (times.size() != responses.size()) throw ShapeError("times and responses differ in length");
  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out.emplace_back(times[i], mean(responses[i]));
  return out;
}

std::vector<std::pair<double, double>> mean_response_curve(const Trajectory& traj) {
  return mean_response_curve(traj.times, traj.responses);
}

double fit_decay_rate(std::span<const std::pair<double, double>> curve, double target) {
  if (curve.empty()) throw InputError("decay fit needs points");
  const double first = std::abs(curve.front().second - target);
  std::vector<double> ts, logs;
  for (const auto& [t, v] : curve) {
    const double g = std::abs(v - target);
    if (g <= 1e-12 * first || g == 0.0) continue;
    ts.push_back(t);
    logs.push_back(std::log(g));
  }
  if (ts.size() < 2) throw NumericalError("decay fit needs two points with a nonzero gap");
  const double mt = mean(ts);
  const double ml = mean(logs);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (logs[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  if (sxx == 0.0) throw NumericalError("decay fit needs distinct times");
  return -sxy / sxx;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw InputError("log-log fit needs distinct x");
  return sxy / sxx;
}

std::vector<std::pair<double, double>> ntk_drift(const Trajectory& traj) {
  if (traj.ntk_snapshots.empty() || traj.ntk_snapshots.begin()->first != 0.0) {
    throw InputError("trajectory has no kernel snapshot at t = 0");
  }
  const Eigen::MatrixXd& k0 = traj.ntk_snapshots.begin()->second.values;
  std::vector<std::pair<double, double>> out;
  for (const auto& [t, k] : traj.ntk_snapshots) {
    out.emplace_back(t, relative_frobenius_error(k.values, k0));
  }
  return out;
}

LazyReport lazy_training_report(std::span<const std::size_t> bond_dims, std::size_t trials,
                                const RegressionTask& task, std::span<const double> sigmas,
                                const Integrator& integrator, const FlowOptions& options,
                                std::uint64_t seed, bool periodic, std::size_t threads) {
  if (trials < 5) throw ConfigError("lazy-training study needs at least 5 trials", "trials");
  if (bond_dims.empty()) throw ConfigError("bond dimension list is empty", "bond_dims");
  task.validate();
  FlowOptions opts = options;
  opts.ntk_times = {0.0, options.t_end};
  opts.record_every = std::max<std::size_t>(opts.record_every, 1);

  LazyReport report;
  std::vector<double> dims, med, med_fro;
  std::vector<std::vector<double>> groups;
  for (std::size_t d : bond_dims) {
    const ChainSpec spec = ChainSpec::uniform(task.fmaps, d, periodic);
    spec.validate();
    std::vector<double> drifts(trials), fro(trials), kdrift(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      const TensorChain chain = init_random(spec, sigmas, derive_seed(seed, d, t));
      const Trajectory traj = integrate_flow(chain, task, integrator, opts);
      drifts[t] = traj.param_drift.back();
      fro[t] = traj.param_drift_fro.back();
      kdrift[t] = ntk_drift(traj).back().second;
    });
    LazyRow row;
    row.bond_dim = d;
    row.median_drift = median(drifts);
    row.iqr_drift = quantile(drifts, 0.75) - quantile(drifts, 0.25);
    row.median_drift_fro = median(fro);
    row.median_ntk_drift = median(kdrift);
    row.drifts = drifts;
    row.ntk_drifts = kdrift;
    dims.push_back(static_cast<double>(d));
    med.push_back(row.median_drift);
    med_fro.push_back(row.median_drift_fro);
    groups.push_back(drifts);
    report.rows.push_back(std::move(row));
  }
  const bool fit = bond_dims.size() >= 2;
  report.slope = fit ? loglog_slope(dims, med) : std::numeric_limits<double>::quiet_NaN();
  report.slope_fro = fit ? loglog_slope(dims, med_fro) : std::numeric_limits<double>::quiet_NaN();
  report.monotone_fraction =
      fit ? bootstrap_decreasing_fraction(groups, derive_seed(seed, 0xb007, 0)) : 1.0;
  return report;
}

std::vector<std::pair<double, double>> compare_flow_to_closed_form(const TensorChain& chain,
                                                                   const RegressionTask& task,
                                                                   std::span<const double> times,
                                                                   const Integrator& integrator) {
  task.validate();
  if (times.empty()) throw InputError("time grid is empty");
  std::vector<std::size_t> index;
  double t_end = 0.0;
  for (double t : times) {
    if (!(t >= 0.0)) throw InputError("grid times must be non-negative");
    const double r = t / integrator.dt;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
      throw InputError("grid time " + csv::format(t) + " is not a multiple of dt");
    }
    index.push_back(static_cast<std::size_t>(std::llround(r)));
    t_end = std::max(t_end, t);
  }
  FlowOptions opts;
  opts.t_end = t_end;
  const Trajectory traj = integrate_flow(chain, task, integrator, opts);
  const KernelMatrix k = analytic_ntk(kernels_for(task.fmaps), chain.sigmas(), task.inputs);
  const auto closed = closed_form_responses(k.values, traj.responses.front(), task.labels, times);

  std::vector<std::pair<double, double>> out;
  for (std::size_t g = 0; g < times.size(); ++g) {
    const auto& flow = traj.responses.at(index[g]);
    double gap = 0.0;
    for (std::size_t i = 0; i < flow.size(); ++i) gap = std::max(gap, std::abs(flow[i] - closed[g][i]));
    out.emplace_back(times[g], gap);
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t m = traj.responses.empty() ? 0 : traj.responses.front().size();
  {
    csv::RowWriter row(os);
    row << "t" << "loss" << "param_drift";
    for (std::size_t i = 0; i < m; ++i) row << "psi_" + std::to_string(i);
  }
  for (std::size_t r = 0; r < traj.size(); ++r) {
    csv::RowWriter row(os);
    row << traj.times[r] << traj.loss[r] << traj.param_drift[r];
    for (double v : traj.responses[r]) row << v;
  }
}

}  // namespace mpsntk
