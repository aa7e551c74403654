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

// Gradient flow of a matrix product state under the squared loss
//
//   L = sum_i (Psi(x_i) - y_i)^2,
//
// integrated in parameter space as dA_k/dt = -eta_k sum_i d_i dPsi(x_i)/dA_k
// with d_i = Psi(x_i) - y_i. The responses then obey dPsi/dt = -K d exactly,
// with K the empirical kernel of ntk.hpp, and freezing K gives
//
//   Psi(t) = y + exp(-t K) (Psi(0) - y).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/ntk.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

struct RegressionTask {
  Dataset inputs;
  std::vector<double> labels;
  FeatureMaps fmaps;

  std::size_t size() const noexcept { return inputs.size(); }
  /// m >= 1, finite labels, one label per input, consistent sample lengths.
  void validate() const;
};

struct Integrator {
  enum class Kind { kEuler, kRk4 };
  Kind kind = Kind::kRk4;
  double dt = 1e-2;

  static Integrator euler(double dt) { return {Kind::kEuler, dt}; }
  static Integrator rk4(double dt) { return {Kind::kRk4, dt}; }
};

struct FlowOptions {
  double t_end = 1.0;
  std::size_t record_every = 1;  // steps between records; t_end is always recorded
  std::vector<double> ntk_times;  // kernel snapshots at the first step reaching each time
  double lr_scale = 1.0;          // multiplies every eta_k
  double divergence_factor = 1e6;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> responses;
  std::vector<double> loss;
  /// Running sup over time of max_k max |A_k(t) - A_k(0)|.
  std::vector<double> param_drift;
  /// Running sup over time of max_k ||A_k(t) - A_k(0)||_F / ||A_k(0)||_F.
  std::vector<double> param_drift_fro;
  std::map<double, KernelMatrix> ntk_snapshots;

  std::size_t size() const noexcept { return times.size(); }
  /// Throws InputError unless times increase strictly from 0 and every
  /// series has one entry per time.
  void validate() const;
};

double squared_loss(std::span<const double> responses, std::span<const double> labels);

/// Integrates the flow on a copy of `chain`; the final state is returned via
/// `final_chain` when non-null. Throws NumericalError when the loss exceeds
/// divergence_factor times its initial value.
Trajectory integrate_flow(const TensorChain& chain, const RegressionTask& task,
                          const Integrator& integrator, const FlowOptions& options,
                          TensorChain* final_chain = nullptr);

/// y + V exp(-t Lambda) V^T (psi0 - y) from the eigendecomposition of K.
std::vector<double> closed_form_response(const Eigen::MatrixXd& k, std::span<const double> psi0,
                                         std::span<const double> y, double t);

/// Closed form over a time grid, sharing one eigendecomposition.
std::vector<std::vector<double>> closed_form_responses(const Eigen::MatrixXd& k,
                                                       std::span<const double> psi0,
                                                       std::span<const double> y,
                                                       std::span<const double> times);

/// (t, mean_i Psi_i(t)) for every recorded time.
std::vector<std::pair<double, double>> mean_response_curve(const Trajectory& traj);
std::vector<std::pair<double, double>> mean_response_curve(
    std::span<const double> times, const std::vector<std::vector<double>>& responses);

/// Least-squares rate r in |curve(t) - target| ~ c exp(-r t). Points whose
/// gap has fallen below 1e-12 of the first gap are ignored.
double fit_decay_rate(std::span<const std::pair<double, double>> curve, double target);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct LazyRow {
  std::size_t bond_dim;
  double median_drift;
  double iqr_drift;
  double median_drift_fro;
  double median_ntk_drift;  // terminal relative kernel drift
  std::vector<double> drifts;      // per seed, in seed order
  std::vector<double> ntk_drifts;  // per seed, in seed order
};

struct LazyReport {
  std::vector<LazyRow> rows;
  double slope;      // log-log slope of median max-abs drift against D
  double slope_fro;  // same for the relative Frobenius drift
  /// Share of bootstrap resamples (per-D seeds resampled) whose medians
  /// decrease strictly along the D list.
  double monotone_fraction;
};

/// Runs the flow for `trials` chains at each D. Seed t at bond dimension D is
/// derive_seed(seed, D, t). Requires trials >= 5.
LazyReport lazy_training_report(std::span<const std::size_t> bond_dims, std::size_t trials,
                                const RegressionTask& task, std::span<const double> sigmas,
                                const Integrator& integrator, const FlowOptions& options,
                                std::uint64_t seed, bool periodic = true, std::size_t threads = 1);

/// (t, max_i |Psi_flow(x_i, t) - Psi_closed(x_i, t)|) where the closed form
/// uses the analytic kernel and the chain's initial responses. Every grid time
/// must be a multiple of dt.
std::vector<std::pair<double, double>> compare_flow_to_closed_form(const TensorChain& chain,
                                                                   const RegressionTask& task,
                                                                   std::span<const double> times,
                                                                   const Integrator& integrator);

/// Header t,loss,param_drift,psi_0,...
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace mpsntk
