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

// Neural tangent kernel of a matrix product state.
//
// The empirical kernel rescales every site's contribution by the bond
// learning rate eta_k = (|left_k| |right_k|)^(-1/2):
//
//   K(x, x') = sum_k eta_k < dPsi(x)/dA_k , dPsi(x')/dA_k >
//
// Its infinite-bond limit is
//
//   K(x, x') = sum_k k_k(x_k, x'_k) prod_{l != k} sigma_l^2 k_l(x_l, x'_l).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

struct Trajectory;

using Sample = std::vector<double>;
using Dataset = std::vector<Sample>;

struct KernelMatrix {
  enum class Source { kEmpirical, kAnalyticLimit };

  Eigen::MatrixXd values;
  Source source = Source::kEmpirical;
  std::uint64_t chain_seed = 0;  // empirical only
  double time = 0.0;             // empirical only
  std::string dataset_id;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Empirical kernel from precomputed environments (one per sample). The
/// environments must be current for `chain`.
KernelMatrix empirical_ntk(const TensorChain& chain, std::span<const Environments> envs);

KernelMatrix empirical_ntk(const TensorChain& chain, const FeatureMaps& fmaps, const Dataset& data);

KernelMatrix analytic_ntk(const MercerKernels& kernels, std::span<const double> sigmas,
                          const Dataset& data);

/// Relative Frobenius distance ||a - b||_F / ||b||_F.
double relative_frobenius_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct ConvergenceRow {
  std::size_t bond_dim;
  double mean_error;
  double std_error;  // NaN when trials == 1
  double median_error;
  std::vector<double> errors;  // per trial, in trial order
};

/// Empirical vs analytic kernel at each bond dimension, averaged over seeded
/// chains. Trial t at bond dimension D uses derive_seed(seed, D, t).
std::vector<ConvergenceRow> convergence_curve(std::span<const std::size_t> bond_dims,
                                              std::size_t trials, const FeatureMaps& fmaps,
                                              std::span<const double> sigmas, const Dataset& data,
                                              std::uint64_t seed, bool periodic = true,
                                              std::size_t threads = 1);

struct PdReport {
  double min_eigenvalue;
  double max_eigenvalue;
  bool positive;  // min > -1e-10 * max
};

/// Symmetric eigen-solve of (K + K^T) / 2. Throws InputError when K is not
/// symmetric to 1e-12 relative.
PdReport check_positive_definite(const KernelMatrix& k);
PdReport check_positive_definite(const Eigen::MatrixXd& k);

void require_symmetric(const Eigen::MatrixXd& k, const char* what);

/// (t, ||K(t) - K(0)||_F / ||K(0)||_F) for every recorded kernel snapshot.
/// Throws InputError when the trajectory has no snapshot at t = 0.
std::vector<std::pair<double, double>> ntk_drift(const Trajectory& traj);

/// Header of sample ids, then m rows of m values at 17 significant digits.
void write_kernel_csv(std::ostream& os, const KernelMatrix& k);

}  // namespace mpsntk
