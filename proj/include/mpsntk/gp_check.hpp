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

// Monte Carlo check of the Gaussian-process limit at initialization: over
// random chains, Psi on a fixed dataset is centred with covariance
//
//   E[Psi(x) Psi(x')] = prod_i sigma_i^2 phi(x_i) . phi(x'_i).
//
// The mean is known to be zero, so covariances are estimated by the raw
// second moment and their standard errors from the spread of the products.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/ntk.hpp"

namespace mpsntk {

struct GpCheckReport {
  std::size_t bond_dim = 0;
  std::size_t trials = 0;
  Dataset dataset;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd analytic;
  Eigen::MatrixXd standard_error;
  double max_abs_deviation = 0.0;
  double max_z = 0.0;                // max |covariance - analytic| / standard_error
  std::vector<double> normality_p;  // D'Agostino-Pearson, per point
  std::vector<std::vector<double>> samples;  // samples[t][i] = Psi(x_i) in trial t
};

/// prod_i sigma_i^2 phi(x_i) . phi(x'_i) over the dataset.
Eigen::MatrixXd analytic_covariance(const FeatureMaps& fmaps, std::span<const double> sigmas,
                                    const Dataset& data);

/// One report per bond dimension. Trial t at D uses derive_seed(seed, D, t).
/// Requires trials >= 500.
std::vector<GpCheckReport> gp_limit_check(std::span<const std::size_t> bond_dims,
                                          const FeatureMaps& fmaps, std::span<const double> sigmas,
                                          const Dataset& data, std::size_t trials,
                                          std::uint64_t seed, bool periodic = true,
                                          std::size_t threads = 1);

}  // namespace mpsntk
