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

// Born machine over binary strings x in {0, 1}^n with the feature map
// phi(x) = (1/sqrt 2) [x, 1 - x] at every site:
//
//   P(x) = Psi(x)^2 / Z,   Z = sum_{x in Omega} Psi(x)^2,
//   L = -sum_i log Psi(x_i)^2 + m log Z.
//
// The feature vectors are scaled one-hots, so Psi(x) = 2^(-n/2) B[s(x)] with
// s_k = 1 - x_k and B the coefficient tensor. Strings are encoded as integers
// with bit k holding x_k.
//
// Training follows the parameter-space gradient flow of L over the whole
// sample space, with the per-site rates eta_k of the regression flow. When
// the kernel is diagonal this reduces, for every training string, to
//
//   dPsi/dt = K d,   d = 2 (1/Psi - m Psi / Z),
//
// whose solution with Z and K frozen is
//
//   P_x(t) = 1/m - (1/m - P_x(0)) exp(-4 m K t / Z).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpsntk/flow.hpp"
#include "mpsntk/stats.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

/// Largest n whose sample space is enumerated (4M strings).
inline constexpr std::size_t kMaxBornSites = 22;

using BitString = std::uint64_t;

/// "0110..." with x_0 first.
std::string format_bits(BitString code, std::size_t n);
/// Inverse of format_bits; throws InputError on other characters.
BitString parse_bits(const std::string& text);

class BornModel {
 public:
  /// Throws CapacityError when n > kMaxBornSites and ShapeError unless every
  /// site has phys_dim 2. Training strings may repeat.
  BornModel(TensorChain chain, std::vector<BitString> training);

  std::size_t sites() const noexcept { return chain_.size(); }
  std::size_t space_size() const noexcept { return std::size_t{1} << chain_.size(); }
  std::size_t training_size() const noexcept { return training_.size(); }
  const std::vector<BitString>& training() const noexcept { return training_; }
  /// Distinct training strings in first-seen order, with multiplicities.
  const std::vector<std::pair<BitString, std::size_t>>& distinct_training() const noexcept {
    return distinct_;
  }

  const TensorChain& chain() const noexcept { return chain_; }
  TensorChain& mutable_chain() noexcept { return chain_; }
  const FeatureMaps& fmaps() const noexcept { return fmaps_; }

  /// Psi(x) by direct contraction.
  double amplitude(BitString x) const;
  /// Psi over the whole sample space, indexed by code.
  std::vector<double> amplitudes() const;

 private:
  TensorChain chain_;
  std::vector<BitString> training_;
  std::vector<std::pair<BitString, std::size_t>> distinct_;
  FeatureMaps fmaps_;
};

/// Coefficient index s(x) of string x.
std::size_t coefficient_index(BitString x, std::size_t n);

/// Z from the coefficient tensor: 2^-n sum_s B[s]^2.
double partition_function(const BornModel& model);
/// Z by contracting the chain at every string.
double partition_function_enumerated(const BornModel& model);

/// Throws NumericalError when a training amplitude is zero.
double nll(const BornModel& model);

/// 2 (1/Psi(x_j) - m Psi(x_j) / Z). Throws NumericalError at Psi = 0.
double training_direction(const BornModel& model, std::size_t j);
double training_direction(double psi, double z, std::size_t m);

struct BornFlowOptions {
  double t_end = 1.0;
  double dt = 1e-2;
  std::size_t record_every = 1;
  double lr_scale = 1.0;
  std::size_t max_halvings = 20;
};

struct BornTrajectory {
  std::vector<double> times;
  std::vector<double> z;
  /// Per time, P_x of each distinct training string.
  std::vector<std::vector<double>> probabilities;
  /// Per time, Psi of each distinct training string.
  std::vector<std::vector<double>> amplitudes;
  /// Per time, sum of P over the whole sample space.
  std::vector<double> total_probability;
  std::size_t rejected_steps = 0;

  std::size_t size() const noexcept { return times.size(); }
};

/// RK4 integration of the flow. A step in which any training amplitude
/// changes sign is rejected and retried with half the step, at most
/// max_halvings times; NumericalError after that. The model is advanced in
/// place.
BornTrajectory integrate_born_flow(BornModel& model, const BornFlowOptions& options);

/// Header t,Z,P_<bits>,...
void write_born_csv(std::ostream& os, const BornTrajectory& traj,
                    const std::vector<std::pair<BitString, std::size_t>>& strings, std::size_t n);

struct BornClosedForm {
  double psi;
  double probability;
};

/// Throws InputError unless z > 0, k > 0 and m >= 1.
BornClosedForm closed_form_born(double psi0, double z, std::size_t m, double k, double t);

/// Z / (4 m K)
double characteristic_time(double z, std::size_t m, double k);
/// 2^(n-2) / m, the estimate obtained by substituting 2^n for Z and 1 for K.
double unnormalized_time_estimate(std::size_t n, std::size_t m);

/// Common diagonal of the infinite-bond kernel for the binary feature map:
/// sum_k (1/2) prod_{l != k} sigma_l^2 / 2.
double analytic_born_diag(std::span<const double> sigmas);

/// Empirical kernel over the given strings.
KernelMatrix born_ntk(const BornModel& model, std::span<const BitString> strings);

/// max_{i != j} |K_ij| / sqrt(K_ii K_jj)
double max_offdiag_ratio(const Eigen::MatrixXd& k);

struct ZStudy {
  std::size_t sites;
  std::size_t bond_dim;
  std::vector<std::uint64_t> seeds;
  std::vector<double> samples;  // Z per trial
  GammaFit fit;                 // free shape and scale
  double expected_shape;        // 2^(n-1)
  double fixed_shape_scale;     // mean / 2^(n-1)
  double ks_fixed_shape;        // KS against Gamma(2^(n-1), fixed_shape_scale)
  double oracle_mean;           // prod sigma^2
  double oracle_scale;          // 2^(1-n) prod sigma^2
  double unnormalized_scale;    // 2 prod sigma^2, the scale if Z were not divided by 2^n
  double relative_std;          // std(Z) / mean(Z)
};

/// Z over `trials` periodic chains; trial t uses derive_seed(seed, D, t).
/// Requires trials >= 200 and n <= kMaxBornSites.
ZStudy z_distribution_study(std::size_t n, std::span<const double> sigmas, std::size_t bond_dim,
                            std::size_t trials, std::uint64_t seed, std::size_t threads = 1);

/// Header trial,seed,Z
void write_z_csv(std::ostream& os, const ZStudy& study);

}  // namespace mpsntk
