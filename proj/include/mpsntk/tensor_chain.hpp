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

// Matrix product states: storage, random initialization, evaluation and
// per-site gradients.
//
// A chain of n order-3 site tensors A_k[s][a][b] (physical index s, left bond
// a, right bond b) represents
//
//   Psi(x) = tr( M_1(x_1) M_2(x_2) ... M_n(x_n) ),   M_k(x_k) = sum_s phi_s(x_k) A_k[s].
//
// Periodic chains close the trace over a shared outer bond; open chains use
// outer bonds of dimension 1 and share every code path with periodic ones.
// Sites are 0-based in code.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/matrix.hpp"

namespace mpsntk {

/// Dimensions of a chain. bond_dims has n + 1 entries: bond_dims[k] is the
/// left bond of site k and bond_dims[n] the right bond of the last site.
struct ChainSpec {
  std::vector<std::size_t> phys_dims;
  std::vector<std::size_t> bond_dims;
  bool periodic = true;

  /// Uniform bond dimension D. Open chains get outer bonds of 1.
  static ChainSpec uniform(std::size_t n, std::size_t phys_dim, std::size_t bond_dim,
                           bool periodic = true);
  static ChainSpec uniform(const FeatureMaps& fmaps, std::size_t bond_dim, bool periodic = true);

  std::size_t size() const noexcept { return phys_dims.size(); }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Site tensor with layout (s, left, right), row-major.
class SiteTensor {
 public:
  SiteTensor(std::size_t phys_dim, std::size_t left_dim, std::size_t right_dim, double init_sigma);

  std::size_t phys_dim() const noexcept { return phys_; }
  std::size_t left_dim() const noexcept { return left_; }
  std::size_t right_dim() const noexcept { return right_; }
  std::size_t slice_size() const noexcept { return left_ * right_; }
  double init_sigma() const noexcept { return sigma_; }

  double& at(std::size_t s, std::size_t a, std::size_t b) {
    return values_[(s * left_ + a) * right_ + b];
  }
  double at(std::size_t s, std::size_t a, std::size_t b) const {
    return values_[(s * left_ + a) * right_ + b];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> slice(std::size_t s) { return {values_.data() + s * slice_size(), slice_size()}; }
  std::span<const double> slice(std::size_t s) const {
    return {values_.data() + s * slice_size(), slice_size()};
  }
  Matrix slice_matrix(std::size_t s) const;

 private:
  std::size_t phys_;
  std::size_t left_;
  std::size_t right_;
  double sigma_;
  std::vector<double> values_;
};

/// Ordered chain of site tensors. A value type: copies are independent and
/// const access is safe from many threads. Every mutable accessor stamps a
/// fresh version so cached environments can detect staleness.
class TensorChain {
 public:
  TensorChain(std::vector<SiteTensor> sites, bool periodic, std::uint64_t seed = 0);

  /// All-zero chain with the given dimensions and per-site sigmas.
  static TensorChain zeros(const ChainSpec& spec, std::span<const double> sigmas);

  std::size_t size() const noexcept { return sites_.size(); }
  bool periodic() const noexcept { return periodic_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t version() const noexcept { return version_; }

  const SiteTensor& site(std::size_t k) const;
  SiteTensor& mutable_site(std::size_t k);
  const std::vector<SiteTensor>& sites() const noexcept { return sites_; }

  ChainSpec spec() const;
  std::vector<double> sigmas() const;
  std::size_t parameter_count() const;

  /// A_k <- c * A_k
  void scale_site(std::size_t k, double c);

  /// Per-bond learning rate (|left| |right|)^(-1/2) of site k.
  double bond_learning_rate(std::size_t k) const;

 private:
  void check_invariants() const;

  std::vector<SiteTensor> sites_;
  bool periodic_;
  std::uint64_t seed_;
  std::uint64_t version_;
};

/// Entries of site k are i.i.d. N(0, sigma_k^2 / sqrt(|left_k| |right_k|)).
/// Deterministic in `seed`.
TensorChain init_random(const ChainSpec& spec, std::span<const double> sigmas, std::uint64_t seed);

/// M_k(x_k) = sum_s phi_s A_k[s]
void site_matrix(const SiteTensor& site, std::span<const double> phi, Matrix& out);

/// Psi(x) by left-to-right contraction, O(n |s| D^3).
double evaluate(const TensorChain& chain, const FeatureMaps& fmaps, std::span<const double> x);

/// Same value contracted right to left.
double evaluate_right_to_left(const TensorChain& chain, const FeatureMaps& fmaps,
                              std::span<const double> x);

/// Partial contractions of one sample around every site.
///
/// env(k) is the l_k x r_k matrix with dPsi/dA_k[s][a][b] = phi_s(x_k) env(k)(a, b).
/// All n environments cost 3(n-2) matrix products.
class Environments {
 public:
  Environments(const TensorChain& chain, const FeatureMaps& fmaps, std::span<const double> x);

  double value() const noexcept { return value_; }
  std::size_t size() const noexcept { return envs_.size(); }
  const Matrix& env(std::size_t k) const { return envs_.at(k); }
  std::span<const double> features(std::size_t k) const { return features_.at(k); }
  std::uint64_t chain_version() const noexcept { return version_; }

  /// Gradient with respect to site k, laid out like the site tensor.
  std::vector<double> gradient(std::size_t k) const;

  bool valid_for(const TensorChain& chain) const noexcept { return chain.version() == version_; }

 private:
  double value_ = 0.0;
  std::uint64_t version_ = 0;
  std::vector<Matrix> envs_;
  std::vector<std::vector<double>> features_;
};

/// Validates that x and fmaps match the chain; throws ShapeError otherwise.
void check_sample(const TensorChain& chain, const FeatureMaps& fmaps, std::span<const double> x);

/// dPsi/dA_k as a (phys, left, right) array.
std::vector<double> grad_site(const TensorChain& chain, const FeatureMaps& fmaps,
                              std::span<const double> x, std::size_t k);

/// Text serialization with the "MPSNTK1" magic header.
void write_chain(std::ostream& os, const TensorChain& chain);
TensorChain read_chain(std::istream& is);

}  // namespace mpsntk
