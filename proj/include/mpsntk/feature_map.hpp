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

// Per-site feature maps phi(x_i) and the Mercer kernels they induce.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpsntk {

/// A map from one input coordinate to a feature vector of length phys_dim().
/// Immutable after construction.
class FeatureMap {
 public:
  enum class Kind { kBornBinary, kTrigPair, kRandomFourier, kCustom };

  /// (1/sqrt 2) [x, 1 - x] on x in {0, 1}.
  static FeatureMap born_binary();

  /// [cos(pi x / 2), sin(pi x / 2)]; unit norm for every x.
  static FeatureMap trig_pair();

  /// width/2 frequencies w_j ~ N(0, 1/bandwidth^2) drawn from `seed`;
  /// phi = (1/sqrt(width/2)) [cos(w_j x) ..., sin(w_j x) ...]. `width` must be
  /// even and positive.
  static FeatureMap random_fourier(std::size_t width, double bandwidth, std::uint64_t seed);

  /// Lookup table: x must be an integer in [0, rows); phi(x) = table[x].
  static FeatureMap custom(std::vector<std::vector<double>> table);

  Kind kind() const noexcept { return kind_; }
  std::size_t phys_dim() const noexcept { return phys_dim_; }
  double bandwidth() const noexcept { return bandwidth_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::string describe() const;

  /// Writes phi(x) into `out` (length phys_dim()). Throws InputError outside
  /// the map's domain.
  void apply(double x, std::span<double> out) const;
  std::vector<double> apply(double x) const;

  /// phi(a) . phi(b)
  double site_kernel(double a, double b) const;

 private:
  FeatureMap(Kind kind, std::size_t phys_dim) : kind_(kind), phys_dim_(phys_dim) {}

  Kind kind_;
  std::size_t phys_dim_;
  double bandwidth_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> frequencies_;
  std::vector<std::vector<double>> table_;
};

/// One feature map per site.
using FeatureMaps = std::vector<FeatureMap>;

inline FeatureMaps replicate(const FeatureMap& fmap, std::size_t n) {
  return FeatureMaps(n, fmap);
}

/// Symmetric PSD kernel on a single coordinate: either the dot product of a
/// finite feature map or the exact Gaussian exp(-(a-b)^2 / (2 tau^2)).
class MercerKernel {
 public:
  static MercerKernel feature_dot(FeatureMap fmap);
  static MercerKernel gaussian(double tau);

  /// The kernel an analytic computation should use for `fmap`: the exact
  /// Gaussian for random Fourier maps when `use_limit` is set, the feature dot
  /// product otherwise.
  static MercerKernel for_map(const FeatureMap& fmap, bool use_limit = true);

  double operator()(double a, double b) const;
  bool is_gaussian() const noexcept { return gaussian_; }

 private:
  MercerKernel() = default;
  bool gaussian_ = false;
  double tau_ = 1.0;
  std::vector<FeatureMap> fmap_;  // zero or one element
};

using MercerKernels = std::vector<MercerKernel>;

MercerKernels kernels_for(const FeatureMaps& fmaps, bool use_limit = true);

double site_kernel(const FeatureMap& fmap, double a, double b);

/// prod_i k_i(x_i, x'_i)
double product_kernel(const MercerKernels& kernels, std::span<const double> x,
                      std::span<const double> xp);
double product_kernel(const FeatureMaps& fmaps, std::span<const double> x,
                      std::span<const double> xp);

}  // namespace mpsntk
