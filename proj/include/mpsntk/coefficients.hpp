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

// Fully contracted coefficient tensor B[s_1..s_n] = tr(A_1[s_1] ... A_n[s_n])
// and its reverse-mode gradient, by meet-in-the-middle enumeration.
//
// Coefficient index: mixed radix with site 0 varying fastest.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mpsntk/matrix.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

/// Largest coefficient count any enumeration accepts (4M, i.e. 2^22).
inline constexpr std::size_t kMaxCoefficients = std::size_t{1} << 22;

/// prod_k |s_k|; throws CapacityError above `limit`.
std::size_t coefficient_count(const TensorChain& chain, std::size_t limit = kMaxCoefficients);

/// Left prefix products over sites [0, h) and right suffix products over
/// [h, n), kept so a gradient pass can reuse them.
class CoefficientTree {
 public:
  /// Throws CapacityError when more than `max_stored_doubles` would be kept.
  explicit CoefficientTree(const TensorChain& chain,
                           std::size_t max_stored_doubles = std::size_t{1} << 25);

  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

  /// Gradient of sum_s w[s] B[s] with respect to every site, one flat
  /// (phys, left, right) array per site.
  std::vector<std::vector<double>> gradient(std::span<const double> weights) const;

 private:
  const TensorChain* chain_;
  std::size_t split_ = 0;       // h
  std::size_t left_count_ = 1;  // prod_{k<h} |s_k|
  std::vector<std::vector<Matrix>> left_;   // left_[j-1][p], depth j = 1..h
  std::vector<std::vector<Matrix>> right_;  // right_[j-1][q], covers [n-j, n)
  std::vector<Matrix> right_t_;             // transposes of the deepest right level
  std::vector<double> coeffs_;
};

/// All coefficients (tree when it fits in memory, streaming otherwise).
std::vector<double> coefficient_tensor(const TensorChain& chain);

/// Visits each coefficient once, depth first, using O(n D^2) memory.
void for_each_coefficient_streaming(const TensorChain& chain,
                                    const std::function<void(std::size_t, double)>& visit);

}  // namespace mpsntk
