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

// A matrix product state read as a weighted ensemble of linear networks.
//
// Fixing one physical index per site, i = (i_1, ..., i_n), selects the weight
// matrices W^[i_k] = A_k[i_k]. The member network N_i pushes each boundary
// basis vector e_a through the layers with identity activations and no bias,
// and reads component a back out:
//
//   N_i(A) = sum_a e_a^T W^[i_1] W^[i_2] ... W^[i_n] e_a
//
// For an open chain the outer bond has dimension 1 and this is a single
// network. For a periodic chain it sums over the |a_1| boundary channels, which
// is the trace convention of the evaluation. Each member is weighted by
// W_i(x) = prod_k phi_{i_k}(x_k).
//
// The per-member pass is a scalar path over bond index assignments: one
// product of scalar weights for every (a_1, ..., a_n), accumulated layer by
// layer. A reading where every member is a single matrix product of its
// layers gives the same number; it is not modelled separately.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/matrix.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

inline constexpr std::size_t kMaxEnsembleMembers = std::size_t{1} << 16;

class LinearNetEnsemble {
 public:
  explicit LinearNetEnsemble(std::shared_ptr<const TensorChain> chain);

  std::size_t size() const noexcept { return count_; }

  /// (i_1, ..., i_n) of member `i`; site 0 varies fastest.
  std::vector<std::size_t> member_index(std::size_t i) const;

  /// W^[i_k] of member i.
  Matrix layer(std::size_t i, std::size_t k) const;

  /// N_i(A): forward pass of member i.
  double network_output(std::size_t i) const;

  /// W_i(x) = prod_k phi_{i_k}(x_k)
  double mixing_weight(std::size_t i, const FeatureMaps& fmaps, std::span<const double> x) const;

  /// sum_i W_i(x) N_i(A)
  double evaluate(const FeatureMaps& fmaps, std::span<const double> x) const;

 private:
  std::shared_ptr<const TensorChain> chain_;
  std::size_t count_;
};

/// Throws CapacityError when prod_k |s_k| > 2^16.
LinearNetEnsemble expand_ensemble(const TensorChain& chain);

}  // namespace mpsntk
