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

#include "mpsntk/ensemble.hpp"

#include "mpsntk/coefficients.hpp"
#include "mpsntk/errors.hpp"

namespace mpsntk {

LinearNetEnsemble::LinearNetEnsemble(std::shared_ptr<const TensorChain> chain)
    : chain_(std::move(chain)), count_(coefficient_count(*chain_, kMaxEnsembleMembers)) {}

std::vector<std::size_t> LinearNetEnsemble::member_index(std::size_t i) const {
  if (i >= count_) throw InputError("ensemble member out of range");
  std::vector<std::size_t> idx(chain_->size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t radix = chain_->site(k).phys_dim();
    idx[k] = i % radix;
    i /= radix;
  }
  return idx;
}

Matrix LinearNetEnsemble::layer(std::size_t i, std::size_t k) const {
  return chain_->site(k).slice_matrix(member_index(i).at(k));
}

double LinearNetEnsemble::network_output(std::size_t i) const {
  const auto idx = member_index(i);
  const std::size_t channels = chain_->site(0).left_dim();
  double total = 0.0;
  for (std::size_t a = 0; a < channels; ++a) {
    // h <- e_a^T, then h <- h W^[i_k] layer by layer.
    std::vector<double> h(channels, 0.0);
    h[a] = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const SiteTensor& site = chain_->site(k);
      std::vector<double> next(site.right_dim(), 0.0);
      for (std::size_t l = 0; l < site.left_dim(); ++l) {
        if (h[l] == 0.0) continue;
        for (std::size_t r = 0; r < site.right_dim(); ++r) next[r] += h[l] * site.at(idx[k], l, r);
      }
      h = std::move(next);
    }
    total += h[a];
  }
  return total;
}

double LinearNetEnsemble::mixing_weight(std::size_t i, const FeatureMaps& fmaps,
                                        std::span<const double> x) const {
  check_sample(*chain_, fmaps, x);
  const auto idx = member_index(i);
  double w = 1.0;
  for (std::size_t k = 0; k < idx.size(); ++k) w *= fmaps[k].apply(x[k])[idx[k]];
  return w;
}

double LinearNetEnsemble::evaluate(const FeatureMaps& fmaps, std::span<const double> x) const {
  check_sample(*chain_, fmaps, x);
  std::vector<std::vector<double>> phi(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) phi[k] = fmaps[k].apply(x[k]);
  double total = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    const auto idx = member_index(i);
    double w = 1.0;
    for (std::size_t k = 0; k < idx.size() && w != 0.0; ++k) w *= phi[k][idx[k]];
    if (w != 0.0) total += w * network_output(i);
  }
  return total;
}

LinearNetEnsemble expand_ensemble(const TensorChain& chain) {
  return LinearNetEnsemble(std::make_shared<const TensorChain>(chain));
}

}  // namespace mpsntk
