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

#include "mpsntk/coefficients.hpp"

#include <string>

#include "mpsntk/errors.hpp"

namespace mpsntk {

std::size_t coefficient_count(const TensorChain& chain, std::size_t limit) {
  std::size_t count = 1;
  for (const auto& site : chain.sites()) {
    if (count > limit / site.phys_dim()) {
      throw CapacityError("coefficient enumeration exceeds " + std::to_string(limit) + " entries");
    }
    count *= site.phys_dim();
  }
  return count;
}

CoefficientTree::CoefficientTree(const TensorChain& chain, std::size_t max_stored_doubles)
    : chain_(&chain) {
  const std::size_t n = chain.size();
  const std::size_t total = coefficient_count(chain);
  coeffs_.assign(total, 0.0);
  if (n == 1) {
    const SiteTensor& site = chain.site(0);
    for (std::size_t s = 0; s < site.phys_dim(); ++s) coeffs_[s] = site.slice_matrix(s).trace();
    return;
  }
  split_ = n / 2;

  std::size_t stored = 0;
  auto charge = [&](std::size_t nodes, std::size_t rows, std::size_t cols) {
    stored += nodes * rows * cols;
    if (stored > max_stored_doubles) {
      throw CapacityError("coefficient tree needs more than " + std::to_string(max_stored_doubles) +
                          " stored doubles");
    }
  };

  // Left tree: depth j holds prefixes over sites [0, j).
  left_.resize(split_);
  std::size_t count = 1;
  for (std::size_t j = 1; j <= split_; ++j) {
    const SiteTensor& site = chain.site(j - 1);
    const std::size_t stride = count;
    count *= site.phys_dim();
    charge(count, chain.site(0).left_dim(), site.right_dim());
    auto& level = left_[j - 1];
    level.resize(count);
    for (std::size_t p = 0; p < count; ++p) {
      const std::size_t s = p / stride;
      if (j == 1) {
        level[p] = site.slice_matrix(s);
      } else {
        matmul(left_[j - 2][p % stride], site.slice_matrix(s), level[p]);
      }
    }
  }
  left_count_ = count;

  // Right tree: depth j holds suffixes over sites [n - j, n), new site fastest.
  const std::size_t right_depth = n - split_;
  right_.resize(right_depth);
  count = 1;
  for (std::size_t j = 1; j <= right_depth; ++j) {
    const SiteTensor& site = chain.site(n - j);
    const std::size_t radix = site.phys_dim();
    count *= radix;
    charge(count, site.left_dim(), chain.site(n - 1).right_dim());
    auto& level = right_[j - 1];
    level.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
      const std::size_t s = q % radix;
      if (j == 1) {
        level[q] = site.slice_matrix(s);
      } else {
        matmul(site.slice_matrix(s), right_[j - 2][q / radix], level[q]);
      }
    }
  }
  const auto& deepest = right_.back();
  right_t_.resize(deepest.size());
  for (std::size_t q = 0; q < deepest.size(); ++q) right_t_[q] = deepest[q].transposed();

  const auto& leaves = left_.back();
  for (std::size_t q = 0; q < right_t_.size(); ++q) {
    for (std::size_t p = 0; p < left_count_; ++p) {
      coeffs_[p + left_count_ * q] = frobenius_dot(leaves[p], right_t_[q]);
    }
  }
}

std::vector<std::vector<double>> CoefficientTree::gradient(std::span<const double> weights) const {
  if (weights.size() != coeffs_.size()) throw ShapeError("coefficient weights have the wrong length");
  const TensorChain& chain = *chain_;
  const std::size_t n = chain.size();
  std::vector<std::vector<double>> grads(n);
  for (std::size_t k = 0; k < n; ++k) grads[k].assign(chain.site(k).values().size(), 0.0);

  if (n == 1) {
    const SiteTensor& site = chain.site(0);
    for (std::size_t s = 0; s < site.phys_dim(); ++s) {
      for (std::size_t a = 0; a < site.left_dim(); ++a) {
        grads[0][(s * site.left_dim() + a) * site.right_dim() + a] = weights[s];
      }
    }
    return grads;
  }

  auto accumulate_slice = [&](std::size_t k, std::size_t s, const Matrix& g) {
    const std::size_t sz = chain.site(k).slice_size();
    axpy(1.0, g.flat(), std::span<double>(grads[k].data() + s * sz, sz));
  };

  // Adjoints of the leaves: dB/dL_p = R_q^T, dB/dR^T_q = L_p.
  const auto& leaves = left_.back();
  std::vector<Matrix> left_adj(leaves.size());
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    left_adj[p] = Matrix(leaves[p].rows(), leaves[p].cols());
  }
  std::vector<Matrix> right_t_adj(right_t_.size());
  for (std::size_t q = 0; q < right_t_.size(); ++q) {
    right_t_adj[q] = Matrix(right_t_[q].rows(), right_t_[q].cols());
    for (std::size_t p = 0; p < left_count_; ++p) {
      const double w = weights[p + left_count_ * q];
      if (w == 0.0) continue;
      axpy(w, right_t_[q].flat(), left_adj[p].flat());
      axpy(w, leaves[p].flat(), right_t_adj[q].flat());
    }
  }

  // Left tree, deepest level first. L_p = L_u A_{j-1}[s].
  Matrix tmp;
  for (std::size_t j = split_; j >= 1; --j) {
    const SiteTensor& site = chain.site(j - 1);
    const std::size_t stride = left_[j - 1].size() / site.phys_dim();
    std::vector<Matrix> parent_adj;
    if (j > 1) {
      parent_adj.resize(stride);
      for (std::size_t u = 0; u < stride; ++u) {
        parent_adj[u] = Matrix(left_[j - 2][u].rows(), left_[j - 2][u].cols());
      }
    }
    for (std::size_t p = 0; p < left_adj.size(); ++p) {
      const std::size_t s = p / stride;
      if (j == 1) {
        accumulate_slice(0, s, left_adj[p]);
        continue;
      }
      const std::size_t u = p % stride;
      matmul(left_[j - 2][u].transposed(), left_adj[p], tmp);
      accumulate_slice(j - 1, s, tmp);
      matmul_add(left_adj[p], site.slice_matrix(s).transposed(), parent_adj[u]);
    }
    left_adj = std::move(parent_adj);
  }

  // Right tree. R_q = A_{n-j}[s] R_{q / radix}.
  std::vector<Matrix> right_adj(right_t_adj.size());
  for (std::size_t q = 0; q < right_adj.size(); ++q) right_adj[q] = right_t_adj[q].transposed();
  for (std::size_t j = n - split_; j >= 1; --j) {
    const std::size_t k = n - j;
    const SiteTensor& site = chain.site(k);
    const std::size_t radix = site.phys_dim();
    std::vector<Matrix> child_adj;
    if (j > 1) {
      child_adj.resize(right_[j - 2].size());
      for (std::size_t v = 0; v < child_adj.size(); ++v) {
        child_adj[v] = Matrix(right_[j - 2][v].rows(), right_[j - 2][v].cols());
      }
    }
    for (std::size_t q = 0; q < right_adj.size(); ++q) {
      const std::size_t s = q % radix;
      if (j == 1) {
        accumulate_slice(k, s, right_adj[q]);
        continue;
      }
      const std::size_t v = q / radix;
      matmul(right_adj[q], right_[j - 2][v].transposed(), tmp);
      accumulate_slice(k, s, tmp);
      matmul_add(site.slice_matrix(s).transposed(), right_adj[q], child_adj[v]);
    }
    right_adj = std::move(child_adj);
  }
  return grads;
}

void for_each_coefficient_streaming(const TensorChain& chain,
                                    const std::function<void(std::size_t, double)>& visit) {
  const std::size_t n = chain.size();
  coefficient_count(chain);
  if (n == 1) {
    const SiteTensor& site = chain.site(0);
    for (std::size_t s = 0; s < site.phys_dim(); ++s) visit(s, site.slice_matrix(s).trace());
    return;
  }
  std::vector<std::size_t> strides(n, 1);
  for (std::size_t k = 1; k < n; ++k) strides[k] = strides[k - 1] * chain.site(k - 1).phys_dim();
  // Last site's slices, transposed, so each leaf is a single dot product.
  const SiteTensor& last = chain.site(n - 1);
  std::vector<Matrix> last_t(last.phys_dim());
  for (std::size_t s = 0; s < last.phys_dim(); ++s) last_t[s] = last.slice_matrix(s).transposed();

  std::vector<Matrix> stack(n - 1);
  // Depth-first over prefixes of length 1..n-1.
  std::function<void(std::size_t, std::size_t)> descend = [&](std::size_t depth, std::size_t index) {
    const Matrix& prefix = stack[depth - 1];
    if (depth == n - 1) {
      for (std::size_t s = 0; s < last.phys_dim(); ++s) {
        visit(index + s * strides[n - 1], frobenius_dot(prefix, last_t[s]));
      }
      return;
    }
    const SiteTensor& site = chain.site(depth);
    for (std::size_t s = 0; s < site.phys_dim(); ++s) {
      matmul(prefix, site.slice_matrix(s), stack[depth]);
      descend(depth + 1, index + s * strides[depth]);
    }
  };
  const SiteTensor& first = chain.site(0);
  for (std::size_t s = 0; s < first.phys_dim(); ++s) {
    stack[0] = first.slice_matrix(s);
    descend(1, s);
  }
}

std::vector<double> coefficient_tensor(const TensorChain& chain) {
  try {
    return CoefficientTree(chain).coefficients();
  } catch (const CapacityError&) {
    std::vector<double> out(coefficient_count(chain), 0.0);
    for_each_coefficient_streaming(chain, [&](std::size_t i, double v) { out[i] = v; });
    return out;
  }
}

}  // namespace mpsntk
