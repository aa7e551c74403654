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

// Independent oracles shared by the unit tests. Nothing here calls the
// contraction code under test.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mpsntk/feature_map.hpp"
#include "mpsntk/rng.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk::testing {

/// Psi(x) as the explicit sum over every physical and bond index assignment.
inline double brute_force_value(const TensorChain& chain, const FeatureMaps& fmaps,
                                const std::vector<double>& x) {
  const std::size_t n = chain.size();
  std::vector<std::vector<double>> phi(n);
  for (std::size_t k = 0; k < n; ++k) phi[k] = fmaps[k].apply(x[k]);
  // bonds[k] is the left bond of site k; bonds[n] closes onto bonds[0].
  std::vector<std::size_t> bonds(n + 1, 0), phys(n, 0);
  double total = 0.0;
  std::function<void(std::size_t, double)> walk_phys;
  std::function<void(std::size_t)> walk_bonds = [&](std::size_t k) {
    if (k == n) {
      bonds[n] = chain.periodic() ? bonds[0] : 0;
      walk_phys(0, 1.0);
      return;
    }
    for (std::size_t a = 0; a < chain.site(k).left_dim(); ++a) {
      bonds[k] = a;
      walk_bonds(k + 1);
    }
  };
  walk_phys = [&](std::size_t k, double acc) {
    if (k == n) {
      total += acc;
      return;
    }
    const SiteTensor& site = chain.site(k);
    const std::size_t right = k + 1 < n ? bonds[k + 1] : bonds[n];
    for (std::size_t s = 0; s < site.phys_dim(); ++s) {
      walk_phys(k + 1, acc * phi[k][s] * site.at(s, bonds[k], right));
    }
  };
  walk_bonds(0);
  return total;
}

/// Chain with uniform random dimensions within the given caps.
inline TensorChain random_chain(Rng& rng, std::size_t max_n, std::size_t max_phys,
                                std::size_t max_bond, bool periodic, FeatureMaps& fmaps,
                                std::uint64_t seed) {
  const std::size_t n = 1 + rng.bits() % max_n;
  ChainSpec spec;
  spec.periodic = periodic;
  fmaps.clear();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = 1 + rng.bits() % max_phys;
    spec.phys_dims.push_back(p);
    std::vector<std::vector<double>> table(3, std::vector<double>(p));
    for (auto& row : table) {
      for (double& v : row) v = rng.normal();
    }
    fmaps.push_back(FeatureMap::custom(table));
  }
  for (std::size_t k = 0; k <= n; ++k) spec.bond_dims.push_back(1 + rng.bits() % max_bond);
  if (periodic) {
    spec.bond_dims[n] = spec.bond_dims[0];
  } else {
    spec.bond_dims[0] = spec.bond_dims[n] = 1;
  }
  std::vector<double> sigmas(n);
  for (double& s : sigmas) s = 0.5 + rng.uniform();
  return init_random(spec, sigmas, seed);
}

inline std::vector<double> random_custom_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (double& v : x) v = static_cast<double>(rng.bits() % 3);
  return x;
}

}  // namespace mpsntk::testing
