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

#include "mpsntk/tensor_chain.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "mpsntk/errors.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk {
namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

ChainSpec ChainSpec::uniform(std::size_t n, std::size_t phys_dim, std::size_t bond_dim,
                             bool periodic) {
  ChainSpec spec;
  spec.periodic = periodic;
  spec.phys_dims.assign(n, phys_dim);
  spec.bond_dims.assign(n + 1, bond_dim);
  if (!periodic && n > 0) {
    spec.bond_dims.front() = 1;
    spec.bond_dims.back() = 1;
  }
  return spec;
}

ChainSpec ChainSpec::uniform(const FeatureMaps& fmaps, std::size_t bond_dim, bool periodic) {
  ChainSpec spec = uniform(fmaps.size(), 1, bond_dim, periodic);
  for (std::size_t k = 0; k < fmaps.size(); ++k) spec.phys_dims[k] = fmaps[k].phys_dim();
  return spec;
}

void ChainSpec::validate() const {
  const std::size_t n = phys_dims.size();
  if (n == 0) throw ConfigError("chain must have at least one site", "n");
  if (bond_dims.size() != n + 1) throw ConfigError("bond_dims must have n + 1 entries", "bond_dims");
  for (std::size_t p : phys_dims) {
    if (p == 0) throw ConfigError("physical dimensions must be >= 1", "phys_dim");
  }
  for (std::size_t b : bond_dims) {
    if (b == 0) throw ConfigError("bond dimensions must be >= 1", "bond_dim");
  }
  if (periodic && bond_dims.front() != bond_dims.back()) {
    throw ConfigError("periodic chain must close on a bond of equal dimension", "bond_dims");
  }
  if (!periodic && (bond_dims.front() != 1 || bond_dims.back() != 1)) {
    throw ConfigError("open chain must have outer bonds of dimension 1", "bond_dims");
  }
}

SiteTensor::SiteTensor(std::size_t phys_dim, std::size_t left_dim, std::size_t right_dim,
                       double init_sigma)
    : phys_(phys_dim), left_(left_dim), right_(right_dim), sigma_(init_sigma),
      values_(phys_dim * left_dim * right_dim, 0.0) {
  if (phys_dim == 0 || left_dim == 0 || right_dim == 0) {
    throw ConfigError("site tensor dimensions must be >= 1");
  }
  if (!(init_sigma > 0.0) || !std::isfinite(init_sigma)) {
    throw ConfigError("site sigma must be positive and finite", "sigma");
  }
}

Matrix SiteTensor::slice_matrix(std::size_t s) const {
  Matrix m(left_, right_);
  auto src = slice(s);
  std::copy(src.begin(), src.end(), m.data());
  return m;
}

TensorChain::TensorChain(std::vector<SiteTensor> sites, bool periodic, std::uint64_t seed)
    : sites_(std::move(sites)), periodic_(periodic), seed_(seed), version_(next_version()) {
  check_invariants();
}

void TensorChain::check_invariants() const {
  if (sites_.empty()) throw ConfigError("chain must have at least one site", "n");
  for (std::size_t k = 0; k + 1 < sites_.size(); ++k) {
    if (sites_[k].right_dim() != sites_[k + 1].left_dim()) {
      throw ShapeError("adjacent bond dimensions differ at site " + std::to_string(k));
    }
  }
  if (periodic_ && sites_.back().right_dim() != sites_.front().left_dim()) {
    throw ShapeError("periodic chain does not close");
  }
  if (!periodic_ && (sites_.front().left_dim() != 1 || sites_.back().right_dim() != 1)) {
    throw ShapeError("open chain must have outer bonds of dimension 1");
  }
}

TensorChain TensorChain::zeros(const ChainSpec& spec, std::span<const double> sigmas) {
  spec.validate();
  if (sigmas.size() != spec.size()) throw ConfigError("need one sigma per site", "sigma");
  std::vector<SiteTensor> sites;
  sites.reserve(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    sites.emplace_back(spec.phys_dims[k], spec.bond_dims[k], spec.bond_dims[k + 1], sigmas[k]);
  }
  return TensorChain(std::move(sites), spec.periodic);
}

const SiteTensor& TensorChain::site(std::size_t k) const {
  if (k >= sites_.size()) throw InputError("site index out of range");
  return sites_[k];
}

SiteTensor& TensorChain::mutable_site(std::size_t k) {
  if (k >= sites_.size()) throw InputError("site index out of range");
  version_ = next_version();
  return sites_[k];
}

ChainSpec TensorChain::spec() const {
  ChainSpec s;
  s.periodic = periodic_;
  for (const auto& site : sites_) {
    s.phys_dims.push_back(site.phys_dim());
    s.bond_dims.push_back(site.left_dim());
  }
  s.bond_dims.push_back(sites_.back().right_dim());
  return s;
}

std::vector<double> TensorChain::sigmas() const {
  std::vector<double> out;
  for (const auto& s : sites_) out.push_back(s.init_sigma());
  return out;
}

std::size_t TensorChain::parameter_count() const {
  std::size_t p = 0;
  for (const auto& s : sites_) p += s.values().size();
  return p;
}

void TensorChain::scale_site(std::size_t k, double c) {
  for (double& v : mutable_site(k).values()) v *= c;
}

double TensorChain::bond_learning_rate(std::size_t k) const {
  const auto& s = site(k);
  return 1.0 / std::sqrt(static_cast<double>(s.left_dim()) * static_cast<double>(s.right_dim()));
}

TensorChain init_random(const ChainSpec& spec, std::span<const double> sigmas, std::uint64_t seed) {
  TensorChain chain = TensorChain::zeros(spec, sigmas);
  std::vector<SiteTensor> sites = chain.sites();
  Rng rng(seed);
  for (auto& site : sites) {
    const double var = site.init_sigma() * site.init_sigma() /
                       std::sqrt(static_cast<double>(site.left_dim()) *
                                 static_cast<double>(site.right_dim()));
    const double sd = std::sqrt(var);
    for (double& v : site.values()) v = sd * rng.normal();
  }
  return TensorChain(std::move(sites), spec.periodic, seed);
}

void check_sample(const TensorChain& chain, const FeatureMaps& fmaps, std::span<const double> x) {
  if (x.size() != chain.size()) {
    throw ShapeError("sample length " + std::to_string(x.size()) + " differs from chain length " +
                     std::to_string(chain.size()));
  }
  if (fmaps.size() != chain.size()) throw ShapeError("need one feature map per site");
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (fmaps[k].phys_dim() != chain.site(k).phys_dim()) {
      throw ShapeError("feature map length differs from phys_dim at site " + std::to_string(k));
    }
  }
}

void site_matrix(const SiteTensor& site, std::span<const double> phi, Matrix& out) {
  if (phi.size() != site.phys_dim()) throw ShapeError("feature length differs from phys_dim");
  out.resize(site.left_dim(), site.right_dim());
  out.set_zero();
  for (std::size_t s = 0; s < site.phys_dim(); ++s) {
    if (phi[s] != 0.0) axpy(phi[s], site.slice(s), out.flat());
  }
}

double evaluate(const TensorChain& chain, const FeatureMaps& fmaps, std::span<const double> x) {
  check_sample(chain, fmaps, x);
  const std::size_t n = chain.size();
  std::vector<double> phi;
  Matrix m;
  Matrix acc;
  Matrix tmp;
  phi = fmaps[0].apply(x[0]);
  site_matrix(chain.site(0), phi, acc);
  if (n == 1) return acc.trace();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    phi = fmaps[k].apply(x[k]);
    site_matrix(chain.site(k), phi, m);
    matmul(acc, m, tmp);
    std::swap(acc, tmp);
  }
  phi = fmaps[n - 1].apply(x[n - 1]);
  site_matrix(chain.site(n - 1), phi, m);
  return trace_of_product(acc, m);
}

double evaluate_right_to_left(const TensorChain& chain, const FeatureMaps& fmaps,
                              std::span<const double> x) {
  check_sample(chain, fmaps, x);
  const std::size_t n = chain.size();
  std::vector<double> phi;
  Matrix m;
  Matrix acc;
  Matrix tmp;
  phi = fmaps[n - 1].apply(x[n - 1]);
  site_matrix(chain.site(n - 1), phi, acc);
  if (n == 1) return acc.trace();
  for (std::size_t k = n - 2; k >= 1; --k) {
    phi = fmaps[k].apply(x[k]);
    site_matrix(chain.site(k), phi, m);
    matmul(m, acc, tmp);
    std::swap(acc, tmp);
  }
  phi = fmaps[0].apply(x[0]);
  site_matrix(chain.site(0), phi, m);
  return trace_of_product(m, acc);
}

Environments::Environments(const TensorChain& chain, const FeatureMaps& fmaps,
                           std::span<const double> x)
    : version_(chain.version()) {
  check_sample(chain, fmaps, x);
  const std::size_t n = chain.size();
  features_.resize(n);
  std::vector<Matrix> mats(n);
  for (std::size_t k = 0; k < n; ++k) {
    features_[k] = fmaps[k].apply(x[k]);
    site_matrix(chain.site(k), features_[k], mats[k]);
  }
  envs_.resize(n);
  if (n == 1) {
    envs_[0] = Matrix::identity(chain.site(0).left_dim());
    value_ = mats[0].trace();
    return;
  }
  // prefix[k] = M_0 ... M_k, suffix[k] = M_k ... M_{n-1}
  std::vector<Matrix> prefix(n - 1);
  std::vector<Matrix> suffix(n);
  prefix[0] = mats[0];
  for (std::size_t k = 1; k + 1 < n; ++k) matmul(prefix[k - 1], mats[k], prefix[k]);
  suffix[n - 1] = mats[n - 1];
  for (std::size_t k = n - 2; k >= 1; --k) matmul(mats[k], suffix[k + 1], suffix[k]);

  // env(k) = (suffix[k+1] prefix[k-1])^T
  envs_[0] = suffix[1].transposed();
  envs_[n - 1] = prefix[n - 2].transposed();
  Matrix tmp;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    matmul(suffix[k + 1], prefix[k - 1], tmp);
    envs_[k] = tmp.transposed();
  }
  value_ = frobenius_dot(mats[n - 1], envs_[n - 1]);
}

std::vector<double> Environments::gradient(std::size_t k) const {
  const Matrix& e = env(k);
  const auto& phi = features_[k];
  std::vector<double> g(phi.size() * e.size());
  for (std::size_t s = 0; s < phi.size(); ++s) {
    for (std::size_t i = 0; i < e.size(); ++i) g[s * e.size() + i] = phi[s] * e.data()[i];
  }
  return g;
}

std::vector<double> grad_site(const TensorChain& chain, const FeatureMaps& fmaps,
                              std::span<const double> x, std::size_t k) {
  if (k >= chain.size()) throw InputError("site index out of range");
  return Environments(chain, fmaps, x).gradient(k);
}

}  // namespace mpsntk
