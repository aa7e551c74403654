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

#include "mpsntk/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "mpsntk/csv.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/parallel.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk {

KernelMatrix empirical_ntk(const TensorChain& chain, std::span<const Environments> envs) {
  const std::size_t m = envs.size();
  const std::size_t n = chain.size();
  for (const auto& e : envs) {
    if (!e.valid_for(chain)) throw InputError("environments are stale for this chain");
    if (e.size() != n) throw ShapeError("environments do not match the chain length");
  }
  std::vector<double> eta(n);
  for (std::size_t k = 0; k < n; ++k) eta[k] = chain.bond_learning_rate(k);

  KernelMatrix out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  out.source = KernelMatrix::Source::kEmpirical;
  out.chain_seed = chain.seed();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double phi = dot(envs[i].features(k), envs[j].features(k));
        if (phi == 0.0) continue;
        total += eta[k] * phi * frobenius_dot(envs[i].env(k), envs[j].env(k));
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = total;
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = total;
    }
  }
  return out;
}

KernelMatrix empirical_ntk(const TensorChain& chain, const FeatureMaps& fmaps, const Dataset& data) {
  std::vector<Environments> envs;
  envs.reserve(data.size());
  for (const auto& x : data) envs.emplace_back(chain, fmaps, x);
  return empirical_ntk(chain, envs);
}

KernelMatrix analytic_ntk(const MercerKernels& kernels, std::span<const double> sigmas,
                          const Dataset& data) {
  const std::size_t n = kernels.size();
  if (sigmas.size() != n) throw ShapeError("one sigma per site is required");
  const std::size_t m = data.size();
  KernelMatrix out;
  out.source = KernelMatrix::Source::kAnalyticLimit;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<double> kk(n);
  for (std::size_t i = 0; i < m; ++i) {
    if (data[i].size() != n) throw ShapeError("sample " + std::to_string(i) + " has the wrong length");
    for (std::size_t j = i; j < m; ++j) {
      for (std::size_t k = 0; k < n; ++k) kk[k] = kernels[k](data[i][k], data[j][k]);
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double term = kk[k];
        for (std::size_t l = 0; l < n; ++l) {
          if (l != k) term *= sigmas[l] * sigmas[l] * kk[l];
        }
        total += term;
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = total;
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = total;
    }
  }
  return out;
}

double relative_frobenius_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("kernel shapes differ");
  const double denom = b.norm();
  if (denom == 0.0) throw NumericalError("reference kernel is zero");
  return (a - b).norm() / denom;
}

std::vector<ConvergenceRow> convergence_curve(std::span<const std::size_t> bond_dims,
                                              std::size_t trials, const FeatureMaps& fmaps,
                                              std::span<const double> sigmas, const Dataset& data,
                                              std::uint64_t seed, bool periodic,
                                              std::size_t threads) {
  if (trials == 0) throw ConfigError("at least one trial is required", "trials");
  const KernelMatrix reference = analytic_ntk(kernels_for(fmaps), sigmas, data);
  std::vector<ConvergenceRow> rows;
  for (std::size_t d : bond_dims) {
    const ChainSpec spec = ChainSpec::uniform(fmaps, d, periodic);
    spec.validate();
    std::vector<double> errors(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      const TensorChain chain = init_random(spec, sigmas, derive_seed(seed, d, t));
      errors[t] = relative_frobenius_error(empirical_ntk(chain, fmaps, data).values, reference.values);
    });
    ConvergenceRow row;
    row.bond_dim = d;
    row.errors = errors;
    double sum = 0.0;
    for (double e : errors) sum += e;
    row.mean_error = sum / static_cast<double>(trials);
    if (trials > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - row.mean_error) * (e - row.mean_error);
      row.std_error = std::sqrt(ss / static_cast<double>(trials - 1));
    } else {
      row.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(errors.begin(), errors.end());
    const std::size_t h = trials / 2;
    row.median_error = trials % 2 ? errors[h] : 0.5 * (errors[h - 1] + errors[h]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_symmetric(const Eigen::MatrixXd& k, const char* what) {
  if (k.rows() != k.cols()) throw ShapeError(std::string(what) + " is not square");
  const double scale = std::max(k.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError(std::string(what) + " is not symmetric");
  }
}

PdReport check_positive_definite(const Eigen::MatrixXd& k) {
  require_symmetric(k, "kernel");
  if (k.rows() == 0) throw ShapeError("kernel is empty");
  const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-solve did not converge");
  const auto& ev = solver.eigenvalues();
  PdReport r;
  r.min_eigenvalue = ev.minCoeff();
  r.max_eigenvalue = ev.maxCoeff();
  r.positive = r.min_eigenvalue > -1e-10 * std::abs(r.max_eigenvalue);
  return r;
}

PdReport check_positive_definite(const KernelMatrix& k) { return check_positive_definite(k.values); }

void write_kernel_csv(std::ostream& os, const KernelMatrix& k) {
  const std::size_t m = k.size();
  {
    csv::RowWriter row(os);
    for (std::size_t j = 0; j < m; ++j) row << "x" + std::to_string(j);
  }
  for (std::size_t i = 0; i < m; ++i) {
    csv::RowWriter row(os);
    for (std::size_t j = 0; j < m; ++j) {
      row << k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
}

}  // namespace mpsntk
