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

#include "mpsntk/gp_check.hpp"

#include <algorithm>
#include <cmath>

#include "mpsntk/errors.hpp"
#include "mpsntk/parallel.hpp"
#include "mpsntk/rng.hpp"
#include "mpsntk/stats.hpp"
#include "mpsntk/tensor_chain.hpp"

namespace mpsntk {

Eigen::MatrixXd analytic_covariance(const FeatureMaps& fmaps, std::span<const double> sigmas,
                                    const Dataset& data) {
  if (sigmas.size() != fmaps.size()) throw ShapeError("one sigma per site is required");
  double prod = 1.0;
  for (double s : sigmas) prod *= s * s;
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      c(i, j) = c(j, i) = prod * product_kernel(fmaps, data[static_cast<std::size_t>(i)],
                                                data[static_cast<std::size_t>(j)]);
    }
  }
  return c;
}

std::vector<GpCheckReport> gp_limit_check(std::span<const std::size_t> bond_dims,
                                          const FeatureMaps& fmaps, std::span<const double> sigmas,
                                          const Dataset& data, std::size_t trials,
                                          std::uint64_t seed, bool periodic, std::size_t threads) {
  if (trials < 500) throw ConfigError("GP check needs at least 500 trials", "trials");
  if (data.empty()) throw ConfigError("GP check needs a dataset", "dataset");
  const Eigen::MatrixXd analytic = analytic_covariance(fmaps, sigmas, data);
  const std::size_t m = data.size();
  const double nt = static_cast<double>(trials);

  std::vector<GpCheckReport> reports;
  for (std::size_t d : bond_dims) {
    const ChainSpec spec = ChainSpec::uniform(fmaps, d, periodic);
    spec.validate();
    GpCheckReport r;
    r.bond_dim = d;
    r.trials = trials;
    r.dataset = data;
    r.analytic = analytic;
    r.samples.assign(trials, std::vector<double>(m));
    parallel_for(trials, threads, [&](std::size_t t) {
      const TensorChain chain = init_random(spec, sigmas, derive_seed(seed, d, t));
      for (std::size_t i = 0; i < m; ++i) r.samples[t][i] = evaluate(chain, fmaps, data[i]);
    });

    const auto mi = static_cast<Eigen::Index>(m);
    r.mean = Eigen::VectorXd::Zero(mi);
    r.covariance = Eigen::MatrixXd::Zero(mi, mi);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(mi, mi);
    for (const auto& s : r.samples) {
      for (std::size_t i = 0; i < m; ++i) {
        r.mean(static_cast<Eigen::Index>(i)) += s[i];
        for (std::size_t j = 0; j < m; ++j) {
          const double p = s[i] * s[j];
          r.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += p;
          second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += p * p;
        }
      }
    }
    r.mean /= nt;
    r.covariance /= nt;
    second /= nt;
    r.standard_error =
        ((second - r.covariance.cwiseProduct(r.covariance)) * (nt / (nt - 1.0) / nt)).cwiseSqrt();
    const Eigen::MatrixXd dev = (r.covariance - analytic).cwiseAbs();
    r.max_abs_deviation = dev.maxCoeff();
    r.max_z = 0.0;
    for (Eigen::Index i = 0; i < mi; ++i) {
      for (Eigen::Index j = 0; j < mi; ++j) {
        const double se = r.standard_error(i, j);
        if (se > 0.0) r.max_z = std::max(r.max_z, dev(i, j) / se);
      }
    }
    std::vector<double> column(trials);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t t = 0; t < trials; ++t) column[t] = r.samples[t][i];
      r.normality_p.push_back(dagostino_pearson(column).p_value);
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace mpsntk
