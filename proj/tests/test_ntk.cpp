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

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mpsntk/errors.hpp"
#include "mpsntk/ntk.hpp"
#include "mpsntk/rng.hpp"
#include "support.hpp"

using namespace mpsntk;

namespace {

Dataset random_points(Rng& rng, std::size_t m, std::size_t n) {
  Dataset d(m, Sample(n));
  for (auto& x : d) {
    for (double& v : x) v = rng.uniform();
  }
  return d;
}

}  // namespace

TEST_CASE("empirical kernel equals the learning-rate weighted gradient Gram matrix") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMaps fmaps;
    const TensorChain chain = testing::random_chain(rng, 4, 3, 3, trial % 2 == 0, fmaps, trial);
    Dataset data;
    for (int i = 0; i < 5; ++i) data.push_back(testing::random_custom_input(rng, chain.size()));
    const KernelMatrix k = empirical_ntk(chain, fmaps, data);
    CHECK(k.source == KernelMatrix::Source::kEmpirical);
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = 0; j < data.size(); ++j) {
        double want = 0.0;
        for (std::size_t s = 0; s < chain.size(); ++s) {
          const auto gi = grad_site(chain, fmaps, data[i], s);
          const auto gj = grad_site(chain, fmaps, data[j], s);
          double d = 0.0;
          for (std::size_t p = 0; p < gi.size(); ++p) d += gi[p] * gj[p];
          want += chain.bond_learning_rate(s) * d;
        }
        CHECK(k.values(i, j) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("analytic kernel for small chains by hand") {
  const auto fmaps = replicate(FeatureMap::trig_pair(), 2);
  const auto kern = kernels_for(fmaps);
  const std::vector<double> sig{1.5, 0.5};
  const Dataset data{{0.1, 0.7}, {0.4, 0.2}};
  const KernelMatrix k = analytic_ntk(kern, sig, data);
  const double k1 = fmaps[0].site_kernel(0.1, 0.4);
  const double k2 = fmaps[1].site_kernel(0.7, 0.2);
  CHECK(k.values(0, 1) == doctest::Approx(k1 * 0.25 * k2 + k2 * 2.25 * k1));
  CHECK(k.values(0, 0) == doctest::Approx(0.25 + 2.25));

  const auto one = replicate(FeatureMap::trig_pair(), 1);
  const std::vector<double> s1{3.0};
  const KernelMatrix k1site = analytic_ntk(kernels_for(one), s1, Dataset{{0.2}, {0.6}});
  CHECK(k1site.values(0, 1) == doctest::Approx(one[0].site_kernel(0.2, 0.6)));
}

TEST_CASE("doubling every sigma scales the analytic kernel by 4^(n-1)") {
  Rng rng(11);
  const std::size_t n = 4;
  const auto fmaps = replicate(FeatureMap::random_fourier(6, 0.8, 3), n);
  const Dataset data = random_points(rng, 6, n);
  const std::vector<double> sig{0.7, 1.1, 0.9, 1.3};
  std::vector<double> twice = sig;
  for (double& s : twice) s *= 2.0;
  const auto a = analytic_ntk(kernels_for(fmaps), sig, data).values;
  const auto b = analytic_ntk(kernels_for(fmaps), twice, data).values;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      CHECK(b(i, j) == doctest::Approx(a(i, j) * std::pow(4.0, n - 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("seed-averaged empirical kernel approaches the analytic kernel") {
  Rng rng(12);
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> sig(3, 1.0);
  const Dataset data = random_points(rng, 4, 3);
  const auto want = analytic_ntk(kernels_for(fmaps), sig, data).values;
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(4, 4);
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    avg += empirical_ntk(init_random(ChainSpec::uniform(fmaps, 6), sig, derive_seed(5, 6, t)), fmaps, data)
               .values;
  }
  avg /= trials;
  CHECK(relative_frobenius_error(avg, want) < 0.05);
}

TEST_CASE("convergence curve error shrinks with the bond dimension") {
  Rng rng(13);
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> sig(3, 1.0);
  const Dataset data = random_points(rng, 5, 3);
  const std::vector<std::size_t> dims{2, 32};
  const auto rows = convergence_curve(dims, 8, fmaps, sig, data, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].median_error < rows[0].median_error);
  CHECK(rows[0].errors.size() == 8);
  const auto one = convergence_curve(dims, 1, fmaps, sig, data, 1);
  CHECK(std::isnan(one[0].std_error));
  const auto threaded = convergence_curve(dims, 8, fmaps, sig, data, 1, true, 3);
  CHECK(threaded[1].errors == rows[1].errors);
}

TEST_CASE("Gaussian product kernels on distinct points are positive definite") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3;
    MercerKernels kern(n, MercerKernel::gaussian(0.5));
    const Dataset data = random_points(rng, 12, n);
    const std::vector<double> sig(n, 1.0);
    const PdReport r = check_positive_definite(analytic_ntk(kern, sig, data));
    CHECK(r.positive);
    CHECK(r.min_eigenvalue > 0.0);
  }
}

TEST_CASE("duplicated points make the kernel singular") {
  MercerKernels kern(2, MercerKernel::gaussian(1.0));
  const Dataset data{{0.1, 0.2}, {0.1, 0.2}, {0.5, 0.9}};
  const std::vector<double> sig(2, 1.0);
  const PdReport r = check_positive_definite(analytic_ntk(kern, sig, data));
  CHECK(std::abs(r.min_eigenvalue) < 1e-12);
}

TEST_CASE("non-symmetric kernels are rejected") {
  Eigen::MatrixXd k(2, 2);
  k << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(check_positive_definite(k), InputError);
  Eigen::MatrixXd neg(2, 2);
  neg << 1.0, 2.0, 2.0, 1.0;
  CHECK_FALSE(check_positive_definite(neg).positive);
}

TEST_CASE("kernel CSV layout") {
  KernelMatrix k;
  k.values = Eigen::MatrixXd::Identity(2, 2);
  k.values(0, 1) = k.values(1, 0) = 0.1;
  std::ostringstream os;
  write_kernel_csv(os, k);
  CHECK(os.str() == "x0,x1\n1,0.10000000000000001\n0.10000000000000001,1\n");
}
