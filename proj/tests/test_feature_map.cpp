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
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mpsntk/errors.hpp"
#include "mpsntk/feature_map.hpp"

using namespace mpsntk;

TEST_CASE("binary map is a scaled one-hot on {0, 1}") {
  const auto f = FeatureMap::born_binary();
  CHECK(f.phys_dim() == 2);
  const auto one = f.apply(1.0);
  const auto zero = f.apply(0.0);
  CHECK(one[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(one[1] == 0.0);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(f.apply(0.5), InputError);
  CHECK(f.site_kernel(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(f.site_kernel(0.0, 1.0) == 0.0);
}

TEST_CASE("trigonometric pair has unit norm") {
  const auto f = FeatureMap::trig_pair();
  for (double x : {-1.3, 0.0, 0.25, 0.5, 1.0, 7.0}) {
    const auto v = f.apply(x);
    CHECK(v[0] * v[0] + v[1] * v[1] == doctest::Approx(1.0));
    CHECK(v[0] == doctest::Approx(std::cos(std::numbers::pi * x / 2)));
  }
  CHECK(f.site_kernel(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("random Fourier features approach the Gaussian kernel") {
  const double tau = 0.7;
  const auto f = FeatureMap::random_fourier(4000, tau, 11);
  CHECK(f.phys_dim() == 4000);
  const auto g = MercerKernel::gaussian(tau);
  for (double a : {0.0, 0.3}) {
    for (double b : {0.0, 0.5, 1.2}) {
      // Monte Carlo error of a 2000-frequency estimate is about 0.016.
      CHECK(std::abs(f.site_kernel(a, b) - g(a, b)) < 0.06);
    }
  }
  CHECK(f.site_kernel(0.4, 0.4) == doctest::Approx(1.0));
  const auto again = FeatureMap::random_fourier(4000, tau, 11);
  CHECK(again.apply(0.3) == f.apply(0.3));
  CHECK(FeatureMap::random_fourier(4000, tau, 12).apply(0.3) != f.apply(0.3));
}

TEST_CASE("random Fourier features reject bad shapes") {
  CHECK_THROWS_AS(FeatureMap::random_fourier(3, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(FeatureMap::random_fourier(0, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(FeatureMap::random_fourier(4, 0.0, 1), ConfigError);
}

TEST_CASE("custom table lookup") {
  const auto f = FeatureMap::custom({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(f.apply(1.0) == std::vector<double>{3.0, 4.0});
  CHECK_THROWS_AS(f.apply(2.0), InputError);
  CHECK_THROWS_AS(f.apply(0.5), InputError);
  CHECK_THROWS(FeatureMap::custom({{1.0}, {1.0, 2.0}}));
}

TEST_CASE("Mercer kernels") {
  const auto g = MercerKernel::gaussian(2.0);
  CHECK(g(1.0, 1.0) == 1.0);
  CHECK(g(0.0, 2.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(MercerKernel::for_map(FeatureMap::random_fourier(8, 2.0, 1)).is_gaussian());
  CHECK_FALSE(MercerKernel::for_map(FeatureMap::random_fourier(8, 2.0, 1), false).is_gaussian());
  CHECK_FALSE(MercerKernel::for_map(FeatureMap::trig_pair()).is_gaussian());
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> x{0.1, 0.2, 0.3}, y{0.3, 0.2, 0.9};
  double want = 1.0;
  for (int i = 0; i < 3; ++i) want *= fmaps[0].site_kernel(x[i], y[i]);
  CHECK(product_kernel(fmaps, x, y) == doctest::Approx(want));
  CHECK(product_kernel(kernels_for(fmaps), x, y) == doctest::Approx(want));
}
