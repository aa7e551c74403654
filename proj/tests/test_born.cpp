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
#include <functional>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mpsntk/born.hpp"
#include "mpsntk/errors.hpp"

using namespace mpsntk;

namespace {

TensorChain binary_chain(std::size_t n, std::size_t d, std::uint64_t seed, double sigma = 1.0) {
  const std::vector<double> sig(n, sigma);
  return init_random(ChainSpec::uniform(n, 2, d, true), sig, seed);
}

// Chain with every slice equal to 1 at bond dimension 1: B = 1 everywhere.
TensorChain uniform_chain(std::size_t n) {
  const std::vector<double> sig(n, 1.0);
  TensorChain chain = TensorChain::zeros(ChainSpec::uniform(n, 2, 1, true), sig);
  for (std::size_t k = 0; k < n; ++k) {
    for (double& v : chain.mutable_site(k).values()) v = 1.0;
  }
  return chain;
}

}  // namespace

TEST_CASE("bit strings") {
  CHECK(format_bits(0b0110, 4) == "0110");
  CHECK(format_bits(0b0001, 4) == "1000");
  CHECK(parse_bits("1000") == 1);
  CHECK(parse_bits(format_bits(37, 7)) == 37);
  CHECK_THROWS_AS(parse_bits("10a"), InputError);
  CHECK(coefficient_index(0, 3) == 7);
  CHECK(coefficient_index(5, 3) == 2);
}

TEST_CASE("model construction guards") {
  CHECK_THROWS_AS(BornModel(binary_chain(23, 1, 1), {}), CapacityError);
  const std::vector<double> sig(3, 1.0);
  CHECK_THROWS_AS(BornModel(init_random(ChainSpec::uniform(3, 3, 2, true), sig, 1), {}), ShapeError);
  CHECK_THROWS_AS(BornModel(binary_chain(3, 2, 1), {8}), InputError);
  const BornModel m(binary_chain(3, 2, 1), {1, 2, 1});
  REQUIRE(m.distinct_training().size() == 2);
  CHECK(m.distinct_training()[0].second == 2);
}

TEST_CASE("zero chain has zero partition function") {
  const std::vector<double> sig(4, 1.0);
  const BornModel m(TensorChain::zeros(ChainSpec::uniform(4, 2, 3, true), sig), {});
  CHECK(partition_function(m) == 0.0);
  CHECK(partition_function_enumerated(m) == 0.0);
}

TEST_CASE("partition function by enumeration equals the coefficient formula") {
  for (std::size_t n : {1, 2, 5, 7}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const BornModel m(binary_chain(n, 3, seed), {});
      const double a = partition_function(m);
      const double b = partition_function_enumerated(m);
      CHECK(std::abs(a - b) <= 1e-12 * b);
      const auto psi = m.amplitudes();
      for (std::size_t x = 0; x < psi.size(); ++x) {
        CHECK(psi[x] == doctest::Approx(m.amplitude(x)).epsilon(1e-12).scale(1e-12));
      }
    }
  }
}

TEST_CASE("negative log-likelihood") {
  const std::size_t n = 4;
  const BornModel uniform(uniform_chain(n), {0, 3, 9, 9, 15});
  CHECK(nll(uniform) == doctest::Approx(5.0 * n * std::log(2.0)));

  BornModel single(binary_chain(3, 2, 4), {6});
  const double p = std::pow(single.amplitude(6), 2) / partition_function(single);
  CHECK(nll(single) == doctest::Approx(-std::log(p)));

  const BornModel twice(binary_chain(3, 2, 4), {6, 6});
  CHECK(nll(twice) == doctest::Approx(-2.0 * std::log(p)));

  // Zero the amplitude of string 000: B[111] = tr(A_0[1] A_1[1] A_2[1]).
  TensorChain z = uniform_chain(3);
  z.mutable_site(0).at(1, 0, 0) = 0.0;
  const BornModel zero(z, {0});
  CHECK(zero.amplitude(0) == 0.0);
  CHECK_THROWS_AS(nll(zero), NumericalError);
  CHECK_THROWS_AS(training_direction(zero, 0), NumericalError);
}

TEST_CASE("training direction equals -dL/dPsi") {
  const std::size_t n = 3;
  BornModel model(binary_chain(n, 3, 7), {1, 4, 6});
  std::vector<double> psi = model.amplitudes();
  auto loss = [&](const std::vector<double>& a) {
    double z = 0.0;
    for (double v : a) z += v * v;
    double l = 3.0 * std::log(z);
    for (BitString x : model.training()) l -= std::log(a[x] * a[x]);
    return l;
  };
  const double h = 1e-6;
  for (std::size_t j = 0; j < 3; ++j) {
    const BitString x = model.training()[j];
    auto plus = psi, minus = psi;
    plus[x] += h;
    minus[x] -= h;
    const double fd = -(loss(plus) - loss(minus)) / (2 * h);
    CHECK(std::abs(training_direction(model, j) - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  CHECK(training_direction(std::sqrt(2.0 / 4.0), 2.0, 4) == doctest::Approx(0.0).scale(1.0));
  CHECK(training_direction(1e-9, 1.0, 2) > 1e8);
}

TEST_CASE("closed form") {
  const double psi0 = -0.3, z = 1.2, k = 0.1;
  const auto at0 = closed_form_born(psi0, z, 4, k, 0.0);
  CHECK(at0.psi == psi0);
  CHECK(at0.probability == doctest::Approx(psi0 * psi0 / z));
  const auto late = closed_form_born(psi0, z, 4, k, 1e4);
  CHECK(late.probability == doctest::Approx(0.25));
  CHECK(late.psi < 0.0);
  const double fixed = std::sqrt(z / 4);
  CHECK(closed_form_born(fixed, z, 4, k, 3.0).psi == doctest::Approx(fixed));
  const auto mid = closed_form_born(psi0, z, 4, k, 2.0);
  CHECK(mid.probability == doctest::Approx(mid.psi * mid.psi / z));
  CHECK_THROWS_AS(closed_form_born(psi0, 0.0, 4, k, 1.0), InputError);
  CHECK_THROWS_AS(closed_form_born(psi0, z, 4, -k, 1.0), InputError);
  CHECK_THROWS_AS(closed_form_born(psi0, z, 0, k, 1.0), InputError);
}

TEST_CASE("characteristic times") {
  CHECK(unnormalized_time_estimate(4, 4) == 1.0);
  CHECK(unnormalized_time_estimate(6, 64) == 0.25);
  CHECK(characteristic_time(2.0, 4, 0.5) == 0.25);
  CHECK_THROWS_AS(characteristic_time(0.0, 4, 0.5), InputError);
  const std::vector<double> ones(6, 1.0);
  CHECK(analytic_born_diag(ones) == doctest::Approx(6.0 / 64.0));
  const std::vector<double> sig{2.0, 1.0};
  CHECK(analytic_born_diag(sig) == doctest::Approx(0.5 * 0.5 + 0.5 * 2.0));
}

TEST_CASE("zero-length flow records a normalized initial state") {
  BornModel model(binary_chain(4, 4, 3), {1, 2});
  BornFlowOptions opt;
  opt.t_end = 0.0;
  const auto tr = integrate_born_flow(model, opt);
  REQUIRE(tr.size() == 1);
  CHECK(tr.total_probability[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr.z[0] == doctest::Approx(partition_function(model)));
}

TEST_CASE("flow keeps normalization and signs and memorizes a single string") {
  BornModel model(binary_chain(4, 8, 11), {5});
  const double z0 = partition_function(model);
  const double k = born_ntk(model, std::vector<BitString>{5}).values(0, 0);
  const double t_char = characteristic_time(z0, 1, k);
  const double sign0 = model.amplitude(5);
  BornFlowOptions opt;
  opt.t_end = 8.0 * t_char;
  opt.dt = t_char / 20.0;
  const auto tr = integrate_born_flow(model, opt);
  for (std::size_t r = 0; r < tr.size(); ++r) {
    CHECK(std::abs(tr.total_probability[r] - 1.0) < 1e-8);
    CHECK(std::signbit(tr.amplitudes[r][0]) == std::signbit(sign0));
  }
  CHECK(tr.probabilities.back()[0] > 0.95);
  CHECK(nll(model) < 0.05);
  std::ostringstream os;
  write_born_csv(os, tr, model.distinct_training(), 4);
  CHECK(os.str().rfind("t,Z,P_1010\n", 0) == 0);
}

TEST_CASE("flow respects multiplicities") {
  BornModel model(binary_chain(3, 8, 12), {1, 1, 6});
  BornFlowOptions opt;
  opt.t_end = 40.0;
  opt.dt = 0.05;
  const auto tr = integrate_born_flow(model, opt);
  CHECK(tr.probabilities.back()[0] == doctest::Approx(2.0 / 3.0).epsilon(0.02));
  CHECK(tr.probabilities.back()[1] == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("Born kernel is nearly diagonal at large bond dimension") {
  const BornModel model(binary_chain(4, 48, 5), {});
  std::vector<BitString> all;
  for (BitString x = 0; x < 16; ++x) all.push_back(x);
  const auto k = born_ntk(model, all);
  CHECK(max_offdiag_ratio(k.values) < 0.2);
  Eigen::MatrixXd small = Eigen::MatrixXd::Identity(3, 3);
  small(0, 2) = small(2, 0) = 0.3;
  CHECK(max_offdiag_ratio(small) == doctest::Approx(0.3));
}

TEST_CASE("single-site partition function is Gamma with shape 1") {
  const std::vector<double> sig{1.0};
  const ZStudy st = z_distribution_study(1, sig, 4, 2000, 9);
  CHECK(st.fit.shape == doctest::Approx(1.0).epsilon(0.1));
  CHECK(st.expected_shape == 1.0);
  CHECK(mean(st.samples) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(st.oracle_mean == 1.0);
  CHECK_THROWS_AS(z_distribution_study(1, sig, 4, 100, 9), ConfigError);
  const std::vector<double> many(25, 1.0);
  CHECK_THROWS_AS(z_distribution_study(25, many, 2, 200, 9), ConfigError);
  std::ostringstream os;
  write_z_csv(os, st);
  CHECK(os.str().rfind("trial,seed,Z\n0,", 0) == 0);
}
