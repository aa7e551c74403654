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
#include "mpsntk/coefficients.hpp"
#include "mpsntk/ensemble.hpp"
#include "mpsntk/errors.hpp"
#include "support.hpp"

using namespace mpsntk;
using mpsntk::testing::brute_force_value;
using mpsntk::testing::random_chain;
using mpsntk::testing::random_custom_input;

TEST_CASE("evaluate matches the explicit index sum") {
  Rng rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    FeatureMaps fmaps;
    const bool periodic = trial % 3 != 0;
    const TensorChain chain = random_chain(rng, 4, 3, 3, periodic, fmaps, 100 + trial);
    const auto x = random_custom_input(rng, chain.size());
    const double want = brute_force_value(chain, fmaps, x);
    const double got = evaluate(chain, fmaps, x);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    CHECK(std::abs(evaluate_right_to_left(chain, fmaps, x) - want) <=
          1e-12 * std::max(1.0, std::abs(want)));
    CHECK(std::abs(Environments(chain, fmaps, x).value() - want) <=
          1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("open chains use outer bonds of one") {
  const auto spec = ChainSpec::uniform(4, 2, 5, false);
  CHECK(spec.bond_dims.front() == 1);
  CHECK(spec.bond_dims.back() == 1);
  CHECK(spec.bond_dims[2] == 5);
  spec.validate();
}

TEST_CASE("spec validation names the offending field") {
  auto spec = ChainSpec::uniform(3, 2, 0, true);
  try {
    spec.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "bond_dim");
  }
  spec = ChainSpec::uniform(3, 0, 2, true);
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = ChainSpec::uniform(0, 2, 2, true);
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("sample validation") {
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> sig(3, 1.0);
  const TensorChain chain = init_random(ChainSpec::uniform(fmaps, 2), sig, 1);
  CHECK_THROWS_AS(evaluate(chain, fmaps, std::vector<double>{0.1, 0.2}), ShapeError);
  CHECK_THROWS_AS(evaluate(chain, replicate(FeatureMap::trig_pair(), 2), std::vector<double>{0.1, 0.2, 0.3}),
                  ShapeError);
  const auto wide = replicate(FeatureMap::random_fourier(4, 1.0, 9), 3);
  CHECK_THROWS_AS(evaluate(chain, wide, std::vector<double>{0.1, 0.2, 0.3}), ShapeError);
}

TEST_CASE("grad_site matches central finite differences") {
  Rng rng(2);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMaps fmaps;
    TensorChain chain = random_chain(rng, 4, 3, 3, trial % 2 == 0, fmaps, 500 + trial);
    const auto x = random_custom_input(rng, chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const auto g = grad_site(chain, fmaps, x, k);
      REQUIRE(g.size() == chain.site(k).values().size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        TensorChain plus = chain, minus = chain;
        plus.mutable_site(k).values()[i] += h;
        minus.mutable_site(k).values()[i] -= h;
        const double fd = (evaluate(plus, fmaps, x) - evaluate(minus, fmaps, x)) / (2 * h);
        CHECK(std::abs(fd - g[i]) < 1e-6);
      }
    }
  }
}

TEST_CASE("environments go stale when the chain changes") {
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> sig(3, 1.0);
  TensorChain chain = init_random(ChainSpec::uniform(fmaps, 2), sig, 4);
  const std::vector<double> x{0.1, 0.5, 0.9};
  Environments env(chain, fmaps, x);
  CHECK(env.valid_for(chain));
  chain.scale_site(1, 2.0);
  CHECK_FALSE(env.valid_for(chain));
}

TEST_CASE("scaling every site by c scales Psi by c^n") {
  const auto fmaps = replicate(FeatureMap::trig_pair(), 4);
  const std::vector<double> sig(4, 1.3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TensorChain chain = init_random(ChainSpec::uniform(fmaps, 3), sig, seed);
    const std::vector<double> x{0.2, 0.4, 0.6, 0.8};
    const double before = evaluate(chain, fmaps, x);
    for (std::size_t k = 0; k < 4; ++k) chain.scale_site(k, 1.7);
    CHECK(evaluate(chain, fmaps, x) == doctest::Approx(before * std::pow(1.7, 4)).epsilon(1e-12));
  }
}

TEST_CASE("initialization has the configured entry variance") {
  const std::vector<double> sig{0.5, 2.0};
  const ChainSpec spec = ChainSpec::uniform(2, 3, 40, true);
  const TensorChain chain = init_random(spec, sig, 77);
  for (std::size_t k = 0; k < 2; ++k) {
    double ss = 0.0, s = 0.0;
    const auto v = chain.site(k).values();
    for (double a : v) {
      s += a;
      ss += a * a;
    }
    const double var = ss / v.size();
    const double want = sig[k] * sig[k] / 40.0;
    // 4800 draws: relative standard error of the variance is about 2%.
    CHECK(std::abs(var / want - 1.0) < 0.08);
    CHECK(std::abs(s / v.size()) < 5.0 * std::sqrt(want / v.size()));
  }
  const TensorChain again = init_random(spec, sig, 77);
  CHECK(std::equal(chain.site(1).values().begin(), chain.site(1).values().end(),
                   again.site(1).values().begin()));
  CHECK(chain.bond_learning_rate(0) == doctest::Approx(1.0 / 40.0));
}

TEST_CASE("serialization round trips exactly") {
  Rng rng(5);
  FeatureMaps fmaps;
  const TensorChain chain = random_chain(rng, 4, 3, 3, true, fmaps, 99);
  std::stringstream ss;
  write_chain(ss, chain);
  const TensorChain back = read_chain(ss);
  REQUIRE(back.size() == chain.size());
  CHECK(back.periodic() == chain.periodic());
  CHECK(back.seed() == chain.seed());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const auto a = chain.site(k).values();
    const auto b = back.site(k).values();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(back.site(k).init_sigma() == chain.site(k).init_sigma());
  }
  std::stringstream bad("NOTMPS\n");
  CHECK_THROWS_AS(read_chain(bad), InputError);
}

namespace {

// B[s] for the mixed-radix index with site 0 fastest, by direct contraction
// with one-hot feature rows.
std::vector<double> coefficients_by_one_hot(const TensorChain& chain) {
  const std::size_t n = chain.size();
  FeatureMaps fmaps;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = chain.site(k).phys_dim();
    std::vector<std::vector<double>> table(p, std::vector<double>(p, 0.0));
    for (std::size_t s = 0; s < p; ++s) table[s][s] = 1.0;
    fmaps.push_back(FeatureMap::custom(table));
  }
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= chain.site(k).phys_dim();
  std::vector<double> out(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> x(n);
    std::size_t r = idx;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = static_cast<double>(r % chain.site(k).phys_dim());
      r /= chain.site(k).phys_dim();
    }
    out[idx] = brute_force_value(chain, fmaps, x);
  }
  return out;
}

}  // namespace

TEST_CASE("coefficient tree and streaming agree with one-hot contraction") {
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    FeatureMaps fmaps;
    const TensorChain chain = random_chain(rng, 5, 3, 3, trial % 2 == 0, fmaps, 40 + trial);
    const auto want = coefficients_by_one_hot(chain);
    const CoefficientTree tree(chain);
    std::vector<double> streamed(want.size(), 0.0);
    std::vector<int> seen(want.size(), 0);
    for_each_coefficient_streaming(chain, [&](std::size_t i, double v) {
      streamed[i] = v;
      ++seen[i];
    });
    REQUIRE(tree.coefficients().size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      const double tol = 1e-12 * std::max(1.0, std::abs(want[i]));
      CHECK(std::abs(tree.coefficients()[i] - want[i]) <= tol);
      CHECK(std::abs(streamed[i] - want[i]) <= tol);
      CHECK(seen[i] == 1);
    }
  }
}

TEST_CASE("coefficient tree falls back to streaming when memory is capped") {
  const std::vector<double> sig(6, 1.0);
  const TensorChain chain = init_random(ChainSpec::uniform(6, 2, 4, true), sig, 3);
  CHECK_THROWS_AS(CoefficientTree(chain, 16), CapacityError);
  const auto full = coefficient_tensor(chain);
  const CoefficientTree tree(chain);
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i] == doctest::Approx(tree.coefficients()[i]));
}

TEST_CASE("coefficient gradient matches finite differences") {
  Rng rng(9);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMaps fmaps;
    const TensorChain chain = random_chain(rng, 5, 3, 3, trial % 2 == 1, fmaps, 70 + trial);
    const CoefficientTree tree(chain);
    std::vector<double> w(tree.coefficients().size());
    for (double& v : w) v = rng.normal();
    auto objective = [&](const TensorChain& c) {
      const auto b = coefficient_tensor(c);
      double s = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) s += w[i] * b[i];
      return s;
    };
    const auto g = tree.gradient(w);
    for (std::size_t k = 0; k < chain.size(); ++k) {
      for (std::size_t i = 0; i < g[k].size(); ++i) {
        TensorChain plus = chain, minus = chain;
        plus.mutable_site(k).values()[i] += h;
        minus.mutable_site(k).values()[i] -= h;
        CHECK(std::abs((objective(plus) - objective(minus)) / (2 * h) - g[k][i]) < 1e-6);
      }
    }
  }
}

TEST_CASE("coefficient enumeration guard") {
  const std::vector<double> sig(23, 1.0);
  const TensorChain chain = TensorChain::zeros(ChainSpec::uniform(23, 2, 1, true), sig);
  CHECK_THROWS_AS(coefficient_count(chain), CapacityError);
}

TEST_CASE("ensemble of linear networks reproduces the chain") {
  const auto fmaps = replicate(FeatureMap::trig_pair(), 3);
  const std::vector<double> sig(3, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool periodic : {true, false}) {
      const TensorChain chain = init_random(ChainSpec::uniform(fmaps, 3, periodic), sig, seed);
      const LinearNetEnsemble ens = expand_ensemble(chain);
      CHECK(ens.size() == 8);
      const std::vector<double> x{0.3, 0.7, 0.1};
      const double want = evaluate(chain, fmaps, x);
      CHECK(std::abs(ens.evaluate(fmaps, x) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
      // Each member is the trace of its layer product.
      for (std::size_t i = 0; i < ens.size(); ++i) {
        Matrix prod = ens.layer(i, 0);
        for (std::size_t k = 1; k < 3; ++k) prod = matmul(prod, ens.layer(i, k));
        CHECK(ens.network_output(i) == doctest::Approx(prod.trace()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ensemble member indices run with site 0 fastest") {
  const std::vector<double> sig(3, 1.0);
  ChainSpec spec = ChainSpec::uniform(3, 2, 2, true);
  spec.phys_dims = {2, 3, 2};
  const TensorChain chain = init_random(spec, sig, 1);
  const LinearNetEnsemble ens = expand_ensemble(chain);
  CHECK(ens.size() == 12);
  CHECK(ens.member_index(1) == std::vector<std::size_t>{1, 0, 0});
  CHECK(ens.member_index(2) == std::vector<std::size_t>{0, 1, 0});
  CHECK(ens.member_index(11) == std::vector<std::size_t>{1, 2, 1});
  CHECK_THROWS_AS(ens.member_index(12), InputError);
}
