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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "mpsntk/errors.hpp"
#include "mpsntk/tensor_chain.hpp"

// Layout:
//   MPSNTK1
//   sites <n> periodic <0|1> seed <seed>
//   site <k> <phys> <left> <right> <sigma>
//   <left*right values per physical index, one line per (s, a) row>
//   ...
//   end

namespace mpsntk {
namespace {

constexpr const char* kMagic = "MPSNTK1";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_token(std::istream& is, const std::string& token) {
  std::string got;
  if (!(is >> got) || got != token) {
    throw InputError("chain record: expected '" + token + "', got '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw InputError(std::string("chain record: cannot read ") + what);
  return v;
}

}  // namespace

void write_chain(std::ostream& os, const TensorChain& chain) {
  os << kMagic << '\n';
  os << "sites " << chain.size() << " periodic " << (chain.periodic() ? 1 : 0) << " seed "
     << chain.seed() << '\n';
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const SiteTensor& site = chain.site(k);
    os << "site " << k << ' ' << site.phys_dim() << ' ' << site.left_dim() << ' '
       << site.right_dim() << ' ' << format_double(site.init_sigma()) << '\n';
    for (std::size_t s = 0; s < site.phys_dim(); ++s) {
      for (std::size_t a = 0; a < site.left_dim(); ++a) {
        for (std::size_t b = 0; b < site.right_dim(); ++b) {
          if (b > 0) os << ' ';
          os << format_double(site.at(s, a, b));
        }
        os << '\n';
      }
    }
  }
  os << "end\n";
}

TensorChain read_chain(std::istream& is) {
  expect_token(is, kMagic);
  expect_token(is, "sites");
  const auto n = read_value<std::size_t>(is, "site count");
  expect_token(is, "periodic");
  const auto periodic = read_value<int>(is, "periodic flag");
  expect_token(is, "seed");
  const auto seed = read_value<std::uint64_t>(is, "seed");
  if (n == 0) throw InputError("chain record: zero sites");

  std::vector<SiteTensor> sites;
  sites.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    expect_token(is, "site");
    if (read_value<std::size_t>(is, "site index") != k) throw InputError("chain record: sites out of order");
    const auto phys = read_value<std::size_t>(is, "phys_dim");
    const auto left = read_value<std::size_t>(is, "left_dim");
    const auto right = read_value<std::size_t>(is, "right_dim");
    const auto sigma = read_value<double>(is, "sigma");
    SiteTensor site(phys, left, right, sigma);
    for (double& v : site.values()) {
      v = read_value<double>(is, "tensor value");
      if (!std::isfinite(v)) throw InputError("chain record: non-finite tensor value");
    }
    sites.push_back(std::move(site));
  }
  expect_token(is, "end");
  return TensorChain(std::move(sites), periodic != 0, seed);
}

}  // namespace mpsntk
