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

#include "mpsntk/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mpsntk/errors.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk {

FeatureMap FeatureMap::born_binary() { return FeatureMap(Kind::kBornBinary, 2); }

FeatureMap FeatureMap::trig_pair() { return FeatureMap(Kind::kTrigPair, 2); }

FeatureMap FeatureMap::random_fourier(std::size_t width, double bandwidth,
                                      std::uint64_t seed) {
  if (width == 0 || width % 2 != 0) {
    throw ConfigError("random Fourier width must be even and positive", "rff_width");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("random Fourier bandwidth must be positive", "rff_bandwidth");
  }
  FeatureMap f(Kind::kRandomFourier, width);
  f.bandwidth_ = bandwidth;
  f.seed_ = seed;
  Rng rng(seed);
  f.frequencies_.resize(width / 2);
  for (double& w : f.frequencies_) w = rng.normal() / bandwidth;
  return f;
}

FeatureMap FeatureMap::custom(std::vector<std::vector<double>> table) {
  if (table.empty() || table.front().empty()) {
    throw ConfigError("custom feature table must be non-empty", "custom_table");
  }
  const std::size_t width = table.front().size();
  for (const auto& row : table) {
    if (row.size() != width) throw ConfigError("custom feature table rows differ in length", "custom_table");
    for (double v : row) {
      if (!std::isfinite(v)) throw ConfigError("custom feature table has non-finite entries", "custom_table");
    }
  }
  FeatureMap f(Kind::kCustom, width);
  f.table_ = std::move(table);
  return f;
}

std::string FeatureMap::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kBornBinary: os << "born_binary"; break;
    case Kind::kTrigPair: os << "trig_pair"; break;
    case Kind::kRandomFourier:
      os << "random_fourier(width=" << phys_dim_ << ",bandwidth=" << bandwidth_
         << ",seed=" << seed_ << ")";
      break;
    case Kind::kCustom: os << "custom(rows=" << table_.size() << ",width=" << phys_dim_ << ")"; break;
  }
  return os.str();
}

void FeatureMap::apply(double x, std::span<double> out) const {
  if (out.size() != phys_dim_) throw ShapeError("feature output length differs from phys_dim");
  if (!std::isfinite(x)) throw InputError("feature map input is not finite");
  switch (kind_) {
    case Kind::kBornBinary: {
      if (x != 0.0 && x != 1.0) {
        throw InputError("born_binary feature map requires x in {0, 1}");
      }
      constexpr double kScale = 0.70710678118654752440;
      out[0] = kScale * x;
      out[1] = kScale * (1.0 - x);
      return;
    }
    case Kind::kTrigPair: {
      const double a = 0.5 * std::numbers::pi * x;
      out[0] = std::cos(a);
      out[1] = std::sin(a);
      return;
    }
    case Kind::kRandomFourier: {
      const std::size_t half = frequencies_.size();
      const double scale = 1.0 / std::sqrt(static_cast<double>(half));
      for (std::size_t j = 0; j < half; ++j) {
        const double a = frequencies_[j] * x;
        out[j] = scale * std::cos(a);
        out[half + j] = scale * std::sin(a);
      }
      return;
    }
    case Kind::kCustom: {
      const double r = std::round(x);
      if (r != x || r < 0.0 || r >= static_cast<double>(table_.size())) {
        throw InputError("custom feature map requires an integer row index");
      }
      const auto& row = table_[static_cast<std::size_t>(r)];
      std::copy(row.begin(), row.end(), out.begin());
      return;
    }
  }
}

std::vector<double> FeatureMap::apply(double x) const {
  std::vector<double> out(phys_dim_);
  apply(x, out);
  return out;
}

double FeatureMap::site_kernel(double a, double b) const {
  std::vector<double> pa = apply(a);
  std::vector<double> pb = apply(b);
  double s = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += pa[i] * pb[i];
  return s;
}

MercerKernel MercerKernel::feature_dot(FeatureMap fmap) {
  MercerKernel k;
  k.fmap_.push_back(std::move(fmap));
  return k;
}

MercerKernel MercerKernel::gaussian(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("Gaussian bandwidth must be positive", "bandwidth");
  MercerKernel k;
  k.gaussian_ = true;
  k.tau_ = tau;
  return k;
}

MercerKernel MercerKernel::for_map(const FeatureMap& fmap, bool use_limit) {
  if (use_limit && fmap.kind() == FeatureMap::Kind::kRandomFourier) {
    return gaussian(fmap.bandwidth());
  }
  return feature_dot(fmap);
}

double MercerKernel::operator()(double a, double b) const {
  if (gaussian_) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("kernel input is not finite");
    const double d = (a - b) / tau_;
    return std::exp(-0.5 * d * d);
  }
  return fmap_.front().site_kernel(a, b);
}

MercerKernels kernels_for(const FeatureMaps& fmaps, bool use_limit) {
  MercerKernels out;
  out.reserve(fmaps.size());
  for (const auto& f : fmaps) out.push_back(MercerKernel::for_map(f, use_limit));
  return out;
}

double site_kernel(const FeatureMap& fmap, double a, double b) { return fmap.site_kernel(a, b); }

double product_kernel(const MercerKernels& kernels, std::span<const double> x,
                      std::span<const double> xp) {
  if (x.size() != kernels.size() || xp.size() != kernels.size()) {
    throw ShapeError("product_kernel: sample length differs from number of sites");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < kernels.size(); ++i) p *= kernels[i](x[i], xp[i]);
  return p;
}

double product_kernel(const FeatureMaps& fmaps, std::span<const double> x,
                      std::span<const double> xp) {
  return product_kernel(kernels_for(fmaps, false), x, xp);
}

}  // namespace mpsntk
