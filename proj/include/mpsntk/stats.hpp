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

// Statistical helpers for Monte Carlo verification: seeded trial plans,
// summary statistics, Gamma maximum likelihood, Kolmogorov-Smirnov, the
// D'Agostino-Pearson omnibus normality test and percentile bootstrap.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mpsntk {

/// Seeds of `count` independent trials. Trial i uses
/// derive_seed(base_seed, stream, i); `stream` separates experiments that
/// share a base seed.
struct TrialPlan {
  std::uint64_t base_seed = 0;
  std::size_t count = 0;
  std::uint64_t stream = 0;
  std::string experiment;

  std::uint64_t seed(std::size_t i) const;
  std::vector<std::uint64_t> seeds() const;
};

double mean(std::span<const double> x);
/// Unbiased sample variance; requires two or more samples.
double variance(std::span<const double> x);
/// Linear-interpolation quantile (type 7) for q in [0, 1].
double quantile(std::span<const double> x, double q);
double median(std::span<const double> x);
/// Pearson correlation; 0 when either series is constant.
double correlation(std::span<const double> x, std::span<const double> y);

struct GammaFit {
  double shape;
  double scale;
  double ks_statistic;
  double ks_p_value;
};

/// Maximum-likelihood Gamma fit by Newton iteration on
/// log k - digamma(k) = log(mean) - mean(log x), then KS against the fit.
/// Needs at least 50 samples, all positive; throws NumericalError when the
/// samples have no spread.
GammaFit gamma_fit(std::span<const double> samples);

/// sup_x |F_n(x) - F(x)|
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail with the small-sample correction
/// lambda = (sqrt n + 0.12 + 0.11 / sqrt n) D.
double ks_p_value(double statistic, std::size_t n);

struct NormalityTest {
  double statistic;  // K^2
  double p_value;
};

/// D'Agostino-Pearson omnibus test on skewness and kurtosis. Needs at least
/// 20 samples.
NormalityTest dagostino_pearson(std::span<const double> samples);

/// Percentile bootstrap interval of `statistic` (the mean by default) with
/// `resamples` draws from `seed`. Needs at least 20 samples and level in (0, 1).
std::pair<double, double> bootstrap_ci(
    std::span<const double> samples, double level, std::uint64_t seed = 0,
    std::size_t resamples = 2000,
    const std::function<double(std::span<const double>)>& statistic = {});

/// Share of bootstrap resamples in which the medians of successive groups
/// decrease strictly. Each group is resampled independently.
double bootstrap_decreasing_fraction(const std::vector<std::vector<double>>& groups,
                                     std::uint64_t seed, std::size_t resamples = 2000);

}  // namespace mpsntk
