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

#include "mpsntk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "mpsntk/errors.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk {

std::uint64_t TrialPlan::seed(std::size_t i) const {
  if (i >= count) throw InputError("trial index out of range");
  return derive_seed(base_seed, stream, i);
}

std::vector<std::uint64_t> TrialPlan::seeds() const {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = seed(i);
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InputError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InputError("variance needs at least two samples");
  const double mu = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double q) {
  if (x.empty()) throw InputError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("correlation needs paired samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

GammaFit gamma_fit(std::span<const double> samples) {
  if (samples.size() < 50) throw InputError("gamma fit needs at least 50 samples");
  double log_sum = 0.0;
  for (double v : samples) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("gamma fit needs positive finite samples");
    log_sum += std::log(v);
  }
  const double mu = mean(samples);
  const double s = std::log(mu) - log_sum / static_cast<double>(samples.size());
  if (!(s > 1e-14)) throw NumericalError("gamma fit: samples have degenerate variance");

  double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(k) - boost::math::digamma(k) - s;
    const double fp = 1.0 / k - boost::math::trigamma(k);
    double next = k - f / fp;
    if (!(next > 0.0)) next = 0.5 * k;
    const double step = std::abs(next - k);
    k = next;
    if (step <= 1e-10 * k) break;
  }
  GammaFit fit;
  fit.shape = k;
  fit.scale = mu / k;
  const boost::math::gamma_distribution<double> dist(fit.shape, fit.scale);
  fit.ks_statistic = ks_statistic(samples, [&](double x) { return boost::math::cdf(dist, x); });
  fit.ks_p_value = ks_p_value(fit.ks_statistic, samples.size());
  return fit;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InputError("KS statistic of an empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double statistic, std::size_t n) {
  if (n == 0) throw InputError("KS p-value needs samples");
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * statistic;
  if (lambda < 1e-3) return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

NormalityTest dagostino_pearson(std::span<const double> samples) {
  const std::size_t count = samples.size();
  if (count < 20) throw InputError("normality test needs at least 20 samples");
  const double n = static_cast<double>(count);
  const double mu = mean(samples);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) throw NumericalError("normality test: samples have no spread");

  // Skewness.
  const double g1 = m3 / std::pow(m2, 1.5);
  const double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double ya = y / alpha;
  const double z1 = delta * std::log(ya + std::sqrt(ya * ya + 1.0));

  // Kurtosis.
  const double b2 = m4 / (m2 * m2);
  const double e = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_b2 =
      24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - e) / std::sqrt(var_b2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 *
                             (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  const double z2 = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

  NormalityTest out;
  out.statistic = z1 * z1 + z2 * z2;
  out.p_value = std::exp(-0.5 * out.statistic);
  return out;
}

std::pair<double, double> bootstrap_ci(
    std::span<const double> samples, double level, std::uint64_t seed, std::size_t resamples,
    const std::function<double(std::span<const double>)>& statistic) {
  if (samples.size() < 20) throw InputError("bootstrap needs at least 20 samples");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  if (resamples == 0) throw InputError("bootstrap needs at least one resample");
  Rng rng(seed);
  boost::random::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> draw(samples.size());
  std::vector<double> stats(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& v : draw) v = samples[pick(rng.engine())];
    stats[b] = statistic ? statistic(draw) : mean(draw);
  }
  return {quantile(stats, 0.5 * (1.0 - level)), quantile(stats, 0.5 * (1.0 + level))};
}

double bootstrap_decreasing_fraction(const std::vector<std::vector<double>>& groups,
                                     std::uint64_t seed, std::size_t resamples) {
  if (groups.size() < 2) throw InputError("need at least two groups");
  if (resamples == 0) throw InputError("bootstrap needs at least one resample");
  for (const auto& g : groups) {
    if (g.empty()) throw InputError("bootstrap group is empty");
  }
  Rng rng(seed);
  std::size_t hits = 0;
  std::vector<double> draw;
  for (std::size_t b = 0; b < resamples; ++b) {
    double previous = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (const auto& g : groups) {
      boost::random::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      draw.resize(g.size());
      for (double& v : draw) v = g[pick(rng.engine())];
      const double med = median(draw);
      if (!(med < previous)) decreasing = false;
      previous = med;
    }
    hits += decreasing ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(resamples);
}

}  // namespace mpsntk
