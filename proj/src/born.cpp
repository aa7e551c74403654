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

#include "mpsntk/born.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <functional>

#include <boost/math/distributions/gamma.hpp>

#include "mpsntk/coefficients.hpp"
#include "mpsntk/csv.hpp"
#include "mpsntk/errors.hpp"
#include "mpsntk/parallel.hpp"
#include "mpsntk/rng.hpp"

namespace mpsntk {
namespace {

std::vector<double> bits_of(BitString x, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = static_cast<double>((x >> k) & 1u);
  return v;
}

double amplitude_scale(std::size_t n) { return std::pow(2.0, -0.5 * static_cast<double>(n)); }

using SiteArrays = std::vector<std::vector<double>>;

struct BornState {
  std::vector<double> train_psi;  // per distinct training string
  double z = 0.0;
  double total = 0.0;
  SiteArrays velocity;
};

BornState born_state(const BornModel& model, const std::vector<double>& counts, double lr) {
  const TensorChain& chain = model.chain();
  const std::size_t n = chain.size();
  const std::size_t size = model.space_size();
  const double scale = amplitude_scale(n);
  const CoefficientTree tree(chain);
  const auto& b = tree.coefficients();

  BornState st;
  for (double v : b) st.z += scale * scale * v * v;
  for (const auto& [code, mult] : model.distinct_training()) {
    st.train_psi.push_back(scale * b[coefficient_index(code, n)]);
  }
  if (!(st.z > 0.0)) throw NumericalError("partition function vanished");
  st.total = 0.0;
  for (double v : b) st.total += scale * scale * v * v / st.z;

  // dL/dPsi(x) = -2 c(x) / Psi(x) + 2 m Psi(x) / Z, pulled back to B.
  const double m = static_cast<double>(model.training_size());
  std::vector<double> weights(size);
  for (std::size_t code = 0; code < size; ++code) {
    const std::size_t idx = coefficient_index(code, n);
    const double psi = scale * b[idx];
    double g = 2.0 * m * psi / st.z;
    if (counts[code] > 0.0) g -= 2.0 * counts[code] / psi;
    weights[idx] = scale * g;
  }
  st.velocity = tree.gradient(weights);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = -lr * chain.bond_learning_rate(k);
    for (double& v : st.velocity[k]) v *= c;
  }
  return st;
}

bool signs_kept(const std::vector<double>& ref, const std::vector<double>& now) {
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (now[i] == 0.0 || std::signbit(now[i]) != std::signbit(ref[i])) return false;
  }
  return true;
}

void shifted(const TensorChain& base, double h, const SiteArrays& v, TensorChain& out) {
  for (std::size_t k = 0; k < base.size(); ++k) {
    auto src = base.site(k).values();
    auto dst = out.mutable_site(k).values();
    std::copy(src.begin(), src.end(), dst.begin());
    axpy(h, v[k], dst);
  }
}

}  // namespace

std::string format_bits(BitString code, std::size_t n) {
  std::string s(n, '0');
  for (std::size_t k = 0; k < n; ++k) s[k] = ((code >> k) & 1u) ? '1' : '0';
  return s;
}

BitString parse_bits(const std::string& text) {
  if (text.empty() || text.size() > 64) throw InputError("bit string must have 1 to 64 characters");
  BitString code = 0;
  for (std::size_t k = 0; k < text.size(); ++k) {
    if (text[k] == '1') {
      code |= BitString{1} << k;
    } else if (text[k] != '0') {
      throw InputError("bit string may only contain 0 and 1: " + text);
    }
  }
  return code;
}

std::size_t coefficient_index(BitString x, std::size_t n) {
  const BitString mask = (BitString{1} << n) - 1;
  return static_cast<std::size_t>(~x & mask);
}

BornModel::BornModel(TensorChain chain, std::vector<BitString> training)
    : chain_(std::move(chain)), training_(std::move(training)) {
  const std::size_t n = chain_.size();
  if (n > kMaxBornSites) {
    throw CapacityError("sample space enumeration needs n <= " + std::to_string(kMaxBornSites));
  }
  for (const auto& site : chain_.sites()) {
    if (site.phys_dim() != 2) throw ShapeError("binary strings need phys_dim 2 at every site");
  }
  fmaps_ = replicate(FeatureMap::born_binary(), n);
  for (BitString x : training_) {
    if (x >> n) throw InputError("training string has more than n bits");
    auto it = std::find_if(distinct_.begin(), distinct_.end(),
                           [&](const auto& p) { return p.first == x; });
    if (it == distinct_.end()) {
      distinct_.emplace_back(x, 1);
    } else {
      ++it->second;
    }
  }
}

double BornModel::amplitude(BitString x) const {
  if (x >> sites()) throw InputError("string has more than n bits");
  return evaluate(chain_, fmaps_, bits_of(x, sites()));
}

std::vector<double> BornModel::amplitudes() const {
  const std::size_t n = sites();
  const auto b = coefficient_tensor(chain_);
  const double scale = amplitude_scale(n);
  std::vector<double> psi(space_size());
  for (std::size_t code = 0; code < psi.size(); ++code) psi[code] = scale * b[coefficient_index(code, n)];
  return psi;
}

double partition_function(const BornModel& model) {
  const auto b = coefficient_tensor(model.chain());
  double s = 0.0;
  for (double v : b) s += v * v;
  return s * std::pow(2.0, -static_cast<double>(model.sites()));
}

double partition_function_enumerated(const BornModel& model) {
  double z = 0.0;
  for (std::size_t code = 0; code < model.space_size(); ++code) {
    const double psi = model.amplitude(code);
    z += psi * psi;
  }
  return z;
}

double nll(const BornModel& model) {
  if (model.training_size() == 0) throw InputError("training set is empty");
  const double z = partition_function(model);
  double l = static_cast<double>(model.training_size()) * std::log(z);
  for (BitString x : model.training()) {
    const double psi = model.amplitude(x);
    if (psi == 0.0) throw NumericalError("log of zero: training string " +
                                         format_bits(x, model.sites()) + " has zero amplitude");
    l -= std::log(psi * psi);
  }
  return l;
}

double training_direction(double psi, double z, std::size_t m) {
  if (psi == 0.0) throw NumericalError("training direction is singular at zero amplitude");
  if (!(z > 0.0)) throw NumericalError("partition function must be positive");
  return 2.0 * (1.0 / psi - static_cast<double>(m) * psi / z);
}

double training_direction(const BornModel& model, std::size_t j) {
  if (j >= model.training_size()) throw InputError("training index out of range");
  return training_direction(model.amplitude(model.training()[j]), partition_function(model),
                            model.training_size());
}

BornTrajectory integrate_born_flow(BornModel& model, const BornFlowOptions& options) {
  if (model.training_size() == 0) throw InputError("training set is empty");
  if (!(options.dt > 0.0)) throw ConfigError("time step must be positive", "dt");
  if (!(options.t_end >= 0.0)) throw ConfigError("t_end must be non-negative", "t_end");
  if (options.record_every == 0) throw ConfigError("record_every must be >= 1", "record_every");

  std::vector<double> counts(model.space_size(), 0.0);
  for (BitString x : model.training()) counts[x] += 1.0;
  const double lr = options.lr_scale;

  BornTrajectory traj;
  auto record = [&](double t, const BornState& st) {
    traj.times.push_back(t);
    traj.z.push_back(st.z);
    traj.amplitudes.push_back(st.train_psi);
    std::vector<double> p;
    for (double psi : st.train_psi) p.push_back(psi * psi / st.z);
    traj.probabilities.push_back(std::move(p));
    traj.total_probability.push_back(st.total);
  };

  TensorChain& current = model.mutable_chain();
  BornState state = born_state(model, counts, lr);
  for (double psi : state.train_psi) {
    if (psi == 0.0) throw NumericalError("training string has zero amplitude at t = 0");
  }
  record(0.0, state);

  // One RK4 step of size h from (current, state); splits in halves while a
  // training amplitude would change sign.
  TensorChain stage = current;
  std::function<void(double, std::size_t)> advance = [&](double h, std::size_t depth) {
    const TensorChain start = current;
    BornModel probe = model;
    auto eval_at = [&](const TensorChain& c) {
      probe.mutable_chain() = c;
      return born_state(probe, counts, lr);
    };
    bool ok = true;
    BornState s2, s3, s4, s5;
    SiteArrays incr;
    shifted(start, 0.5 * h, state.velocity, stage);
    s2 = eval_at(stage);
    ok = signs_kept(state.train_psi, s2.train_psi);
    if (ok) {
      shifted(start, 0.5 * h, s2.velocity, stage);
      s3 = eval_at(stage);
      ok = signs_kept(state.train_psi, s3.train_psi);
    }
    if (ok) {
      shifted(start, h, s3.velocity, stage);
      s4 = eval_at(stage);
      ok = signs_kept(state.train_psi, s4.train_psi);
    }
    if (ok) {
      incr = state.velocity;
      for (std::size_t k = 0; k < incr.size(); ++k) {
        axpy(2.0, s2.velocity[k], incr[k]);
        axpy(2.0, s3.velocity[k], incr[k]);
        axpy(1.0, s4.velocity[k], incr[k]);
      }
      shifted(start, h / 6.0, incr, stage);
      s5 = eval_at(stage);
      ok = signs_kept(state.train_psi, s5.train_psi);
    }
    if (ok) {
      current = stage;
      state = std::move(s5);
      return;
    }
    ++traj.rejected_steps;
    if (depth >= options.max_halvings) {
      throw NumericalError("training amplitude keeps crossing zero after " +
                           std::to_string(options.max_halvings) + " step halvings");
    }
    advance(0.5 * h, depth + 1);
    advance(0.5 * h, depth + 1);
  };

  const auto steps = options.t_end > 0.0
                         ? static_cast<std::size_t>(std::ceil(options.t_end / options.dt - 1e-9))
                         : std::size_t{0};
  double t = 0.0;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t_next = std::min(static_cast<double>(step) * options.dt, options.t_end);
    advance(t_next - t, 0);
    t = t_next;
    if (step % options.record_every == 0 || step == steps) record(t, state);
  }
  return traj;
}

void write_born_csv(std::ostream& os, const BornTrajectory& traj,
                    const std::vector<std::pair<BitString, std::size_t>>& strings, std::size_t n) {
  {
    csv::RowWriter row(os);
    row << "t" << "Z";
    for (const auto& s : strings) row << "P_" + format_bits(s.first, n);
  }
  for (std::size_t r = 0; r < traj.size(); ++r) {
    csv::RowWriter row(os);
    row << traj.times[r] << traj.z[r];
    for (double p : traj.probabilities[r]) row << p;
  }
}

BornClosedForm closed_form_born(double psi0, double z, std::size_t m, double k, double t) {
  if (!(z > 0.0)) throw InputError("closed form needs Z > 0");
  if (!(k > 0.0)) throw InputError("closed form needs K > 0");
  if (m == 0) throw InputError("closed form needs m >= 1");
  const double md = static_cast<double>(m);
  const double decay = std::exp(-4.0 * md * k * t / z);
  BornClosedForm out;
  const double sq = (psi0 * psi0 - z / md) * decay + z / md;
  out.psi = std::copysign(std::sqrt(std::max(sq, 0.0)), psi0);
  out.probability = 1.0 / md - (1.0 / md - psi0 * psi0 / z) * decay;
  if (t == 0.0) {
    out.psi = psi0;
    out.probability = psi0 * psi0 / z;
  }
  return out;
}

double characteristic_time(double z, std::size_t m, double k) {
  if (!(z > 0.0) || !(k > 0.0) || m == 0) throw InputError("characteristic time needs positive Z, m and K");
  return z / (4.0 * static_cast<double>(m) * k);
}

double unnormalized_time_estimate(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw InputError("estimate needs positive n and m");
  return std::pow(2.0, static_cast<double>(n) - 2.0) / static_cast<double>(m);
}

double analytic_born_diag(std::span<const double> sigmas) {
  const std::size_t n = sigmas.size();
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double term = 0.5;
    for (std::size_t l = 0; l < n; ++l) {
      if (l != k) term *= 0.5 * sigmas[l] * sigmas[l];
    }
    total += term;
  }
  return total;
}

KernelMatrix born_ntk(const BornModel& model, std::span<const BitString> strings) {
  Dataset data;
  for (BitString x : strings) {
    if (x >> model.sites()) throw InputError("string has more than n bits");
    data.push_back(bits_of(x, model.sites()));
  }
  return empirical_ntk(model.chain(), model.fmaps(), data);
}

double max_offdiag_ratio(const Eigen::MatrixXd& k) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      if (i == j) continue;
      const double denom = std::sqrt(k(i, i) * k(j, j));
      if (!(denom > 0.0)) throw NumericalError("kernel diagonal must be positive");
      worst = std::max(worst, std::abs(k(i, j)) / denom);
    }
  }
  return worst;
}

ZStudy z_distribution_study(std::size_t n, std::span<const double> sigmas, std::size_t bond_dim,
                            std::size_t trials, std::uint64_t seed, std::size_t threads) {
  if (trials < 200) throw ConfigError("Z study needs at least 200 trials", "trials");
  if (n == 0) throw ConfigError("chain must have at least one site", "n");
  if (n > kMaxBornSites) {
    throw ConfigError("sample space enumeration needs n <= " + std::to_string(kMaxBornSites), "n");
  }
  if (sigmas.size() != n) throw ConfigError("need one sigma per site", "sigma");
  const ChainSpec spec = ChainSpec::uniform(n, 2, bond_dim, true);
  spec.validate();

  ZStudy st;
  st.sites = n;
  st.bond_dim = bond_dim;
  st.seeds.resize(trials);
  st.samples.resize(trials);
  const double norm = std::pow(2.0, -static_cast<double>(n));
  parallel_for(trials, threads, [&](std::size_t t) {
    st.seeds[t] = derive_seed(seed, bond_dim, t);
    const auto b = coefficient_tensor(init_random(spec, sigmas, st.seeds[t]));
    double s = 0.0;
    for (double v : b) s += v * v;
    st.samples[t] = norm * s;
  });

  double prod = 1.0;
  for (double s : sigmas) prod *= s * s;
  st.fit = gamma_fit(st.samples);
  st.expected_shape = std::pow(2.0, static_cast<double>(n) - 1.0);
  const double mu = mean(st.samples);
  st.fixed_shape_scale = mu / st.expected_shape;
  const boost::math::gamma_distribution<double> fixed(st.expected_shape, st.fixed_shape_scale);
  st.ks_fixed_shape = ks_statistic(st.samples, [&](double x) { return boost::math::cdf(fixed, x); });
  st.oracle_mean = prod;
  st.oracle_scale = prod / st.expected_shape;
  st.unnormalized_scale = 2.0 * prod;
  st.relative_std = std::sqrt(variance(st.samples)) / mu;
  return st;
}

void write_z_csv(std::ostream& os, const ZStudy& study) {
  {
    csv::RowWriter row(os);
    row << "trial" << "seed" << "Z";
  }
  for (std::size_t t = 0; t < study.samples.size(); ++t) {
    csv::RowWriter row(os);
    row << t << static_cast<unsigned long long>(study.seeds[t]) << study.samples[t];
  }
}

}  // namespace mpsntk
