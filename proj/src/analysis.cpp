// Copyright 2026 The A2SGD Authors. All Rights Reserved.
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
// =============================================================================

#include "a2sgd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "a2sgd/errors.hpp"

namespace a2sgd {

HalfNormal half_normal_theory(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("half_normal_theory: sigma must be finite and >= 0");
  }
  return {sigma * std::sqrt(2.0 / std::numbers::pi), sigma * sigma * (1.0 - 2.0 / std::numbers::pi)};
}

double pooled_mean_variance(double sigma_half_sq, std::size_t workers) {
  if (workers == 0) throw std::invalid_argument("pooled_mean_variance: P must be >= 1");
  return sigma_half_sq / static_cast<double>(workers);
}

NetGain net_gain(TwoMeans local, const SignMask& mask, TwoMeans global) {
  const double up = global.pos - local.pos;
  const double down = global.neg - local.neg;
  NetGain out{GradVector(mask.size()), 0.0};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double s = mask.pos(i) ? up : -down;
    out.shift[i] = s;
    out.norm_sq += s * s;
  }
  return out;
}

double moment_change_theory(std::size_t workers) {
  if (workers == 0) throw std::invalid_argument("moment_change_theory: P must be >= 1");
  return (std::numbers::pi - 2.0) / (std::numbers::pi * static_cast<double>(workers));
}

double delta_theory(std::size_t workers) { return 1.0 - moment_change_theory(workers); }

MomentChange moment_change_check(std::size_t workers, std::size_t n, std::size_t trials,
                                 std::uint64_t seed) {
  if (workers == 0 || n == 0 || trials == 0) {
    throw std::invalid_argument("moment_change_check: P, n and trials must be >= 1");
  }
  std::vector<double> per_trial(trials, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(trials);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    std::vector<GradVector> grads;
    std::vector<TwoMeans> local;
    grads.reserve(workers);
    for (std::size_t p = 0; p < workers; ++p) {
      Rng rng(seed, static_cast<std::uint64_t>(t) * workers + p);
      grads.push_back(sample_normal(rng, n, 0.0, 1.0));
      local.push_back(two_means(grads.back().span()));
    }
    TwoMeans global;
    for (const auto& m : local) {
      global.pos += m.pos;
      global.neg += m.neg;
    }
    global.pos /= static_cast<double>(workers);
    global.neg /= static_cast<double>(workers);

    double ratio = 0.0;
    for (std::size_t p = 0; p < workers; ++p) {
      const auto gain = net_gain(local[p], SignMask::of(grads[p].span()), global);
      ratio += gain.norm_sq / l2_norm_sq(grads[p]);
    }
    per_trial[static_cast<std::size_t>(t)] = ratio / static_cast<double>(workers);
  }

  double sum = 0.0;
  for (double r : per_trial) sum += r;
  return {sum / static_cast<double>(trials), moment_change_theory(workers)};
}

DeltaReport delta_report(const GradVector& g, const GradVector& g_prime, std::size_t workers) {
  if (g.size() != g_prime.size()) throw ShapeError("delta_report: length mismatch");
  const double norm = l2_norm_sq(g);
  if (norm == 0.0) throw std::invalid_argument("delta_report: zero gradient");
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) diff += (g[i] - g_prime[i]) * (g[i] - g_prime[i]);
  return {delta_theory(workers), 1.0 - diff / norm, workers};
}

BoundTerms theorem2_terms(double f0, double eta, double lipschitz, double phi_sq,
                          std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("theorem2_terms: T must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("theorem2_terms: eta must be > 0");
  return {2.0 * f0 / (eta * static_cast<double>(steps + 1)), eta * lipschitz * phi_sq / 2.0};
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram histogram(std::span<const double> g, std::size_t bins, std::size_t iter_tag) {
  if (g.empty()) throw std::invalid_argument("histogram: empty input");
  if (bins == 0) throw std::invalid_argument("histogram: bins must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  Histogram h;
  h.iter = iter_tag;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges[bins] = hi;

  for (double x : g) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((x - lo) / width);
      if (b >= bins) b = bins - 1;
    }
    ++h.counts[b];
  }
  return h;
}

double central_mass_fraction(const Histogram& h, double width) {
  const double total = static_cast<double>(h.total());
  if (total == 0.0) return 0.0;
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * width * (hi - lo);
  std::uint64_t inside = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double centre = 0.5 * (h.edges[b] + h.edges[b + 1]);
    if (std::abs(centre - mid) <= half) inside += h.counts[b];
  }
  return static_cast<double>(inside) / total;
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "bin_lo,bin_hi,count\n" << std::setprecision(17);
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace a2sgd
