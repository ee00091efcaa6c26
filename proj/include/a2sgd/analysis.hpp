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

#pragma once

// Executable forms of the rate-analysis quantities of two-level gradient
// averaging: half-normal moments of the sign classes, the net gain a worker
// receives from the averaged means, the moment change it causes, and the
// terms of the non-convex bound.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "a2sgd/codecs.hpp"
#include "a2sgd/numkit.hpp"

namespace a2sgd {

struct HalfNormal {
  double abs_mean = 0.0;  // sigma * sqrt(2 / pi)
  double variance = 0.0;  // sigma^2 * (1 - 2 / pi)
};

HalfNormal half_normal_theory(double sigma);

// Variance of the average of P per-worker means: sigma_half_sq / P.
double pooled_mean_variance(double sigma_half_sq, std::size_t workers);

/// Shift a worker's gradient receives when its own class means are replaced by
/// the global ones: pos * (mu_bar_pos - mu_pos) - neg * (mu_bar_neg - mu_neg).
struct NetGain {
  GradVector shift;
  double norm_sq = 0.0;
};

NetGain net_gain(TwoMeans local, const SignMask& mask, TwoMeans global);

// (pi - 2) / (pi * P)
double moment_change_theory(std::size_t workers);
// 1 - (pi - 2) / (pi * P)
double delta_theory(std::size_t workers);

struct MomentChange {
  double empirical = 0.0;  // mean of ||net gain||^2 / ||g||^2 over trials and workers
  double theory = 0.0;     // (pi - 2) / (pi * P)
};

// Each trial draws P independent standard-normal gradients of length n and
// averages their class means. Trials run in parallel, each on its own stream.
MomentChange moment_change_check(std::size_t workers, std::size_t n, std::size_t trials,
                                 std::uint64_t seed);

struct DeltaReport {
  double delta_theory = 0.0;
  double delta_empirical = 0.0;  // 1 - ||g - g'||^2 / ||g||^2
  std::size_t workers = 0;
};

DeltaReport delta_report(const GradVector& g, const GradVector& g_prime, std::size_t workers);

struct BoundTerms {
  double optimisation = 0.0;  // 2 f0 / (eta (T + 1))
  double noise = 0.0;         // eta L phi^2 / 2
};

BoundTerms theorem2_terms(double f0, double eta, double lipschitz, double phi_sq, std::size_t steps);

/// Uniform-bin histogram over [min(g), max(g)].
struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::uint64_t> counts;
  std::size_t iter = 0;

  std::uint64_t total() const;
};

Histogram histogram(std::span<const double> g, std::size_t bins = 101, std::size_t iter_tag = 0);

// Fraction of samples in the bins whose centres lie within +-width/2 of the
// range midpoint.
double central_mass_fraction(const Histogram& h, double width = 0.1);

// Header: bin_lo,bin_hi,count
void write_histogram_csv(std::ostream& os, const Histogram& h);

}  // namespace a2sgd
