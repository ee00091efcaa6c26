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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "a2sgd/analysis.hpp"
#include "a2sgd/cluster.hpp"

namespace a2sgd {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(HalfNormal, ClosedForms) {
  const HalfNormal one = half_normal_theory(1.0);
  EXPECT_NEAR(one.abs_mean, 0.7978845608028654, 1e-15);
  EXPECT_NEAR(one.variance, 0.36338022763241866, 1e-15);
  const HalfNormal zero = half_normal_theory(0.0);
  EXPECT_EQ(zero.abs_mean, 0.0);
  EXPECT_EQ(zero.variance, 0.0);
  EXPECT_DOUBLE_EQ(half_normal_theory(2.0).abs_mean, 2.0 * one.abs_mean);
  EXPECT_DOUBLE_EQ(half_normal_theory(2.0).variance, 4.0 * one.variance);
}

TEST(HalfNormal, SampledPositiveClassMatches) {
  Rng rng(4, 4);
  const GradVector g = sample_normal(rng, 1'000'000, 0.0, 1.0);
  std::vector<double> pos;
  for (double x : g) {
    if (x >= 0) pos.push_back(x);
  }
  const SummaryStats s = summarize(pos);
  const HalfNormal hn = half_normal_theory(1.0);
  EXPECT_NEAR(s.mean, hn.abs_mean, 0.01 * hn.abs_mean);
  EXPECT_NEAR(s.variance, hn.variance, 0.02 * hn.variance);
}

TEST(PooledMeanVariance, Examples) {
  const double v = half_normal_theory(1.0).variance;
  EXPECT_EQ(pooled_mean_variance(v, 1), v);
  EXPECT_NEAR(pooled_mean_variance(v, 4), 0.09084505690810466, 1e-15);
  EXPECT_LT(pooled_mean_variance(v, 1'000'000'000), 1e-9);
}

TEST(NetGain, Examples) {
  const SignMask mask(std::vector<std::uint8_t>{1, 1, 0, 0});
  const NetGain same = net_gain({2, 3}, mask, {2, 3});
  EXPECT_EQ(same.shift, GradVector(4, 0.0));
  EXPECT_EQ(same.norm_sq, 0.0);

  const NetGain g = net_gain({2, 3}, mask, {3, 2});
  EXPECT_EQ(g.shift, GradVector({1, 1, 1, 1}));
  EXPECT_EQ(g.norm_sq, 4.0);

  const NetGain all_pos = net_gain({1.0, 0.0}, SignMask(3), {1.75, 0.5});
  EXPECT_EQ(all_pos.shift, GradVector(3, 0.75));
}

TEST(NetGain, EqualsDecodedMinusOriginal) {
  Rng rng(5, 5);
  const GradVector g = sample_normal(rng, 500, 0.0, 1.0);
  CodecState st(CodecParams{}, Rng(0, 0));
  const TwoMeans local = means_of(a2sgd_encode(g, st));
  const TwoMeans global{local.pos * 1.1, local.neg * 0.9};
  const GradVector decoded = a2sgd_decode(global, st.mask, st.residual);
  const NetGain gain = net_gain(local, st.mask, global);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ASSERT_NEAR(decoded[i] - g[i], gain.shift[i], 1e-12);
  }
}

TEST(MomentChange, TheoryAndDelta) {
  EXPECT_DOUBLE_EQ(moment_change_theory(1), (kPi - 2) / kPi);
  EXPECT_NEAR(moment_change_theory(4), 0.0908450569081046, 1e-15);
  EXPECT_NEAR(delta_theory(2), 0.8183098861837907, 1e-15);
  EXPECT_GT(delta_theory(1'000'000), 1.0 - 1e-6);
  EXPECT_THROW(moment_change_theory(0), std::invalid_argument);
}

TEST(MomentChange, SingleWorkerIsExactlyZero) {
  EXPECT_EQ(moment_change_check(1, 10000, 5, 1).empirical, 0.0);
}

// Independent oracle for the sampled ratio. Each class mean is an average of
// about n/2 half-normal draws, so it deviates from the population mean with
// variance 2 (1 - 2/pi) / n. A worker's net gain is the deviation of the
// pooled means from its own, which has variance 2 (1 - 2/pi)(1 - 1/P) / n per
// class; summing over n elements and dividing by ||g||^2 ~ n gives
// E[ratio] = 2 (1 - 2/pi)(1 - 1/P) / n.
double finite_sample_ratio(std::size_t workers, std::size_t n) {
  return 2.0 * (1.0 - 2.0 / kPi) * (1.0 - 1.0 / static_cast<double>(workers)) /
         static_cast<double>(n);
}

TEST(MomentChange, SampledRatioFollowsTheFiniteSampleLaw) {
  for (std::size_t p : {2, 4, 8}) {
    const MomentChange mc = moment_change_check(p, 10000, 400, 17);
    EXPECT_NEAR(mc.empirical, finite_sample_ratio(p, 10000), 0.15 * finite_sample_ratio(p, 10000))
        << "P=" << p;
    EXPECT_EQ(mc.theory, moment_change_theory(p));
  }
}

TEST(MomentChange, SampledRatioShrinksWithLength) {
  const double small = moment_change_check(4, 1000, 400, 3).empirical;
  const double large = moment_change_check(4, 100000, 40, 3).empirical;
  EXPECT_GT(small / large, 50.0);
  EXPECT_LT(small / large, 200.0);
}

TEST(MomentChange, RepeatsForTheSameSeed) {
  EXPECT_EQ(moment_change_check(3, 2000, 20, 9).empirical,
            moment_change_check(3, 2000, 20, 9).empirical);
}

TEST(DeltaReport, Examples) {
  Rng rng(6, 6);
  const GradVector g = sample_normal(rng, 1000, 0.0, 1.0);
  const DeltaReport same = delta_report(g, g, 4);
  EXPECT_EQ(same.delta_empirical, 1.0);
  EXPECT_EQ(same.delta_theory, delta_theory(4));
  EXPECT_THROW(delta_report(g, GradVector(3), 2), std::invalid_argument);
}

TEST(DeltaReport, TwoWorkerRoundOnNormalGradients) {
  constexpr std::size_t n = 100000;
  Rng r0(7, 0), r1(7, 1);
  const std::vector<GradVector> g{sample_normal(r0, n, 0.0, 1.0), sample_normal(r1, n, 0.0, 1.0)};
  std::vector<CodecState> st(2);
  std::vector<TwoMeans> local;
  for (int p = 0; p < 2; ++p) local.push_back(means_of(a2sgd_encode(g[p], st[p])));
  Cluster cluster(2);
  const TwoMeans global = cluster.allreduce_average(local);
  const GradVector g_prime = a2sgd_decode(global, st[0].mask, st[0].residual);
  const DeltaReport r = delta_report(g[0], g_prime, 2);
  const double gain = net_gain(local[0], st[0].mask, global).norm_sq / l2_norm_sq(g[0]);
  EXPECT_NEAR(r.delta_empirical, 1.0 - gain, 1e-12);
  // The per-element shift is O(1/sqrt(n)), so delta is 1 - O(1/n).
  EXPECT_GT(r.delta_empirical, 1.0 - 50.0 * finite_sample_ratio(2, n));
  EXPECT_LT(r.delta_empirical, 1.0);
}

TEST(Theorem2, Terms) {
  const double f0 = 3.7;
  const BoundTerms t = theorem2_terms(f0, 1.0 / std::sqrt(100.0), 2.0, 0.5, 99);
  EXPECT_NEAR(t.optimisation, f0 / 5.0, 1e-15);
  EXPECT_DOUBLE_EQ(t.noise, 0.1 * 2.0 * 0.5 / 2.0);
  EXPECT_LT(theorem2_terms(f0, 0.1, 1.0, 1.0, 1'000'000'000).optimisation, 1e-7);
  EXPECT_EQ(theorem2_terms(f0, 0.1, 1.0, 0.0, 10).noise, 0.0);
}

TEST(Histogram, ConstantInputUsesOneBin) {
  const Histogram h = histogram(GradVector(50, 1.25).span(), 11, 3);
  EXPECT_EQ(h.iter, 3u);
  EXPECT_EQ(h.counts.size(), 11u);
  EXPECT_EQ(std::count_if(h.counts.begin(), h.counts.end(), [](auto c) { return c != 0; }), 1);
  EXPECT_EQ(h.total(), 50u);
}

TEST(Histogram, StandardNormalIsCentredAndSymmetric) {
  Rng rng(8, 8);
  const GradVector g = sample_normal(rng, 1'000'000, 0.0, 1.0);
  const Histogram h = histogram(g.span(), 101);
  EXPECT_EQ(h.total(), g.size());
  const auto mode = static_cast<std::size_t>(
      std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
  EXPECT_LE(h.edges[mode] - 0.1, 0.0);
  EXPECT_GE(h.edges[mode + 1] + 0.1, 0.0);
  // Skewness of the binned counts about zero, using bin centres.
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double c = 0.5 * (h.edges[b] + h.edges[b + 1]);
    m2 += h.counts[b] * c * c;
    m3 += h.counts[b] * c * c * c;
  }
  const double total = static_cast<double>(h.total());
  const double skew = (m3 / total) / std::pow(m2 / total, 1.5);
  EXPECT_LT(std::abs(skew), 0.02);
}

TEST(Histogram, CentralMassAndCsv) {
  const GradVector g({-1, 0, 0, 0, 1});
  const Histogram h = histogram(g.span(), 5);
  EXPECT_DOUBLE_EQ(central_mass_fraction(h, 0.2), 0.6);
  std::ostringstream os;
  write_histogram_csv(os, h);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lo,bin_hi,count");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

}  // namespace
}  // namespace a2sgd
