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
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "a2sgd/errors.hpp"
#include "a2sgd/train.hpp"

namespace a2sgd {
namespace {

double max_abs_diff(const GradVector& a, const GradVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::vector<WorkerState> workers_at(std::size_t p, const GradVector& w, CodecParams params = {}) {
  return make_workers(p, w, params, 5);
}

Dataset bowl_data(std::size_t dim = 10, std::size_t samples = 256) {
  SyntheticSpec s;
  s.kind = SyntheticKind::kCenters;
  s.dim = dim;
  s.samples = samples;
  s.spread = 1.0;
  s.seed = 21;
  return make_synthetic(s);
}

Dataset blob_data() {
  SyntheticSpec s;
  s.kind = SyntheticKind::kBlobs;
  s.dim = 8;
  s.classes = 3;
  s.samples = 256;
  s.separation = 1.5;
  s.seed = 22;
  return make_synthetic(s);
}

TrainConfig base_config(CodecKind algo, std::size_t workers, std::size_t iterations) {
  TrainConfig c;
  c.algo = algo;
  c.workers = workers;
  c.batch = 32;
  c.iterations = iterations;
  c.lr.eta0 = 0.05;
  c.seed = 3;
  c.record_trajectory = true;
  return c;
}

TEST(LrSchedule, Kinds) {
  LrSchedule s;
  s.eta0 = 0.5;
  EXPECT_EQ(s.at(1000), 0.5);
  s.kind = LrKind::kPolynomial;
  s.lambda = 0.1;
  EXPECT_DOUBLE_EQ(s.at(10), 0.25);
  s.kind = LrKind::kInverseSqrt;
  s.horizon = 99;
  EXPECT_DOUBLE_EQ(s.at(0), 0.05);
  EXPECT_DOUBLE_EQ(s.at(50), 0.05);
  s.eta0 = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  for (auto k : {LrKind::kConstant, LrKind::kPolynomial, LrKind::kInverseSqrt}) {
    EXPECT_EQ(parse_lr_kind(to_string(k)), k);
  }
}

TEST(Steps, DenseHandExample) {
  Cluster c(2);
  auto w = workers_at(2, GradVector({0, 0}));
  const std::vector<GradVector> g{GradVector({1, 3}), GradVector({3, 1})};
  dense_step(c, w, g, 1.0, 0);
  EXPECT_EQ(w[0].weights, GradVector({-2, -2}));
  EXPECT_EQ(w[1].weights, GradVector({-2, -2}));
  EXPECT_EQ(c.ledger().total_bits_sent(0), 64u);
}

TEST(Steps, A2sgdHandExample) {
  // Worker 0: means (2,3), eps [1,-1,1,-1]. Worker 1: means (4,1),
  // eps [2,-2,0,0]. Global means (3,2), so the decoded gradients are
  // [4,2,-1,-3] and [5,1,-2,-2].
  Cluster c(2);
  auto w = workers_at(2, GradVector(4, 0.0));
  const std::vector<GradVector> g{GradVector({3, 1, -2, -4}), GradVector({6, 2, -1, -1})};
  a2sgd_step(c, w, g, 0.5, 0);
  EXPECT_EQ(w[0].weights, GradVector({-2, -1, 0.5, 1.5}));
  EXPECT_EQ(w[1].weights, GradVector({-2.5, -0.5, 1, 1}));
  EXPECT_EQ(c.ledger().total_bits_sent(0), 64u);
  EXPECT_EQ(c.ledger().total_bits_sent(1), 64u);
}

TEST(Steps, A2sgdSingleWorkerIsDense) {
  Rng rng(1, 1);
  const GradVector w0 = sample_normal(rng, 300, 0.0, 1.0);
  const GradVector g = sample_normal(rng, 300, 0.1, 2.0);
  Cluster ca(1), cd(1);
  auto wa = workers_at(1, w0), wd = workers_at(1, w0);
  a2sgd_step(ca, wa, std::vector<GradVector>{g}, 0.1, 0);
  dense_step(cd, wd, std::vector<GradVector>{g}, 0.1, 0);
  EXPECT_LE(max_abs_diff(wa[0].weights, wd[0].weights), 1e-12);
}

TEST(Steps, TopKWithFullKIsDense) {
  Rng rng(2, 2);
  const GradVector w0 = sample_normal(rng, 40, 0.0, 1.0);
  CodecParams params;
  params.k = 40;
  Cluster cs(3), cd(3);
  auto ws = workers_at(3, w0, params), wd = workers_at(3, w0);
  for (std::size_t t = 0; t < 20; ++t) {
    std::vector<GradVector> g;
    for (int p = 0; p < 3; ++p) g.push_back(sample_normal(rng, 40, 0.0, 1.0));
    sparse_step(cs, CodecKind::kTopK, ws, g, 0.1, t);
    dense_step(cd, wd, g, 0.1, t);
    for (int p = 0; p < 3; ++p) ASSERT_EQ(ws[p].weights, wd[p].weights);
  }
}

TEST(Steps, QsgdFineLevelsApproachDenseInExpectation) {
  Rng rng(3, 3);
  const GradVector w0(16, 0.0);
  // Same sign pattern on both workers so no averaged entry is near zero.
  GradVector v = sample_normal(rng, 16, 0.0, 1.0);
  for (auto& x : v) x += (x >= 0 ? 0.5 : -0.5);
  GradVector v2 = v;
  for (auto& x : v2) x *= 1.5;
  const std::vector<GradVector> g{v, v2};
  Cluster cd(2);
  auto wd = workers_at(2, w0);
  dense_step(cd, wd, g, 1.0, 0);

  CodecParams params;
  params.qsgd_level = 1024;
  std::vector<double> mean(16, 0.0);
  constexpr int kDraws = 200;
  for (int d = 0; d < kDraws; ++d) {
    Cluster cq(2);
    auto wq = make_workers(2, w0, params, 1000 + d);
    qsgd_step(cq, wq, g, 1.0, 0);
    for (std::size_t i = 0; i < 16; ++i) mean[i] += wq[0].weights[i] / kDraws;
  }
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(mean[i], wd[0].weights[i], 0.02 * std::abs(wd[0].weights[i])) << i;
  }
}

TEST(Steps, WrongParticipantCountThrows) {
  Cluster c(2);
  auto w = workers_at(2, GradVector(3, 0.0));
  EXPECT_THROW(dense_step(c, w, std::vector<GradVector>{GradVector(3)}, 0.1, 0), ShapeError);
  EXPECT_THROW(a2sgd_step(c, w, std::vector<GradVector>{GradVector(3), GradVector(4)}, 0.1, 0),
               ShapeError);
}

TEST(FinalSync, DivergentWorkersEndIdentical) {
  Cluster c(2);
  auto w = workers_at(2, GradVector({0, 0, 0}));
  w[0].weights = GradVector({1, 2, 3});
  w[1].weights = GradVector({-1, 0, 7});
  const std::vector<GradVector> g{GradVector({2, 0, 0}), GradVector({0, 4, 0})};
  final_sync(c, w, g, 0.5, 9);
  EXPECT_EQ(max_abs_diff(w[0].weights, w[1].weights), 0.0);
  EXPECT_EQ(w[0].weights, GradVector({-0.5, 0, 5}));
  EXPECT_EQ(c.ledger().total_bits_sent(0), 96u);
  EXPECT_EQ(c.ledger().rows().back().iter, 9u);
}

TEST(FinalSync, SingleWorkerIsAnOrdinaryStep) {
  Cluster c(1);
  auto w = workers_at(1, GradVector({1, 1}));
  final_sync(c, w, std::vector<GradVector>{GradVector({2, -2})}, 0.25, 0);
  EXPECT_EQ(w[0].weights, GradVector({0.5, 1.5}));
}

TEST(Train, SingleWorkerA2sgdFollowsDense) {
  const Dataset bowl = bowl_data();
  const Dataset blobs = blob_data();
  const auto quad = make_quadratic(bowl.dim);
  const auto mlp = make_mlp3(MlpShape{8, 12, 10, 3});
  for (auto [model, data] : {std::pair{quad.get(), &bowl}, std::pair{mlp.get(), &blobs}}) {
    const RunResult a = train(*model, *data, base_config(CodecKind::kA2sgd, 1, 200));
    const RunResult d = train(*model, *data, base_config(CodecKind::kDense, 1, 200));
    ASSERT_EQ(a.trajectory.size(), 200u);
    for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
      ASSERT_LE(max_abs_diff(a.trajectory[t], d.trajectory[t]), 1e-12) << "step " << t;
    }
  }
}

TEST(Train, IdenticalShardsMakeA2sgdDense) {
  const Dataset bowl = bowl_data();
  const auto quad = make_quadratic(bowl.dim);
  auto ca = base_config(CodecKind::kA2sgd, 4, 100);
  auto cd = base_config(CodecKind::kDense, 4, 100);
  ca.identical_shards = cd.identical_shards = true;
  const RunResult a = train(*quad, bowl, ca);
  const RunResult d = train(*quad, bowl, cd);
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    ASSERT_LE(max_abs_diff(a.trajectory[t], d.trajectory[t]), 1e-12) << "step " << t;
  }
}

TEST(Train, BitsPerWorkerFollowTheTrafficModel) {
  const Dataset bowl = bowl_data(50, 256);
  const auto quad = make_quadratic(50);
  constexpr std::uint64_t n = 50, T = 30;
  const auto bits = [&](CodecKind k) { return train(*quad, bowl, base_config(k, 4, T)).bits_per_worker; };
  EXPECT_EQ(bits(CodecKind::kA2sgd), 64 * (T - 1) + 32 * n);
  EXPECT_EQ(bits(CodecKind::kDense), 32 * n * T);
  EXPECT_EQ(bits(CodecKind::kTopK), 32 * 1 * T);
  EXPECT_EQ(bits(CodecKind::kQsgd), (140 + 32) * T);

  const RunResult a2sgd = train(*quad, bowl, base_config(CodecKind::kA2sgd, 4, T));
  EXPECT_EQ(a2sgd.bits_total, 64 * 4 * (T - 1) + 32 * n * 4);

  const RunResult topk = train(*quad, bowl, base_config(CodecKind::kTopK, 4, T));
  EXPECT_EQ(topk.bits_with_indices_per_worker, 64 * T);
  EXPECT_EQ(topk.bits_total, 4 * 32 * T);
  EXPECT_EQ(topk.ledger.size(), 4 * T);
}

TEST(Train, AlgorithmsReduceTheLoss) {
  const Dataset bowl = bowl_data(1000, 512);
  const auto quad = make_quadratic(1000);
  for (auto k : {CodecKind::kDense, CodecKind::kA2sgd, CodecKind::kTopK, CodecKind::kQsgd}) {
    auto cfg = base_config(k, 4, 300);
    cfg.lr.eta0 = 0.2;
    cfg.codec.k_ratio = 0.05;
    const RunResult r = train(*quad, bowl, cfg);
    EXPECT_LT(r.loss.back(), 0.8 * r.loss.front()) << to_string(k);
  }
}

// The Gaussian threshold assumes the accumulated vector is normal. Under
// error feedback it is not: selected entries restart at zero and the rest
// keep growing, which inflates the estimated spread, so far fewer entries
// than ratio * n cross the threshold. Pinned here so a change is noticed.
TEST(Train, GaussianKUnderSelectsOnceResidualsAccumulate) {
  const Dataset bowl = bowl_data(1000, 512);
  const auto quad = make_quadratic(1000);
  auto cfg = base_config(CodecKind::kGaussianK, 4, 300);
  cfg.codec.k_ratio = 0.05;
  const RunResult r = train(*quad, bowl, cfg);
  const auto& rows = r.ledger.rows();
  const double first_k = rows.front().bits_sent / 32.0;
  double late_k = 0.0;
  for (std::size_t i = rows.size() - 400; i < rows.size(); ++i) late_k += rows[i].bits_sent / 32.0;
  late_k /= 400.0;
  EXPECT_GT(first_k, 25.0);   // about 5% of 1000 on the first, gaussian step
  EXPECT_LT(late_k, 10.0);
}

TEST(Train, SameSeedIsDeterministic) {
  const Dataset blobs = blob_data();
  const auto mlp = make_mlp3(MlpShape{8, 12, 10, 3});
  for (auto k : {CodecKind::kA2sgd, CodecKind::kGaussianK, CodecKind::kQsgd}) {
    const RunResult a = train(*mlp, blobs, base_config(k, 4, 40));
    const RunResult b = train(*mlp, blobs, base_config(k, 4, 40));
    EXPECT_EQ(a.loss, b.loss) << to_string(k);
    EXPECT_EQ(a.final_weights, b.final_weights) << to_string(k);
  }
}

TEST(Train, A2sgdWorkersAgreeAfterTheRun) {
  const Dataset blobs = blob_data();
  const auto mlp = make_mlp3(MlpShape{8, 12, 10, 3});
  const RunResult r = train(*mlp, blobs, base_config(CodecKind::kA2sgd, 4, 25));
  for (std::size_t p = 1; p < 4; ++p) EXPECT_EQ(r.final_weights[p], r.final_weights[0]);
}

TEST(Train, HistogramsAtEpochStartsAndLastStep) {
  const Dataset blobs = blob_data();  // 256 rows, batch 32: 8 steps per epoch
  const auto mlp = make_mlp3(MlpShape{8, 12, 10, 3});
  auto cfg = base_config(CodecKind::kA2sgd, 2, 0);
  cfg.iterations.reset();
  cfg.epochs = 3;
  cfg.record_histograms = true;
  cfg.hist_bins = 21;
  const RunResult r = train(*mlp, blobs, cfg);
  ASSERT_EQ(r.histograms.size(), 4u);
  const std::vector<std::size_t> tags{0, 8, 16, 23};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.histograms[i].iter, tags[i]);
    EXPECT_EQ(r.histograms[i].total(), mlp->num_params());
    EXPECT_EQ(r.histograms[i].counts.size(), 21u);
  }
  EXPECT_EQ(r.accuracy.size(), 3u);
}

TEST(Train, RejectsBadConfigs) {
  const Dataset bowl = bowl_data();
  const auto quad = make_quadratic(bowl.dim);
  auto cfg = base_config(CodecKind::kDense, 0, 10);
  EXPECT_THROW(train(*quad, bowl, cfg), std::invalid_argument);
  cfg = base_config(CodecKind::kDense, 64, 10);
  EXPECT_THROW(train(*quad, bowl, cfg), std::invalid_argument);
  cfg = base_config(CodecKind::kDense, 2, 10);
  cfg.lr.eta0 = 0.0;
  EXPECT_THROW(train(*quad, bowl, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace a2sgd
