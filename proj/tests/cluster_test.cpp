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

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "a2sgd/cluster.hpp"
#include "a2sgd/errors.hpp"

namespace a2sgd {
namespace {

WirePayload sparse(std::size_t n, std::vector<std::uint32_t> idx, std::vector<double> vals) {
  WirePayload p;
  p.kind = CodecKind::kTopK;
  p.length = n;
  p.indices = std::move(idx);
  p.scalars = std::move(vals);
  p.bit_cost = 32 * p.scalars.size();
  return p;
}

TEST(Allreduce, MeansExamples) {
  Cluster one(1);
  const TwoMeans x{1.5, -0.25};
  EXPECT_EQ(one.allreduce_average(std::vector<TwoMeans>{x}), x);

  Cluster two(2);
  EXPECT_EQ(two.allreduce_average(std::vector<TwoMeans>{{2, 3}, {4, 1}}), (TwoMeans{3, 2}));

  Cluster four(4);
  const TwoMeans y{0.1, 0.7};
  EXPECT_EQ(four.allreduce_average(std::vector<TwoMeans>(4, y)), y);
  EXPECT_EQ(four.epoch(), 1u);
}

TEST(Allreduce, VectorsAverageInRankOrder) {
  Cluster c(3);
  const std::vector<GradVector> in{GradVector({1, 2}), GradVector({3, 4}), GradVector({5, 9})};
  EXPECT_EQ(c.allreduce_average(in), GradVector({3, 5}));
  const GradVector again = c.allreduce_average(in);
  EXPECT_EQ(again, GradVector({3, 5}));
}

TEST(Allreduce, ChecksParticipantsAndShapes) {
  Cluster c(2);
  EXPECT_THROW(c.allreduce_average(std::vector<TwoMeans>{{1, 1}}), ShapeError);
  EXPECT_THROW(c.allreduce_average(std::vector<GradVector>{GradVector(2), GradVector(3)}),
               ShapeError);
  EXPECT_THROW(Cluster(0), std::invalid_argument);
}

TEST(Allgather, Examples) {
  Cluster one(1);
  const auto single = one.allgather(std::vector<WirePayload>{sparse(4, {1}, {2.0})});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(sparse_union_average(single), GradVector({0, 2, 0, 0}));

  Cluster two(2);
  const auto disjoint =
      two.allgather(std::vector<WirePayload>{sparse(4, {0}, {2.0}), sparse(4, {3}, {-4.0})});
  EXPECT_EQ(sparse_union_average(disjoint), GradVector({1, 0, 0, -2}));

  const auto overlap =
      two.allgather(std::vector<WirePayload>{sparse(4, {1, 2}, {2.0, 6.0}), sparse(4, {2}, {2.0})});
  EXPECT_EQ(sparse_union_average(overlap), GradVector({0, 1, 4, 0}));

  const auto empty = two.allgather(std::vector<WirePayload>{sparse(3, {}, {}), sparse(3, {}, {})});
  EXPECT_EQ(sparse_union_average(empty), GradVector(3, 0.0));
}

TEST(Allgather, RejectsMalformedPayloads) {
  EXPECT_THROW(sparse_union_average(std::vector<WirePayload>{sparse(3, {5}, {1.0})}), ShapeError);
  EXPECT_THROW(sparse_union_average(std::vector<WirePayload>{sparse(3, {1}, {})}), ShapeError);
  EXPECT_THROW(sparse_union_average(std::vector<WirePayload>{sparse(3, {}, {}), sparse(4, {}, {})}),
               ShapeError);
}

TEST(Ledger, RecordsTableBitsAndModeledTime) {
  CostModel cost;
  cost.alpha = 2e-5;
  cost.beta = 1e-10;
  Cluster c(2, cost);
  WirePayload a;
  a.kind = CodecKind::kA2sgd;
  a.bit_cost = 64;
  a.bit_cost_with_indices = 64;
  c.record_traffic(0, 0, a, 64);
  EXPECT_EQ(c.ledger().rows().back().bits_sent, 64u);
  EXPECT_DOUBLE_EQ(c.ledger().rows().back().modeled_time_s, 2e-5 + 64 * 1e-10);

  WirePayload d;
  d.kind = CodecKind::kDense;
  d.bit_cost = 32'000'000;
  d.bit_cost_with_indices = d.bit_cost;
  c.record_traffic(1, 0, d, d.bit_cost);
  EXPECT_EQ(c.ledger().total_bits_sent(1), 32'000'000u);
  EXPECT_EQ(c.ledger().total_bits_sent(), 32'000'064u);
  EXPECT_THROW(c.record_traffic(2, 0, d, 0), std::out_of_range);
}

TEST(Ledger, LatencyOnlyModel) {
  CostModel cost;
  cost.beta = 0.0;
  Cluster c(1, cost);
  WirePayload d;
  d.bit_cost = 123456789;
  c.record_traffic(0, 0, d, 0);
  EXPECT_EQ(c.ledger().rows().back().modeled_time_s, cost.alpha);
}

TEST(Ledger, CsvSchema) {
  Cluster c(1);
  WirePayload a;
  a.kind = CodecKind::kA2sgd;
  a.bit_cost = 64;
  c.record_traffic(0, 3, a, 64);
  std::ostringstream os;
  c.ledger().write_csv(os);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "worker,iter,algo,bits_sent,modeled_time_s");
  EXPECT_EQ(row.rfind("0,3,a2sgd,64,", 0), 0u) << row;
}

TEST(CostModel, Validation) {
  CostModel bad;
  bad.alpha = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.alpha = 0;
  bad.beta = std::nan("");
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ScalingEfficiency, Examples) {
  EXPECT_EQ(scaling_efficiency(100.0, 100.0), 1.0);
  EXPECT_EQ(scaling_efficiency(200.0, 100.0), 2.0);
  EXPECT_THROW(scaling_efficiency(1.0, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace a2sgd
