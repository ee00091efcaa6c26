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

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "a2sgd/codecs.hpp"
#include "a2sgd/numkit.hpp"

namespace a2sgd {

/// Latency-bandwidth transfer model: time = alpha + beta * bits.
/// Defaults: 10 us per collective, 100 Gbps.
struct CostModel {
  double alpha = 1e-5;   // seconds
  double beta = 1e-11;   // seconds per bit

  double time_for(std::uint64_t bits) const { return alpha + beta * static_cast<double>(bits); }
  void validate() const;
};

struct LedgerRow {
  std::size_t worker = 0;
  std::size_t iter = 0;
  CodecKind algo = CodecKind::kDense;
  std::uint64_t bits_sent = 0;
  std::uint64_t bits_received = 0;
  std::uint64_t bits_sent_with_indices = 0;
  double modeled_time_s = 0.0;
};

/// Append-only record of per-worker, per-iteration synchronization traffic.
class TrafficLedger {
 public:
  void append(const LedgerRow& row) { rows_.push_back(row); }
  const std::vector<LedgerRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::uint64_t total_bits_sent() const;
  std::uint64_t total_bits_sent(std::size_t worker) const;
  std::uint64_t total_bits_sent_with_indices(std::size_t worker) const;
  double total_modeled_time(std::size_t worker) const;

  // Header: worker,iter,algo,bits_sent,modeled_time_s
  void write_csv(std::ostream& os) const;

 private:
  std::vector<LedgerRow> rows_;
};

/// In-process simulation of P data-parallel workers.
///
/// A collective takes one contribution per rank and returns what every rank
/// observes afterwards; calling it is the rendezvous. Reductions add
/// contributions in ascending rank order, so results are independent of how
/// the caller scheduled the workers.
class Cluster {
 public:
  explicit Cluster(std::size_t workers, CostModel cost = {});

  std::size_t size() const noexcept { return workers_; }
  const CostModel& cost_model() const noexcept { return cost_; }
  TrafficLedger& ledger() noexcept { return ledger_; }
  const TrafficLedger& ledger() const noexcept { return ledger_; }
  // Number of collectives completed so far.
  std::uint64_t epoch() const noexcept { return epoch_; }

  TwoMeans allreduce_average(std::span<const TwoMeans> contributions);
  GradVector allreduce_average(std::span<const GradVector> contributions);
  std::vector<WirePayload> allgather(std::span<const WirePayload> contributions);

  // Appends one ledger row; modeled time is charged on payload.bit_cost.
  void record_traffic(std::size_t worker, std::size_t iter, const WirePayload& payload,
                      std::uint64_t bits_received);

 private:
  void check_participants(std::size_t got, const char* op) const;

  std::size_t workers_;
  CostModel cost_;
  TrafficLedger ledger_;
  std::uint64_t epoch_ = 0;
};

// Dense average of sparse payloads: sum over ranks with unselected entries
// taken as 0, divided by the number of payloads.
GradVector sparse_union_average(std::span<const WirePayload> payloads);

double scaling_efficiency(double throughput, double dense_2worker_throughput);

}  // namespace a2sgd
