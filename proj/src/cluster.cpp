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

#include "a2sgd/cluster.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>
#include <string>

#include "a2sgd/errors.hpp"
#include "a2sgd/kernels.hpp"

namespace a2sgd {

void CostModel::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("cost model: alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("cost model: beta must be >= 0");
}

std::uint64_t TrafficLedger::total_bits_sent() const {
  std::uint64_t total = 0;
  for (const auto& r : rows_) total += r.bits_sent;
  return total;
}

std::uint64_t TrafficLedger::total_bits_sent(std::size_t worker) const {
  std::uint64_t total = 0;
  for (const auto& r : rows_) {
    if (r.worker == worker) total += r.bits_sent;
  }
  return total;
}

std::uint64_t TrafficLedger::total_bits_sent_with_indices(std::size_t worker) const {
  std::uint64_t total = 0;
  for (const auto& r : rows_) {
    if (r.worker == worker) total += r.bits_sent_with_indices;
  }
  return total;
}

double TrafficLedger::total_modeled_time(std::size_t worker) const {
  double total = 0.0;
  for (const auto& r : rows_) {
    if (r.worker == worker) total += r.modeled_time_s;
  }
  return total;
}

void TrafficLedger::write_csv(std::ostream& os) const {
  os << "worker,iter,algo,bits_sent,modeled_time_s\n";
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (const auto& r : rows_) {
    os << r.worker << ',' << r.iter << ',' << to_string(r.algo) << ',' << r.bits_sent << ','
       << r.modeled_time_s << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

Cluster::Cluster(std::size_t workers, CostModel cost) : workers_(workers), cost_(cost) {
  if (workers == 0) throw std::invalid_argument("Cluster: need at least one worker");
  cost_.validate();
}

void Cluster::check_participants(std::size_t got, const char* op) const {
  if (got != workers_) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(workers_) +
                     " participants, got " + std::to_string(got));
  }
}

TwoMeans Cluster::allreduce_average(std::span<const TwoMeans> contributions) {
  check_participants(contributions.size(), "allreduce_average");
  TwoMeans sum;
  for (const auto& m : contributions) {
    sum.pos += m.pos;
    sum.neg += m.neg;
  }
  const auto p = static_cast<double>(workers_);
  ++epoch_;
  return {sum.pos / p, sum.neg / p};
}

GradVector Cluster::allreduce_average(std::span<const GradVector> contributions) {
  check_participants(contributions.size(), "allreduce_average");
  const std::size_t n = contributions.front().size();
  std::vector<std::span<const double>> views;
  views.reserve(contributions.size());
  for (std::size_t r = 0; r < contributions.size(); ++r) {
    if (contributions[r].size() != n) {
      throw ShapeError("allreduce_average: rank " + std::to_string(r) + " contributed length " +
                       std::to_string(contributions[r].size()) + ", rank 0 contributed " +
                       std::to_string(n));
    }
    views.push_back(contributions[r].span());
  }
  GradVector out(n);
  kernels::parallel::mean_of(views, out.span());
  ++epoch_;
  return out;
}

std::vector<WirePayload> Cluster::allgather(std::span<const WirePayload> contributions) {
  check_participants(contributions.size(), "allgather");
  ++epoch_;
  return {contributions.begin(), contributions.end()};
}

void Cluster::record_traffic(std::size_t worker, std::size_t iter, const WirePayload& payload,
                             std::uint64_t bits_received) {
  if (worker >= workers_) throw std::out_of_range("record_traffic: worker rank out of range");
  ledger_.append(LedgerRow{worker, iter, payload.kind, payload.bit_cost, bits_received,
                           payload.bit_cost_with_indices, cost_.time_for(payload.bit_cost)});
}

GradVector sparse_union_average(std::span<const WirePayload> payloads) {
  if (payloads.empty()) throw ShapeError("sparse_union_average: no payloads");
  const std::size_t n = payloads.front().length;
  GradVector sum(n);
  for (const auto& p : payloads) {
    if (p.length != n) throw ShapeError("sparse_union_average: payload length mismatch");
    if (p.indices.size() != p.scalars.size()) {
      throw ShapeError("sparse_union_average: index/value count mismatch");
    }
    for (std::size_t j = 0; j < p.indices.size(); ++j) {
      if (p.indices[j] >= n) throw ShapeError("sparse_union_average: index out of range");
      sum[p.indices[j]] += p.scalars[j];
    }
  }
  const auto count = static_cast<double>(payloads.size());
  for (auto& x : sum) x /= count;
  return sum;
}

double scaling_efficiency(double throughput, double dense_2worker_throughput) {
  if (!(dense_2worker_throughput > 0.0)) {
    throw std::invalid_argument("scaling_efficiency: baseline throughput must be > 0");
  }
  return throughput / dense_2worker_throughput;
}

}  // namespace a2sgd
