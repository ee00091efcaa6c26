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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "a2sgd/analysis.hpp"
#include "a2sgd/cluster.hpp"
#include "a2sgd/codecs.hpp"
#include "a2sgd/dataset.hpp"
#include "a2sgd/models.hpp"
#include "a2sgd/numkit.hpp"

namespace a2sgd {

enum class LrKind { kConstant, kPolynomial, kInverseSqrt };

std::string_view to_string(LrKind kind);
LrKind parse_lr_kind(std::string_view name);

/// constant: eta0; polynomial: eta0 / (1 + lambda t);
/// inverse-sqrt: eta0 / sqrt(horizon + 1), constant over a run of `horizon` steps.
struct LrSchedule {
  LrKind kind = LrKind::kConstant;
  double eta0 = 0.01;
  double lambda = 0.0;
  std::size_t horizon = 0;

  double at(std::size_t t) const;
  void validate() const;
};

struct WorkerState {
  GradVector weights;
  CodecState codec;
};

// Replicated initial model: every worker gets the same weights and its own
// codec stream (seed, rank).
std::vector<WorkerState> make_workers(std::size_t workers, const GradVector& initial,
                                      const CodecParams& params, std::uint64_t seed);

struct SyncStats {
  double encode_s = 0.0;  // worker 0's encode time, accumulated
};

// One synchronization round. grads[p] is worker p's local gradient at
// iteration `iter`; the return value is the gradient each worker applies.
// Traffic is recorded in the cluster ledger.
std::vector<GradVector> a2sgd_sync(Cluster& cluster, std::span<WorkerState> workers,
                                   std::span<const GradVector> grads, std::size_t iter,
                                   SyncStats* stats = nullptr);
std::vector<GradVector> dense_sync(Cluster& cluster, std::span<const GradVector> grads,
                                   std::size_t iter, SyncStats* stats = nullptr);
// kind is kTopK or kGaussianK.
std::vector<GradVector> sparse_sync(Cluster& cluster, CodecKind kind,
                                    std::span<WorkerState> workers,
                                    std::span<const GradVector> grads, std::size_t iter,
                                    SyncStats* stats = nullptr);
std::vector<GradVector> qsgd_sync(Cluster& cluster, std::span<WorkerState> workers,
                                  std::span<const GradVector> grads, std::size_t iter,
                                  SyncStats* stats = nullptr);

// w_p <- w_p - eta * synced[p]
void apply_update(std::span<WorkerState> workers, std::span<const GradVector> synced, double eta);

void a2sgd_step(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter);
void dense_step(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter);
void sparse_step(Cluster& cluster, CodecKind kind, std::span<WorkerState> workers,
                 std::span<const GradVector> grads, double eta, std::size_t iter);
void qsgd_step(Cluster& cluster, std::span<WorkerState> workers,
               std::span<const GradVector> grads, double eta, std::size_t iter);

// Last iteration of A2SGD: one dense allreduce (32n bits per worker) of the
// updated models w_p - eta * g_p. Every worker ends with the same weights.
void final_sync(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter);

struct TrainConfig {
  CodecKind algo = CodecKind::kA2sgd;
  std::size_t workers = 4;
  std::size_t batch = 128;  // global batch, split across workers
  std::size_t epochs = 1;
  std::optional<std::size_t> iterations;  // overrides epochs * batches-per-epoch
  LrSchedule lr;
  CodecParams codec;
  std::uint64_t seed = 0;
  CostModel cost;
  // Every worker trains on the whole global batch instead of a shard.
  bool identical_shards = false;
  bool record_loss = true;
  bool record_trajectory = false;  // worker-0 weights after every step
  bool record_histograms = false;  // worker-0 raw gradient at each epoch start + last step
  std::size_t hist_bins = 101;
};

struct RunResult {
  std::vector<double> loss;      // per iteration: worker-0 weights on the global batch
  std::vector<double> accuracy;  // per epoch, worker-0 weights (classifiers only)
  std::vector<GradVector> trajectory;
  std::vector<Histogram> histograms;
  std::vector<GradVector> final_weights;  // per worker
  TrafficLedger ledger;
  std::size_t iterations = 0;
  std::size_t num_params = 0;
  std::uint64_t bits_total = 0;           // summed over workers
  std::uint64_t bits_per_worker = 0;      // worker 0
  std::uint64_t bits_with_indices_per_worker = 0;
  double modeled_comm_s = 0.0;            // worker 0
  double encode_s = 0.0;                  // worker 0
  double wall_s = 0.0;
};

// eval is used for per-epoch accuracy; defaults to the training set.
RunResult train(const Model& model, const Dataset& data, const TrainConfig& config,
                const Dataset* eval = nullptr);

}  // namespace a2sgd
