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

#include "a2sgd/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "a2sgd/errors.hpp"
#include "a2sgd/kernels.hpp"

namespace a2sgd {

std::string_view to_string(LrKind kind) {
  switch (kind) {
    case LrKind::kConstant: return "constant";
    case LrKind::kPolynomial: return "poly";
    case LrKind::kInverseSqrt: return "invsqrt";
  }
  throw std::invalid_argument("unknown lr schedule");
}

LrKind parse_lr_kind(std::string_view name) {
  for (auto kind : {LrKind::kConstant, LrKind::kPolynomial, LrKind::kInverseSqrt}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown lr schedule '" + std::string(name) +
                              "' (expected constant, poly or invsqrt)");
}

double LrSchedule::at(std::size_t t) const {
  switch (kind) {
    case LrKind::kConstant: return eta0;
    case LrKind::kPolynomial: return eta0 / (1.0 + lambda * static_cast<double>(t));
    case LrKind::kInverseSqrt: return eta0 / std::sqrt(static_cast<double>(horizon) + 1.0);
  }
  return eta0;
}

void LrSchedule::validate() const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw std::invalid_argument("lr: eta0 must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lr: lambda must be >= 0");
}

std::vector<WorkerState> make_workers(std::size_t workers, const GradVector& initial,
                                      const CodecParams& params, std::uint64_t seed) {
  std::vector<WorkerState> out;
  out.reserve(workers);
  for (std::size_t p = 0; p < workers; ++p) {
    out.push_back(WorkerState{initial, CodecState(params, Rng(seed, 0xc0dec000 + p))});
  }
  return out;
}

namespace {

// Runs fn(p) for every rank, possibly on several threads. The first exception
// (by rank) is rethrown on the caller.
template <typename Fn>
void for_each_worker(std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(workers);
  const auto count = static_cast<std::ptrdiff_t>(workers);
#pragma omp parallel for schedule(static) if (count > 1)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    try {
      fn(static_cast<std::size_t>(p));
    } catch (...) {
      errors[static_cast<std::size_t>(p)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_round(const Cluster& cluster, std::size_t workers, std::size_t grads) {
  if (workers != cluster.size() || grads != cluster.size()) {
    throw ShapeError("sync: expected " + std::to_string(cluster.size()) + " workers, got " +
                     std::to_string(workers) + " states and " + std::to_string(grads) +
                     " gradients");
  }
}

template <typename Encode>
std::vector<WirePayload> encode_all(std::span<WorkerState> workers,
                                    std::span<const GradVector> grads, SyncStats* stats,
                                    Encode&& encode) {
  std::vector<WirePayload> payloads(workers.size());
  double worker0_s = 0.0;
  for_each_worker(workers.size(), [&](std::size_t p) {
    const auto start = std::chrono::steady_clock::now();
    payloads[p] = encode(grads[p], workers[p].codec);
    if (p == 0) worker0_s = seconds_since(start);
  });
  if (stats) stats->encode_s += worker0_s;
  return payloads;
}

std::uint64_t received_from_others(std::span<const WirePayload> payloads, std::size_t self) {
  std::uint64_t bits = 0;
  for (std::size_t q = 0; q < payloads.size(); ++q) {
    if (q != self) bits += payloads[q].bit_cost;
  }
  return bits;
}

std::vector<GradVector> replicate(GradVector g, std::size_t workers) {
  return std::vector<GradVector>(workers, g);
}

}  // namespace

std::vector<GradVector> a2sgd_sync(Cluster& cluster, std::span<WorkerState> workers,
                                   std::span<const GradVector> grads, std::size_t iter,
                                   SyncStats* stats) {
  check_round(cluster, workers.size(), grads.size());
  const auto payloads = encode_all(workers, grads, stats, [](const GradVector& g, CodecState& s) {
    return a2sgd_encode(g, s);
  });

  std::vector<TwoMeans> local;
  local.reserve(payloads.size());
  for (const auto& p : payloads) local.push_back(means_of(p));
  const TwoMeans global = cluster.allreduce_average(local);
  for (std::size_t p = 0; p < payloads.size(); ++p) {
    cluster.record_traffic(p, iter, payloads[p], traffic_bits(CodecKind::kA2sgd, grads[p].size()));
  }

  std::vector<GradVector> synced(workers.size());
  for_each_worker(workers.size(), [&](std::size_t p) {
    synced[p] = a2sgd_decode(global, workers[p].codec.mask, workers[p].codec.residual);
  });
  return synced;
}

std::vector<GradVector> dense_sync(Cluster& cluster, std::span<const GradVector> grads,
                                   std::size_t iter, SyncStats* stats) {
  check_round(cluster, grads.size(), grads.size());
  const auto start = std::chrono::steady_clock::now();
  std::vector<WirePayload> payloads;
  payloads.reserve(grads.size());
  for (const auto& g : grads) {
    WirePayload p;
    p.kind = CodecKind::kDense;
    p.length = g.size();
    p.bit_cost = traffic_bits(CodecKind::kDense, g.size());
    p.bit_cost_with_indices = p.bit_cost;
    payloads.push_back(std::move(p));
  }
  if (stats) stats->encode_s += seconds_since(start) / static_cast<double>(grads.size());

  GradVector mean = cluster.allreduce_average(grads);
  for (std::size_t p = 0; p < payloads.size(); ++p) {
    cluster.record_traffic(p, iter, payloads[p], payloads[p].bit_cost);
  }
  return replicate(std::move(mean), grads.size());
}

std::vector<GradVector> sparse_sync(Cluster& cluster, CodecKind kind,
                                    std::span<WorkerState> workers,
                                    std::span<const GradVector> grads, std::size_t iter,
                                    SyncStats* stats) {
  if (kind != CodecKind::kTopK && kind != CodecKind::kGaussianK) {
    throw std::invalid_argument("sparse_sync: kind must be topk or gaussiank");
  }
  check_round(cluster, workers.size(), grads.size());
  const auto payloads = encode_all(workers, grads, stats, [kind](const GradVector& g, CodecState& s) {
    return kind == CodecKind::kTopK ? topk_encode(g, s) : gaussian_k_encode(g, s);
  });
  const auto gathered = cluster.allgather(payloads);
  for (std::size_t p = 0; p < payloads.size(); ++p) {
    cluster.record_traffic(p, iter, payloads[p], received_from_others(gathered, p));
  }
  return replicate(sparse_union_average(gathered), workers.size());
}

std::vector<GradVector> qsgd_sync(Cluster& cluster, std::span<WorkerState> workers,
                                  std::span<const GradVector> grads, std::size_t iter,
                                  SyncStats* stats) {
  check_round(cluster, workers.size(), grads.size());
  const auto payloads = encode_all(workers, grads, stats, [](const GradVector& g, CodecState& s) {
    return qsgd_encode(g, s);
  });
  const auto gathered = cluster.allgather(payloads);
  for (std::size_t p = 0; p < payloads.size(); ++p) {
    cluster.record_traffic(p, iter, payloads[p], received_from_others(gathered, p));
  }

  std::vector<GradVector> decoded;
  std::vector<std::span<const double>> views;
  decoded.reserve(gathered.size());
  for (std::size_t q = 0; q < gathered.size(); ++q) {
    decoded.push_back(qsgd_decode(gathered[q], workers[q].codec.params.qsgd_level));
  }
  for (const auto& d : decoded) views.push_back(d.span());
  GradVector mean(grads.front().size());
  kernels::parallel::mean_of(views, mean.span());
  return replicate(std::move(mean), workers.size());
}

void apply_update(std::span<WorkerState> workers, std::span<const GradVector> synced, double eta) {
  if (workers.size() != synced.size()) throw ShapeError("apply_update: worker count mismatch");
  for_each_worker(workers.size(), [&](std::size_t p) {
    kernels::parallel::axpy(-eta, synced[p].span(), workers[p].weights.span());
  });
}

void a2sgd_step(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter) {
  apply_update(workers, a2sgd_sync(cluster, workers, grads, iter), eta);
}

void dense_step(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter) {
  check_round(cluster, workers.size(), grads.size());
  apply_update(workers, dense_sync(cluster, grads, iter), eta);
}

void sparse_step(Cluster& cluster, CodecKind kind, std::span<WorkerState> workers,
                 std::span<const GradVector> grads, double eta, std::size_t iter) {
  apply_update(workers, sparse_sync(cluster, kind, workers, grads, iter), eta);
}

void qsgd_step(Cluster& cluster, std::span<WorkerState> workers,
               std::span<const GradVector> grads, double eta, std::size_t iter) {
  apply_update(workers, qsgd_sync(cluster, workers, grads, iter), eta);
}

void final_sync(Cluster& cluster, std::span<WorkerState> workers,
                std::span<const GradVector> grads, double eta, std::size_t iter) {
  check_round(cluster, workers.size(), grads.size());
  std::vector<GradVector> updated(workers.size());
  for_each_worker(workers.size(), [&](std::size_t p) {
    updated[p] = workers[p].weights;
    kernels::parallel::axpy(-eta, grads[p].span(), updated[p].span());
  });
  const GradVector consensus = cluster.allreduce_average(updated);
  for (std::size_t p = 0; p < workers.size(); ++p) {
    WirePayload payload;
    payload.kind = CodecKind::kDense;
    payload.length = consensus.size();
    payload.bit_cost = traffic_bits(CodecKind::kDense, consensus.size());
    payload.bit_cost_with_indices = payload.bit_cost;
    cluster.record_traffic(p, iter, payload, payload.bit_cost);
    workers[p].weights = consensus;
  }
}

RunResult train(const Model& model, const Dataset& data, const TrainConfig& config,
                const Dataset* eval) {
  const auto wall_start = std::chrono::steady_clock::now();
  if (config.workers == 0) throw std::invalid_argument("train: workers must be >= 1");
  if (config.batch == 0) throw std::invalid_argument("train: batch must be >= 1");
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  config.lr.validate();

  const std::size_t batch = std::min(config.batch, data.size());
  if (!config.identical_shards && batch < config.workers) {
    throw std::invalid_argument("train: global batch " + std::to_string(batch) +
                                " smaller than worker count " + std::to_string(config.workers));
  }
  const std::size_t per_epoch = data.size() / batch;
  const std::size_t total = config.iterations.value_or(config.epochs * per_epoch);
  if (total == 0) throw std::invalid_argument("train: run has zero iterations");

  LrSchedule lr = config.lr;
  if (lr.horizon == 0) lr.horizon = total;

  Cluster cluster(config.workers, config.cost);
  Rng init_rng(config.seed, 0x1417);
  auto workers = make_workers(config.workers, model.initial_weights(init_rng), config.codec,
                              config.seed);
  const Dataset& eval_set = eval ? *eval : data;

  RunResult result;
  result.num_params = model.num_params();
  std::vector<std::size_t> order(data.size());
  std::vector<GradVector> grads(config.workers);
  SyncStats stats;

  for (std::size_t t = 0; t < total; ++t) {
    const std::size_t epoch = t / per_epoch;
    const std::size_t slot = t % per_epoch;
    if (slot == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle_rng(config.seed, 0x5f0000 + epoch);
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    }
    const std::span<const std::size_t> global(order.data() + slot * batch, batch);

    double local_loss0 = 0.0;
    for_each_worker(config.workers, [&](std::size_t p) {
      const auto rows = config.identical_shards ? global : shard(global, p, config.workers);
      auto lg = model.loss_and_gradient(workers[p].weights, data, rows);
      grads[p] = std::move(lg.grad);
      if (p == 0) local_loss0 = lg.loss;
    });

    if (config.record_loss) {
      const bool same_rows = config.identical_shards || config.workers == 1;
      result.loss.push_back(same_rows ? local_loss0 : model.loss(workers[0].weights, data, global));
    }
    if (config.record_histograms && (slot == 0 || t + 1 == total)) {
      result.histograms.push_back(histogram(grads[0].span(), config.hist_bins, t));
    }

    const double eta = lr.at(t);
    const bool last = t + 1 == total;
    switch (config.algo) {
      case CodecKind::kA2sgd:
        if (last) {
          final_sync(cluster, workers, grads, eta, t);
        } else {
          apply_update(workers, a2sgd_sync(cluster, workers, grads, t, &stats), eta);
        }
        break;
      case CodecKind::kDense:
        apply_update(workers, dense_sync(cluster, grads, t, &stats), eta);
        break;
      case CodecKind::kTopK:
      case CodecKind::kGaussianK:
        apply_update(workers, sparse_sync(cluster, config.algo, workers, grads, t, &stats), eta);
        break;
      case CodecKind::kQsgd:
        apply_update(workers, qsgd_sync(cluster, workers, grads, t, &stats), eta);
        break;
    }
    workers[0].weights.check_finite("weights");

    if (config.record_trajectory) result.trajectory.push_back(workers[0].weights);
    if (model.is_classifier() && (slot + 1 == per_epoch || last)) {
      result.accuracy.push_back(accuracy(model, workers[0].weights, eval_set));
    }
  }

  result.iterations = total;
  for (auto& w : workers) result.final_weights.push_back(std::move(w.weights));
  result.ledger = cluster.ledger();
  result.bits_total = result.ledger.total_bits_sent();
  result.bits_per_worker = result.ledger.total_bits_sent(0);
  result.bits_with_indices_per_worker = result.ledger.total_bits_sent_with_indices(0);
  result.modeled_comm_s = result.ledger.total_modeled_time(0);
  result.encode_s = stats.encode_s;
  result.wall_s = seconds_since(wall_start);
  return result;
}

}  // namespace a2sgd
