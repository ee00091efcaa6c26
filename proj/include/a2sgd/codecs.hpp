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

#include "a2sgd/numkit.hpp"

namespace a2sgd {

enum class CodecKind { kDense, kA2sgd, kTopK, kGaussianK, kQsgd };

std::string_view to_string(CodecKind kind);
// Accepts "dense", "a2sgd", "topk", "gaussiank", "qsgd". Throws std::invalid_argument.
CodecKind parse_codec_kind(std::string_view name);

/// Absolute means of the two sign classes of a gradient.
struct TwoMeans {
  double pos = 0.0;  // mean of elements >= 0
  double neg = 0.0;  // mean of |v_i| over elements < 0

  friend bool operator==(const TwoMeans&, const TwoMeans&) = default;
};

/// Sign-class membership. pos(i) is true iff v_i >= 0, and neg(i) == !pos(i),
/// so the two indicator vectors are disjoint and cover every index.
class SignMask {
 public:
  SignMask() = default;
  explicit SignMask(std::size_t n) : positive_(n, 1) {}
  explicit SignMask(std::vector<std::uint8_t> positive) : positive_(std::move(positive)) {}

  static SignMask of(std::span<const double> v);

  std::size_t size() const noexcept { return positive_.size(); }
  bool pos(std::size_t i) const noexcept { return positive_[i] != 0; }
  bool neg(std::size_t i) const noexcept { return positive_[i] == 0; }

  std::span<const std::uint8_t> bits() const noexcept { return positive_; }
  std::span<std::uint8_t> bits() noexcept { return positive_; }
  void resize(std::size_t n) { positive_.resize(n, 1); }

  friend bool operator==(const SignMask&, const SignMask&) = default;

 private:
  std::vector<std::uint8_t> positive_;
};

/// Local residual g - transmitted(g). For A2SGD it is exactly g - enc(g).
using ErrorVector = GradVector;

/// What a worker puts on the wire in one synchronization round.
///
/// bit_cost follows the traffic model of the complexity table (32 bits per
/// transmitted gradient value, sparse indices free). bit_cost_with_indices
/// additionally charges 32 bits per index, which is what a real sparse
/// transport would send.
struct WirePayload {
  CodecKind kind = CodecKind::kDense;
  std::size_t length = 0;  // dense gradient length n
  std::vector<double> scalars;
  std::vector<std::uint32_t> indices;
  std::uint64_t bit_cost = 0;
  std::uint64_t bit_cost_with_indices = 0;
};

struct CodecParams {
  double k_ratio = 0.001;
  std::optional<std::size_t> k;  // overrides k_ratio for Top-K when set
  int qsgd_level = 4;
};

/// Per-worker codec state. Never shared between workers.
struct CodecState {
  CodecParams params;
  Rng rng;
  // A2SGD: eps of the last encode. Top-K / Gaussian-K: carried residual.
  // Empty before the first step.
  ErrorVector residual;
  SignMask mask;  // A2SGD only

  CodecState() = default;
  CodecState(CodecParams p, Rng r) : params(p), rng(r) {}
};

struct EncResult {
  TwoMeans means;
  SignMask mask;
  GradVector encoded;  // pos * mu_pos - neg * mu_neg
};

// Empty sign classes get mean 0. Throws NumericError on NaN/Inf input.
TwoMeans two_means(std::span<const double> v);
EncResult enc(const GradVector& v);

// Writes eps = v - enc(v) into state.residual and the mask into state.mask.
// The payload carries the two means.
WirePayload a2sgd_encode(const GradVector& v, CodecState& state);
GradVector a2sgd_decode(TwoMeans global, const SignMask& mask, const ErrorVector& eps);
inline TwoMeans means_of(const WirePayload& p) { return {p.scalars.at(0), p.scalars.at(1)}; }

// k = max(1, ceil(ratio * n)).
std::size_t topk_count(std::size_t n, double ratio);

// Selects the k largest |v_i + residual_i| (ties to the lowest index) with a
// max-heap; everything not selected stays in state.residual.
WirePayload topk_encode(const GradVector& v, CodecState& state);

// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double p);
// sigma_hat * Phi^-1(1 - ratio / 2).
double gaussian_threshold(std::span<const double> v, double ratio);
WirePayload gaussian_k_encode(const GradVector& v, CodecState& state);

// Stochastic s-level quantization scaled by ||v||_2. scalars = [norm,
// signed level_0, ..., signed level_{n-1}] with levels in [-s, s].
WirePayload qsgd_encode(const GradVector& v, CodecState& state);
GradVector qsgd_decode(const WirePayload& payload, int level);

WirePayload dense_encode(const GradVector& v);
GradVector dense_decode(const WirePayload& payload);

// Scatter a sparse payload into a dense length-n vector (zeros elsewhere).
GradVector sparse_decode(const WirePayload& payload);

// Table traffic model per worker per iteration. k is only read for the
// sparse codecs.
std::uint64_t traffic_bits(CodecKind kind, std::size_t n, std::size_t k = 0);

}  // namespace a2sgd
