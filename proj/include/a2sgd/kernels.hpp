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

// Data-parallel inner loops used by the codecs and the simulated collectives.
//
// Every kernel exists twice: `parallel::` is the OpenMP version used by the
// library, `serial::` is a plain loop kept as the reference the tests and the
// benchmark compare against. Elementwise kernels give bit-identical results in
// both versions. Reductions in `parallel::` sum fixed-size blocks and combine
// the block partials in index order, so their result depends only on the
// input and never on the thread count or schedule.

#include <cstddef>
#include <cstdint>
#include <span>

namespace a2sgd::kernels {

inline constexpr std::size_t kReduceBlock = 8192;
// Below this length the OpenMP kernels run on the calling thread.
inline constexpr std::ptrdiff_t kParallelMin = 1 << 15;

// Per-sign-class sums of a gradient. Zero counts as positive.
struct SignSums {
  double pos_sum = 0.0;
  std::size_t pos_count = 0;
  double neg_abs_sum = 0.0;
  std::size_t neg_count = 0;
};

namespace serial {

SignSums sign_sums(std::span<const double> v);

// mask[i] = v[i] >= 0; eps[i] = v[i] - (mask ? mu_pos : -mu_neg).
void split_residual(std::span<const double> v, double mu_pos, double mu_neg,
                    std::span<double> eps, std::span<std::uint8_t> mask);

// out[i] = eps[i] + (mask ? mu_pos : -mu_neg).
void reconstruct(std::span<const double> eps, std::span<const std::uint8_t> mask,
                 double mu_pos, double mu_neg, std::span<double> out);

// out = (inputs[0] + inputs[1] + ... ) / inputs.size(), summed in rank order.
void mean_of(std::span<const std::span<const double>> inputs, std::span<double> out);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace serial

namespace parallel {

SignSums sign_sums(std::span<const double> v);
void split_residual(std::span<const double> v, double mu_pos, double mu_neg,
                    std::span<double> eps, std::span<std::uint8_t> mask);
void reconstruct(std::span<const double> eps, std::span<const std::uint8_t> mask,
                 double mu_pos, double mu_neg, std::span<double> out);
void mean_of(std::span<const std::span<const double>> inputs, std::span<double> out);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace parallel

}  // namespace a2sgd::kernels
