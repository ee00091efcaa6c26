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

#include "a2sgd/kernels.hpp"

#include <algorithm>
#include <vector>

#include "a2sgd/errors.hpp"

namespace a2sgd::kernels {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(what);
}

void check_inputs(std::span<const std::span<const double>> inputs, std::size_t n) {
  if (inputs.empty()) throw ShapeError("mean_of: no inputs");
  for (const auto& in : inputs) require_same(in.size(), n, "mean_of: length mismatch");
}

}  // namespace

namespace serial {

SignSums sign_sums(std::span<const double> v) {
  SignSums s;
  for (double x : v) {
    if (x >= 0.0) {
      s.pos_sum += x;
      ++s.pos_count;
    } else {
      s.neg_abs_sum -= x;
      ++s.neg_count;
    }
  }
  return s;
}

void split_residual(std::span<const double> v, double mu_pos, double mu_neg,
                    std::span<double> eps, std::span<std::uint8_t> mask) {
  require_same(v.size(), eps.size(), "split_residual: eps length mismatch");
  require_same(v.size(), mask.size(), "split_residual: mask length mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool pos = v[i] >= 0.0;
    mask[i] = pos ? 1 : 0;
    eps[i] = pos ? v[i] - mu_pos : v[i] + mu_neg;
  }
}

void reconstruct(std::span<const double> eps, std::span<const std::uint8_t> mask,
                 double mu_pos, double mu_neg, std::span<double> out) {
  require_same(eps.size(), mask.size(), "reconstruct: mask length mismatch");
  require_same(eps.size(), out.size(), "reconstruct: output length mismatch");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    out[i] = mask[i] ? eps[i] + mu_pos : eps[i] - mu_neg;
  }
}

void mean_of(std::span<const std::span<const double>> inputs, std::span<double> out) {
  check_inputs(inputs, out.size());
  const auto count = static_cast<double>(inputs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (const auto& in : inputs) acc += in[i];
    out[i] = acc / count;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace parallel {

SignSums sign_sums(std::span<const double> v) {
  const std::size_t n = v.size();
  const auto blocks = static_cast<std::ptrdiff_t>((n + kReduceBlock - 1) / kReduceBlock);
  if (blocks <= 1) return serial::sign_sums(v);

  std::vector<SignSums> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static) if (blocks >= 4)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t len = std::min(kReduceBlock, n - lo);
    partial[static_cast<std::size_t>(b)] = serial::sign_sums(v.subspan(lo, len));
  }

  SignSums total;
  for (const auto& p : partial) {
    total.pos_sum += p.pos_sum;
    total.pos_count += p.pos_count;
    total.neg_abs_sum += p.neg_abs_sum;
    total.neg_count += p.neg_count;
  }
  return total;
}

void split_residual(std::span<const double> v, double mu_pos, double mu_neg,
                    std::span<double> eps, std::span<std::uint8_t> mask) {
  require_same(v.size(), eps.size(), "split_residual: eps length mismatch");
  require_same(v.size(), mask.size(), "split_residual: mask length mismatch");
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for simd schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const bool pos = v[i] >= 0.0;
    mask[i] = pos ? 1 : 0;
    eps[i] = pos ? v[i] - mu_pos : v[i] + mu_neg;
  }
}

void reconstruct(std::span<const double> eps, std::span<const std::uint8_t> mask,
                 double mu_pos, double mu_neg, std::span<double> out) {
  require_same(eps.size(), mask.size(), "reconstruct: mask length mismatch");
  require_same(eps.size(), out.size(), "reconstruct: output length mismatch");
  const auto n = static_cast<std::ptrdiff_t>(eps.size());
#pragma omp parallel for simd schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = mask[i] ? eps[i] + mu_pos : eps[i] - mu_neg;
  }
}

void mean_of(std::span<const std::span<const double>> inputs, std::span<double> out) {
  check_inputs(inputs, out.size());
  const auto count = static_cast<double>(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const auto& in : inputs) acc += in[i];
    out[i] = acc / count;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy: length mismatch");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for simd schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace parallel

}  // namespace a2sgd::kernels
