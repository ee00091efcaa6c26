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

#include "a2sgd/codecs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "a2sgd/errors.hpp"
#include "a2sgd/kernels.hpp"

namespace a2sgd {

std::string_view to_string(CodecKind kind) {
  switch (kind) {
    case CodecKind::kDense: return "dense";
    case CodecKind::kA2sgd: return "a2sgd";
    case CodecKind::kTopK: return "topk";
    case CodecKind::kGaussianK: return "gaussiank";
    case CodecKind::kQsgd: return "qsgd";
  }
  throw std::invalid_argument("unknown codec kind");
}

CodecKind parse_codec_kind(std::string_view name) {
  for (auto kind : {CodecKind::kDense, CodecKind::kA2sgd, CodecKind::kTopK,
                    CodecKind::kGaussianK, CodecKind::kQsgd}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected dense, a2sgd, topk, gaussiank or qsgd)");
}

SignMask SignMask::of(std::span<const double> v) {
  std::vector<std::uint8_t> bits(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] >= 0.0 ? 1 : 0;
  return SignMask(std::move(bits));
}

namespace {

TwoMeans means_from(const kernels::SignSums& s) {
  if (!std::isfinite(s.pos_sum) || !std::isfinite(s.neg_abs_sum)) {
    throw NumericError("enc: gradient contains NaN or Inf");
  }
  TwoMeans m;
  if (s.pos_count > 0) m.pos = s.pos_sum / static_cast<double>(s.pos_count);
  if (s.neg_count > 0) m.neg = s.neg_abs_sum / static_cast<double>(s.neg_count);
  return m;
}

void prepare_residual(ErrorVector& residual, std::size_t n, const char* who) {
  if (residual.empty()) {
    residual = ErrorVector(n);
  } else if (residual.size() != n) {
    throw ShapeError(std::string(who) + ": residual length " +
                     std::to_string(residual.size()) + " != gradient length " +
                     std::to_string(n));
  }
}

// acc = v + residual, written into residual.
void accumulate(const GradVector& v, ErrorVector& residual) {
  kernels::parallel::axpy(1.0, v.span(), residual.span());
}

WirePayload sparse_payload(CodecKind kind, const ErrorVector& acc,
                           std::vector<std::uint32_t> indices) {
  WirePayload p;
  p.kind = kind;
  p.length = acc.size();
  p.scalars.reserve(indices.size());
  for (auto i : indices) p.scalars.push_back(acc[i]);
  p.indices = std::move(indices);
  p.bit_cost = 32ULL * p.indices.size();
  p.bit_cost_with_indices = 64ULL * p.indices.size();
  return p;
}

std::uint64_t qsgd_bits(std::size_t n) {
  // ceil(2.8 n) + 32, in integers so that 2.8 * 100 does not round up to 281.
  return (28ULL * n + 9ULL) / 10ULL + 32ULL;
}

}  // namespace

TwoMeans two_means(std::span<const double> v) {
  return means_from(kernels::parallel::sign_sums(v));
}

EncResult enc(const GradVector& v) {
  if (v.empty()) throw std::invalid_argument("enc: empty gradient");
  EncResult r;
  r.means = two_means(v.span());
  r.mask = SignMask(v.size());
  r.encoded = GradVector(v.size());
  ErrorVector eps(v.size());
  kernels::parallel::split_residual(v.span(), r.means.pos, r.means.neg, eps.span(),
                                    r.mask.bits());
  const ErrorVector zeros(v.size());
  kernels::parallel::reconstruct(zeros.span(), r.mask.bits(), r.means.pos, r.means.neg,
                                 r.encoded.span());
  return r;
}

WirePayload a2sgd_encode(const GradVector& v, CodecState& state) {
  if (v.empty()) throw std::invalid_argument("a2sgd_encode: empty gradient");
  const TwoMeans m = two_means(v.span());
  if (state.residual.size() != v.size()) state.residual = ErrorVector(v.size());
  state.mask.resize(v.size());
  kernels::parallel::split_residual(v.span(), m.pos, m.neg, state.residual.span(),
                                    state.mask.bits());

  WirePayload p;
  p.kind = CodecKind::kA2sgd;
  p.length = v.size();
  p.scalars = {m.pos, m.neg};
  p.bit_cost = traffic_bits(CodecKind::kA2sgd, v.size());
  p.bit_cost_with_indices = p.bit_cost;
  return p;
}

GradVector a2sgd_decode(TwoMeans global, const SignMask& mask, const ErrorVector& eps) {
  if (mask.size() != eps.size()) {
    throw ShapeError("a2sgd_decode: mask length " + std::to_string(mask.size()) +
                     " != error length " + std::to_string(eps.size()));
  }
  GradVector out(eps.size());
  kernels::parallel::reconstruct(eps.span(), mask.bits(), global.pos, global.neg, out.span());
  return out;
}

std::size_t topk_count(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("k ratio must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  return std::max<std::size_t>(1, k);
}

WirePayload topk_encode(const GradVector& v, CodecState& state) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("topk_encode: empty gradient");
  const std::size_t k = state.params.k.value_or(topk_count(n, state.params.k_ratio));
  if (k == 0 || k > n) {
    throw std::invalid_argument("topk_encode: k=" + std::to_string(k) +
                                " must be in [1, n=" + std::to_string(n) + "]");
  }
  prepare_residual(state.residual, n, "topk_encode");
  accumulate(v, state.residual);
  const ErrorVector& acc = state.residual;

  // Max-heap on (|acc|, -index): O(n) to build, O(k log n) to pop k.
  std::vector<std::uint32_t> heap(n);
  for (std::size_t i = 0; i < n; ++i) heap[i] = static_cast<std::uint32_t>(i);
  const auto less = [&acc](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(acc[a]);
    const double mb = std::abs(acc[b]);
    return ma < mb || (ma == mb && a > b);
  };
  std::make_heap(heap.begin(), heap.end(), less);
  std::vector<std::uint32_t> picked;
  picked.reserve(k);
  auto end = heap.end();
  for (std::size_t j = 0; j < k; ++j) {
    std::pop_heap(heap.begin(), end, less);
    --end;
    picked.push_back(*end);
  }
  std::sort(picked.begin(), picked.end());

  WirePayload p = sparse_payload(CodecKind::kTopK, acc, std::move(picked));
  for (auto i : p.indices) state.residual[i] = 0.0;
  return p;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0, 1)");
  // 1 - p is exact for p >= 0.5, and the lower tail keeps full relative
  // precision where the CDF itself rounds to 1.
  if (p > 0.5) return -inverse_normal_cdf(1.0 - p);

  // Rational approximation (relative error < 1.2e-9), then one Halley step
  // against erfc to bring it to double precision.
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  const auto tail = [&](double q) {
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  };

  double x;
  if (p < p_low) {
    x = tail(std::sqrt(-2.0 * std::log(p)));
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double gaussian_threshold(std::span<const double> v, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("gaussian_threshold: ratio must be in (0, 1)");
  }
  if (v.empty()) throw std::invalid_argument("gaussian_threshold: empty gradient");
  const double sigma = std::sqrt(summarize(v).variance);
  return sigma * inverse_normal_cdf(1.0 - ratio / 2.0);
}

WirePayload gaussian_k_encode(const GradVector& v, CodecState& state) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("gaussian_k_encode: empty gradient");
  prepare_residual(state.residual, n, "gaussian_k_encode");
  accumulate(v, state.residual);
  const double t = gaussian_threshold(state.residual.span(), state.params.k_ratio);

  std::vector<std::uint32_t> picked;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(state.residual[i]) > t) picked.push_back(static_cast<std::uint32_t>(i));
  }
  WirePayload p = sparse_payload(CodecKind::kGaussianK, state.residual, std::move(picked));
  for (auto i : p.indices) state.residual[i] = 0.0;
  return p;
}

WirePayload qsgd_encode(const GradVector& v, CodecState& state) {
  const int s = state.params.qsgd_level;
  if (s < 1) throw std::invalid_argument("qsgd_encode: quantization level must be >= 1");
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("qsgd_encode: empty gradient");

  WirePayload p;
  p.kind = CodecKind::kQsgd;
  p.length = n;
  p.bit_cost = qsgd_bits(n);
  p.bit_cost_with_indices = p.bit_cost;
  p.scalars.assign(n + 1, 0.0);

  const double norm = std::sqrt(l2_norm_sq(v.span()));
  if (!std::isfinite(norm)) throw NumericError("qsgd_encode: gradient norm is not finite");
  p.scalars[0] = norm;
  if (norm == 0.0) return p;

  const double levels = static_cast<double>(s);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::abs(v[i]) / norm * levels;
    double level = std::min(std::floor(r), levels);
    const double frac = r - level;
    if (state.rng.uniform() < frac) level = std::min(level + 1.0, levels);
    p.scalars[i + 1] = v[i] < 0.0 ? -level : level;
  }
  return p;
}

GradVector qsgd_decode(const WirePayload& payload, int level) {
  if (payload.kind != CodecKind::kQsgd) throw std::invalid_argument("qsgd_decode: not a QSGD payload");
  if (level < 1) throw std::invalid_argument("qsgd_decode: quantization level must be >= 1");
  if (payload.scalars.size() != payload.length + 1) throw ShapeError("qsgd_decode: malformed payload");
  const double scale = payload.scalars[0] / static_cast<double>(level);
  GradVector out(payload.length);
  for (std::size_t i = 0; i < payload.length; ++i) out[i] = scale * payload.scalars[i + 1];
  return out;
}

WirePayload dense_encode(const GradVector& v) {
  WirePayload p;
  p.kind = CodecKind::kDense;
  p.length = v.size();
  p.scalars = v.values();
  p.bit_cost = traffic_bits(CodecKind::kDense, v.size());
  p.bit_cost_with_indices = p.bit_cost;
  return p;
}

GradVector dense_decode(const WirePayload& payload) {
  if (payload.scalars.size() != payload.length) throw ShapeError("dense_decode: malformed payload");
  return GradVector(payload.scalars);
}

GradVector sparse_decode(const WirePayload& payload) {
  if (payload.indices.size() != payload.scalars.size()) {
    throw ShapeError("sparse_decode: index/value count mismatch");
  }
  GradVector out(payload.length);
  for (std::size_t j = 0; j < payload.indices.size(); ++j) {
    const auto i = payload.indices[j];
    if (i >= payload.length) throw ShapeError("sparse_decode: index out of range");
    out[i] = payload.scalars[j];
  }
  return out;
}

std::uint64_t traffic_bits(CodecKind kind, std::size_t n, std::size_t k) {
  if (n == 0) throw std::invalid_argument("traffic_bits: n must be >= 1");
  switch (kind) {
    case CodecKind::kDense: return 32ULL * n;
    case CodecKind::kA2sgd: return 64ULL;
    case CodecKind::kQsgd: return qsgd_bits(n);
    case CodecKind::kTopK:
    case CodecKind::kGaussianK:
      if (k > n) throw std::invalid_argument("traffic_bits: k > n");
      return 32ULL * k;
  }
  throw std::invalid_argument("traffic_bits: unknown codec kind");
}

}  // namespace a2sgd
