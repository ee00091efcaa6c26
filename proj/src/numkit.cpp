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

#include "a2sgd/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "a2sgd/errors.hpp"

namespace a2sgd {

GradVector::GradVector(std::size_t n, double fill) : values_(n, fill) {
  if (!std::isfinite(fill)) throw NumericError("GradVector: non-finite fill value");
}

GradVector::GradVector(std::vector<double> values) : values_(std::move(values)) {
  check_finite("GradVector");
}

GradVector::GradVector(std::initializer_list<double> values) : values_(values) {
  check_finite("GradVector");
}

bool GradVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double x) { return std::isfinite(x); });
}

void GradVector::check_finite(const char* what) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError(std::string(what) + ": non-finite value at index " +
                         std::to_string(i));
    }
  }
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5a2dU};
  engine_.seed(seq);
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

GradVector sample_normal(Rng& rng, std::size_t n, double mu, double sigma) {
  if (n == 0) throw std::invalid_argument("sample_normal: n must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sample_normal: sigma must be finite and >= 0");
  }
  if (!std::isfinite(mu)) throw std::invalid_argument("sample_normal: mu must be finite");
  GradVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mu + sigma * rng.normal();
  return out;
}

SummaryStats summarize(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("summarize: empty input");
  const auto n = static_cast<double>(v.size());
  double sum = 0.0;
  double sq = 0.0;
  for (double x : v) {
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  double centered = 0.0;
  for (double x : v) centered += (x - mean) * (x - mean);
  return SummaryStats{mean, centered / n, sq, v.size()};
}

double l2_norm_sq(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("l2_norm_sq: empty input");
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_rel_diff(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("max_rel_diff: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(b[i]), floor);
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace a2sgd
