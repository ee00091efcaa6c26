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
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace a2sgd {

/// Dense gradient (or weight) vector of 64-bit reals.
///
/// Construction from explicit values rejects NaN/Inf. Element access is
/// unchecked; code that writes through operator[] is expected to keep the
/// values finite and can assert it with check_finite().
class GradVector {
 public:
  GradVector() = default;
  explicit GradVector(std::size_t n, double fill = 0.0);
  explicit GradVector(std::vector<double> values);
  GradVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;
  // Throws NumericError naming the first non-finite index.
  void check_finite(const char* what = "vector") const;

  friend bool operator==(const GradVector&, const GradVector&) = default;

 private:
  std::vector<double> values_;
};

/// Seeded random stream. Two Rng objects built from the same (seed, stream)
/// produce the same sequence; distinct streams are statistically independent.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  double normal();
  // Uniform in [0, 1).
  double uniform();
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double second_moment = 0.0;  // sum of squares, ||v||^2
  std::size_t count = 0;
};

GradVector sample_normal(Rng& rng, std::size_t n, double mu, double sigma);

SummaryStats summarize(std::span<const double> v);
inline SummaryStats summarize(const GradVector& v) { return summarize(v.span()); }

// Left-to-right sum of squares.
double l2_norm_sq(std::span<const double> v);
inline double l2_norm_sq(const GradVector& v) { return l2_norm_sq(v.span()); }

double dot(std::span<const double> a, std::span<const double> b);

// Largest |a_i - b_i| / max(|b_i|, floor).
double max_rel_diff(std::span<const double> a, std::span<const double> b,
                    double floor = 1e-300);

}  // namespace a2sgd
