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
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace a2sgd {

/// Row-major sample matrix with either class labels or real targets.
struct Dataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;  // 0 for regression / center data
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> targets;
  // Known optimum or generating parameters, when the data is synthetic.
  std::vector<double> truth;

  std::size_t size() const noexcept { return dim == 0 ? 0 : features.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  // Rows [first, first + count) as a new dataset.
  Dataset slice(std::size_t first, std::size_t count) const;
};

enum class SyntheticKind {
  kBlobs,    // num_classes gaussian blobs, labels 0..classes-1
  kLinear,   // y = x . w + b + noise, truth = [w, b]
  kCenters,  // points around a center c*, truth = c* (quadratic bowl data)
};

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kBlobs;
  std::size_t samples = 1000;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double spread = 1.0;      // blob / center noise std
  double separation = 4.0;  // blob center scale
  double noise = 0.0;       // linear target noise std
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

// Worker p's part of a global batch: contiguous shards, the first
// (batch % P) workers take one extra row.
std::span<const std::size_t> shard(std::span<const std::size_t> batch, std::size_t p,
                                   std::size_t workers);

/// Decoded IDX tensor (unsigned byte payload only).
struct IdxTensor {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

// Parses a big-endian IDX byte stream. expected_magic = 0 accepts 0x801 and
// 0x803. Throws IdxError.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes, std::uint32_t expected_magic = 0);
IdxTensor read_idx_file(const std::filesystem::path& path, std::uint32_t expected_magic = 0);

// Images (magic 0x00000803) + labels (0x00000801), pixels scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace a2sgd
