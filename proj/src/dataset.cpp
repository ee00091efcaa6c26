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

#include "a2sgd/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "a2sgd/errors.hpp"
#include "a2sgd/numkit.hpp"

namespace a2sgd {

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw std::out_of_range("Dataset::slice: range exceeds dataset");
  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.truth = truth;
  out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(first * dim),
                      features.begin() + static_cast<std::ptrdiff_t>((first + count) * dim));
  if (!labels.empty()) {
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first),
                      labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  }
  if (!targets.empty()) {
    out.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(first),
                       targets.begin() + static_cast<std::ptrdiff_t>(first + count));
  }
  return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw std::invalid_argument("make_synthetic: dim must be >= 1");
  if (spec.samples == 0) throw std::invalid_argument("make_synthetic: samples must be >= 1");
  Rng rng(spec.seed, 0xda7a);
  Dataset d;
  d.dim = spec.dim;
  d.features.resize(spec.samples * spec.dim);

  switch (spec.kind) {
    case SyntheticKind::kBlobs: {
      if (spec.classes < 2) throw std::invalid_argument("make_synthetic: blobs need >= 2 classes");
      d.num_classes = spec.classes;
      std::vector<double> centers(spec.classes * spec.dim);
      for (auto& c : centers) c = spec.separation * rng.normal();
      d.truth = centers;
      d.labels.resize(spec.samples);
      for (std::size_t i = 0; i < spec.samples; ++i) {
        // Round-robin labels keep the classes balanced.
        const auto label = i % spec.classes;
        d.labels[i] = static_cast<int>(label);
        for (std::size_t j = 0; j < spec.dim; ++j) {
          d.features[i * spec.dim + j] = centers[label * spec.dim + j] + spec.spread * rng.normal();
        }
      }
      break;
    }
    case SyntheticKind::kLinear: {
      d.truth.resize(spec.dim + 1);
      for (auto& w : d.truth) w = rng.normal();
      d.targets.resize(spec.samples);
      for (std::size_t i = 0; i < spec.samples; ++i) {
        double y = d.truth[spec.dim];
        for (std::size_t j = 0; j < spec.dim; ++j) {
          const double x = rng.normal();
          d.features[i * spec.dim + j] = x;
          y += x * d.truth[j];
        }
        d.targets[i] = y + spec.noise * rng.normal();
      }
      break;
    }
    case SyntheticKind::kCenters: {
      d.truth.resize(spec.dim);
      for (auto& c : d.truth) c = rng.normal();
      for (std::size_t i = 0; i < spec.samples; ++i) {
        for (std::size_t j = 0; j < spec.dim; ++j) {
          d.features[i * spec.dim + j] = d.truth[j] + spec.spread * rng.normal();
        }
      }
      // Re-center so the sample mean (the exact minimiser) equals truth.
      for (std::size_t j = 0; j < spec.dim; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < spec.samples; ++i) mean += d.features[i * spec.dim + j];
        mean /= static_cast<double>(spec.samples);
        for (std::size_t i = 0; i < spec.samples; ++i) {
          d.features[i * spec.dim + j] += d.truth[j] - mean;
        }
      }
      break;
    }
  }
  return d;
}

std::span<const std::size_t> shard(std::span<const std::size_t> batch, std::size_t p,
                                   std::size_t workers) {
  if (workers == 0 || p >= workers) throw std::out_of_range("shard: bad worker rank");
  const std::size_t base = batch.size() / workers;
  const std::size_t extra = batch.size() % workers;
  const std::size_t first = p * base + std::min(p, extra);
  const std::size_t count = base + (p < extra ? 1 : 0);
  return batch.subspan(first, count);
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

std::string hex_bytes(std::span<const std::uint8_t> bytes) {
  std::string out;
  char buf[8];
  for (auto b : bytes) {
    std::snprintf(buf, sizeof buf, out.empty() ? "%02x" : " %02x", b);
    out += buf;
  }
  return out;
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes, std::uint32_t expected_magic) {
  if (bytes.size() < 4) {
    throw IdxError("IDX truncated: need 4 header bytes, file has " + std::to_string(bytes.size()));
  }
  IdxTensor t;
  t.magic = read_be32(bytes, 0);
  const bool known = t.magic == 0x00000801 || t.magic == 0x00000803;
  if (!known || (expected_magic != 0 && t.magic != expected_magic)) {
    throw IdxError("IDX bad magic: bytes [" + hex_bytes(bytes.subspan(0, 4)) + "]");
  }
  const std::size_t ndims = bytes[3];
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) {
    throw IdxError("IDX truncated: header needs " + std::to_string(header) + " bytes, file has " +
                   std::to_string(bytes.size()));
  }
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    t.dims.push_back(read_be32(bytes, 4 + 4 * d));
    count *= t.dims.back();
  }
  if (bytes.size() - header < count) {
    throw IdxError("IDX truncated: payload needs " + std::to_string(count) + " bytes, file has " +
                   std::to_string(bytes.size() - header));
  }
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
  return t;
}

IdxTensor read_idx_file(const std::filesystem::path& path, std::uint32_t expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open IDX file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes, expected_magic);
  } catch (const IdxError& e) {
    throw IdxError(path.string() + ": " + e.what());
  }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxTensor img = read_idx_file(images, 0x00000803);
  const IdxTensor lab = read_idx_file(labels, 0x00000801);
  if (img.dims.size() != 3) throw IdxError("IDX images: expected 3 dims (count, rows, cols)");
  if (lab.dims.size() != 1) throw IdxError("IDX labels: expected 1 dim");
  if (img.dims[0] != lab.dims[0]) {
    throw IdxError("IDX dim mismatch: " + std::to_string(img.dims[0]) + " images vs " +
                   std::to_string(lab.dims[0]) + " labels");
  }
  Dataset d;
  d.dim = std::size_t{img.dims[1]} * img.dims[2];
  d.features.resize(img.data.size());
  std::transform(img.data.begin(), img.data.end(), d.features.begin(),
                 [](std::uint8_t px) { return px / 255.0; });
  d.labels.assign(lab.data.begin(), lab.data.end());
  const int max_label = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end());
  d.num_classes = static_cast<std::size_t>(std::max(max_label + 1, 2));
  return d;
}

}  // namespace a2sgd
