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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "a2sgd/codecs.hpp"
#include "a2sgd/dataset.hpp"
#include "a2sgd/models.hpp"
#include "a2sgd/train.hpp"

namespace a2sgd {

/// One training run as configured from a JSON file and/or flags. JSON keys are
/// snake_case; each has a --kebab-case flag.
struct ExperimentConfig {
  CodecKind algo = CodecKind::kA2sgd;
  ModelKind model = ModelKind::kMlp3;
  std::size_t workers = 4;
  std::size_t batch = 128;
  std::size_t epochs = 1;
  std::optional<std::size_t> iterations;
  double lr = 0.01;
  LrKind lr_schedule = LrKind::kConstant;
  double lr_lambda = 0.0;
  double k_ratio = 0.001;
  int qsgd_level = 4;
  std::uint64_t seed = 0;
  double alpha = 1e-5;
  double beta = 1e-11;
  std::string out = "out";
  std::size_t samples = 10000;  // synthetic training rows
  std::size_t hist_bins = 101;
  std::string idx_images;  // optional IDX training data (mlp3 / logistic)
  std::string idx_labels;

  // Throws ConfigError naming the first invalid field.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct ExperimentData {
  Dataset train;
  Dataset eval;
};

// Synthetic data matched to the model kind, or the IDX files when given.
ExperimentData make_experiment_data(const ExperimentConfig& config);
std::unique_ptr<Model> make_experiment_model(const ExperimentConfig& config, const Dataset& data);
TrainConfig make_train_config(const ExperimentConfig& config);

// Trains and writes run.json, ledger.csv, hist/<iter>.csv and
// hist/manifest.json under config.out.
RunResult run_experiment(const ExperimentConfig& config);

nlohmann::json run_json(const ExperimentConfig& config, const RunResult& result);

struct CompareRow {
  std::string run;
  std::string algo;
  double final_loss = 0.0;
  double final_accuracy = 0.0;  // NaN for regression models
  std::uint64_t bits_per_worker = 0;
  double modeled_comm_s = 0.0;
  double encode_s = 0.0;
};

// Reads <dir>/run.json for each run; needs at least two.
std::vector<CompareRow> compare_runs(std::span<const std::filesystem::path> run_dirs);
void write_compare_csv(std::ostream& os, std::span<const CompareRow> rows);

struct BenchRow {
  CodecKind codec = CodecKind::kDense;
  std::size_t n = 0;
  double median_s = 0.0;
};

// Median wall time of one encode per (codec, n) on standard-normal input.
std::vector<BenchRow> bench_codecs(std::span<const std::size_t> sizes, std::size_t repeats,
                                   std::uint64_t seed = 0,
                                   std::span<const CodecKind> codecs = {});
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);

// Least-squares slope of log(median_s) against log(n) for one codec.
double loglog_slope(std::span<const BenchRow> rows, CodecKind codec);

}  // namespace a2sgd
