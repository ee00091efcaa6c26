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

// a2sgd: experiment runner for the simulated data-parallel cluster.
//
//   a2sgd run --algo a2sgd --model mlp3 --workers 4 --epochs 2 --out runs/a2sgd
//   a2sgd compare runs/a2sgd runs/dense --out runs
//   a2sgd bench --sizes 100000,1000000 --repeats 5 --out runs
//
// `run` is the default subcommand. Exit codes: 0 success, 2 configuration
// error, 3 runtime or numeric error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "a2sgd/errors.hpp"
#include "a2sgd/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

enum class Kind { kUnsigned, kNumber, kString };

struct Flag {
  const char* name;
  const char* key;
  Kind kind;
  const char* help;
};

constexpr Flag kRunFlags[] = {
    {"--algo", "algo", Kind::kString, "dense | a2sgd | topk | gaussiank | qsgd"},
    {"--model", "model", Kind::kString, "quadratic | linear | logistic | mlp3"},
    {"--workers", "workers", Kind::kUnsigned, "simulated worker count P"},
    {"--batch", "batch", Kind::kUnsigned, "global mini-batch size"},
    {"--epochs", "epochs", Kind::kUnsigned, "passes over the training set"},
    {"--iterations", "iterations", Kind::kUnsigned, "fixed iteration count (overrides epochs)"},
    {"--lr", "lr", Kind::kNumber, "initial learning rate"},
    {"--lr-schedule", "lr_schedule", Kind::kString, "constant | poly | invsqrt"},
    {"--lr-lambda", "lr_lambda", Kind::kNumber, "decay rate of the poly schedule"},
    {"--k-ratio", "k_ratio", Kind::kNumber, "Top-K / Gaussian-K density"},
    {"--qsgd-level", "qsgd_level", Kind::kUnsigned, "QSGD quantization levels"},
    {"--seed", "seed", Kind::kUnsigned, "random seed"},
    {"--alpha", "alpha", Kind::kNumber, "per-collective latency (s)"},
    {"--beta", "beta", Kind::kNumber, "inverse bandwidth (s/bit)"},
    {"--out", "out", Kind::kString, "output directory"},
    {"--samples", "samples", Kind::kUnsigned, "training rows"},
    {"--hist-bins", "hist_bins", Kind::kUnsigned, "gradient histogram bins"},
    {"--idx-images", "idx_images", Kind::kString, "IDX image file (mlp3)"},
    {"--idx-labels", "idx_labels", Kind::kString, "IDX label file (mlp3)"},
};

nlohmann::json flag_value(const Flag& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    switch (flag.kind) {
      case Kind::kString: return text;
      case Kind::kUnsigned: {
        if (text.empty() || text.front() == '-') break;
        const auto v = std::stoull(text, &used);
        if (used == text.size()) return v;
        break;
      }
      case Kind::kNumber: {
        const auto v = std::stod(text, &used);
        if (used == text.size()) return v;
        break;
      }
    }
  } catch (const std::exception&) {
  }
  throw a2sgd::ConfigError(flag.key, "cannot parse '" + text + "'");
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw a2sgd::ConfigError("config", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw a2sgd::ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    std::size_t value = 0;
    try {
      value = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || value == 0) {
      throw a2sgd::ConfigError("sizes", "expected comma-separated positive integers, got '" + text + "'");
    }
    sizes.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || (args.front() != "run" && args.front() != "compare" &&
                       args.front() != "bench" && args.front() != "-h" && args.front() != "--help")) {
    args.insert(args.begin(), "run");
  }

  CLI::App app{"Two-level gradient averaging on a simulated data-parallel cluster"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one configuration and write run.json, ledger.csv, hist/");
  std::string config_path;
  run->add_option("--config", config_path, "JSON config file; flags override its keys");
  std::vector<std::string> flag_text(std::size(kRunFlags));
  for (std::size_t i = 0; i < std::size(kRunFlags); ++i) {
    run->add_option(kRunFlags[i].name, flag_text[i], kRunFlags[i].help);
  }

  auto* compare = app.add_subcommand("compare", "tabulate finished runs into compare.csv");
  std::vector<std::string> run_dirs;
  std::string compare_out = ".";
  compare->add_option("runs", run_dirs, "run directories (each holding run.json)")->required();
  compare->add_option("--out", compare_out, "directory for compare.csv");

  auto* bench = app.add_subcommand("bench", "time each codec's encode and write bench.csv");
  std::string sizes_text = "100000,1000000,10000000";
  std::size_t repeats = 5;
  std::uint64_t bench_seed = 0;
  std::string bench_out = ".";
  bench->add_option("--sizes", sizes_text, "ascending gradient lengths, comma-separated");
  bench->add_option("--repeats", repeats, "timed encodes per (codec, n)");
  bench->add_option("--seed", bench_seed, "random seed");
  bench->add_option("--out", bench_out, "directory for bench.csv");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      nlohmann::json j = config_path.empty() ? nlohmann::json::object() : load_config_file(config_path);
      if (!j.is_object()) throw a2sgd::ConfigError("config", "expected a JSON object");
      for (std::size_t i = 0; i < std::size(kRunFlags); ++i) {
        if (run->count(kRunFlags[i].name) > 0) j[kRunFlags[i].key] = flag_value(kRunFlags[i], flag_text[i]);
      }
      const auto config = a2sgd::ExperimentConfig::from_json(j);
      const auto result = a2sgd::run_experiment(config);
      std::cout << "algo=" << a2sgd::to_string(config.algo) << " workers=" << config.workers
                << " iterations=" << result.iterations << " params=" << result.num_params
                << " bits/worker=" << result.bits_per_worker;
      if (!result.loss.empty()) std::cout << " final_loss=" << result.loss.back();
      if (!result.accuracy.empty()) std::cout << " final_acc=" << result.accuracy.back();
      std::cout << "\nwrote " << config.out << "/run.json\n";
    } else if (*compare) {
      if (run_dirs.size() < 2) throw a2sgd::ConfigError("runs", "compare needs at least two run directories");
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      const auto rows = a2sgd::compare_runs(dirs);
      std::ostringstream csv;
      a2sgd::write_compare_csv(csv, rows);
      write_file(std::filesystem::path(compare_out) / "compare.csv", csv.str());
      std::cout << csv.str();
    } else if (*bench) {
      if (repeats == 0) throw a2sgd::ConfigError("repeats", "must be >= 1");
      const auto sizes = parse_sizes(sizes_text);
      if (!std::is_sorted(sizes.begin(), sizes.end())) throw a2sgd::ConfigError("sizes", "must be ascending");
      const auto rows = a2sgd::bench_codecs(sizes, repeats, bench_seed);
      std::ostringstream csv;
      a2sgd::write_bench_csv(csv, rows);
      write_file(std::filesystem::path(bench_out) / "bench.csv", csv.str());
      std::cout << csv.str();
    }
  } catch (const a2sgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
