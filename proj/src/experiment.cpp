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

#include "a2sgd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "a2sgd/errors.hpp"

namespace a2sgd {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "algo",       "model", "workers", "batch", "epochs",   "iterations", "lr",
      "lr_schedule", "lr_lambda", "k_ratio", "qsgd_level", "seed", "alpha", "beta",
      "out",        "samples", "hist_bins", "idx_images", "idx_labels"};
  return keys;
}

std::uint64_t get_unsigned(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(key, "expected a non-negative integer, got " + v.dump());
  }
  return v.get<std::uint64_t>();
}

double get_number(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(key, "expected a number, got " + v.dump());
  return v.get<double>();
}

std::string get_string(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(key, "expected a string, got " + v.dump());
  return v.get<std::string>();
}

template <typename Parse>
auto get_enum(const json& j, const std::string& key, Parse&& parse) {
  const std::string name = get_string(j, key);
  try {
    return parse(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) throw ConfigError(key, "unknown configuration key");
  }
  ExperimentConfig c;
  if (j.contains("algo")) c.algo = get_enum(j, "algo", parse_codec_kind);
  if (j.contains("model")) c.model = get_enum(j, "model", parse_model_kind);
  if (j.contains("workers")) c.workers = get_unsigned(j, "workers");
  if (j.contains("batch")) c.batch = get_unsigned(j, "batch");
  if (j.contains("epochs")) c.epochs = get_unsigned(j, "epochs");
  if (j.contains("iterations") && !j.at("iterations").is_null()) {
    c.iterations = get_unsigned(j, "iterations");
  }
  if (j.contains("lr")) c.lr = get_number(j, "lr");
  if (j.contains("lr_schedule")) c.lr_schedule = get_enum(j, "lr_schedule", parse_lr_kind);
  if (j.contains("lr_lambda")) c.lr_lambda = get_number(j, "lr_lambda");
  if (j.contains("k_ratio")) c.k_ratio = get_number(j, "k_ratio");
  if (j.contains("qsgd_level")) {
    const auto level = get_unsigned(j, "qsgd_level");
    if (level > 1u << 20) throw ConfigError("qsgd_level", "unreasonably large");
    c.qsgd_level = static_cast<int>(level);
  }
  if (j.contains("seed")) c.seed = get_unsigned(j, "seed");
  if (j.contains("alpha")) c.alpha = get_number(j, "alpha");
  if (j.contains("beta")) c.beta = get_number(j, "beta");
  if (j.contains("out")) c.out = get_string(j, "out");
  if (j.contains("samples")) c.samples = get_unsigned(j, "samples");
  if (j.contains("hist_bins")) c.hist_bins = get_unsigned(j, "hist_bins");
  if (j.contains("idx_images")) c.idx_images = get_string(j, "idx_images");
  if (j.contains("idx_labels")) c.idx_labels = get_string(j, "idx_labels");
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j{{"algo", std::string(to_string(algo))},
         {"model", std::string(to_string(model))},
         {"workers", workers},
         {"batch", batch},
         {"epochs", epochs},
         {"lr", lr},
         {"lr_schedule", std::string(to_string(lr_schedule))},
         {"lr_lambda", lr_lambda},
         {"k_ratio", k_ratio},
         {"qsgd_level", qsgd_level},
         {"seed", seed},
         {"alpha", alpha},
         {"beta", beta},
         {"out", out},
         {"samples", samples},
         {"hist_bins", hist_bins},
         {"idx_images", idx_images},
         {"idx_labels", idx_labels}};
  j["iterations"] = iterations ? json(*iterations) : json(nullptr);
  return j;
}

void ExperimentConfig::validate() const {
  if (workers == 0) throw ConfigError("workers", "must be >= 1");
  if (batch == 0) throw ConfigError("batch", "must be >= 1");
  if (batch < workers) throw ConfigError("batch", "global batch must be >= workers");
  if (epochs == 0 && !iterations) throw ConfigError("epochs", "must be >= 1");
  if (iterations && *iterations == 0) throw ConfigError("iterations", "must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr", "must be > 0");
  if (!(lr_lambda >= 0.0) || !std::isfinite(lr_lambda)) throw ConfigError("lr_lambda", "must be >= 0");
  if (!(k_ratio > 0.0 && k_ratio < 1.0)) throw ConfigError("k_ratio", "must be in (0, 1)");
  if (qsgd_level < 1) throw ConfigError("qsgd_level", "must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be >= 0");
  if (out.empty()) throw ConfigError("out", "must not be empty");
  if (samples < batch && idx_images.empty()) throw ConfigError("samples", "must be >= batch");
  if (hist_bins == 0) throw ConfigError("hist_bins", "must be >= 1");
  if (idx_images.empty() != idx_labels.empty()) {
    throw ConfigError(idx_images.empty() ? "idx_images" : "idx_labels",
                      "IDX images and labels must be given together");
  }
  if (!idx_images.empty() && model != ModelKind::kMlp3) {
    throw ConfigError("model", "IDX data is only supported with mlp3");
  }
}

ExperimentData make_experiment_data(const ExperimentConfig& config) {
  const std::size_t eval_rows = std::max<std::size_t>(1, config.samples / 5);
  if (!config.idx_images.empty()) {
    Dataset all = load_idx(config.idx_images, config.idx_labels);
    const std::size_t train_rows = std::min(config.samples, all.size());
    const std::size_t rest = all.size() - train_rows;
    ExperimentData d{all.slice(0, train_rows), {}};
    d.eval = rest > 0 ? all.slice(train_rows, std::min(rest, eval_rows)) : d.train;
    return d;
  }

  SyntheticSpec spec;
  spec.samples = config.samples + eval_rows;
  spec.seed = config.seed;
  switch (config.model) {
    case ModelKind::kMlp3:
      spec.kind = SyntheticKind::kBlobs;
      spec.dim = 64;
      spec.classes = 10;
      spec.separation = 1.0;
      spec.spread = 2.0;
      break;
    case ModelKind::kLogistic:
      spec.kind = SyntheticKind::kBlobs;
      spec.dim = 16;
      spec.classes = 2;
      spec.separation = 1.0;
      spec.spread = 1.0;
      break;
    case ModelKind::kLinear:
      spec.kind = SyntheticKind::kLinear;
      spec.dim = 16;
      spec.noise = 0.1;
      break;
    case ModelKind::kQuadratic:
      spec.kind = SyntheticKind::kCenters;
      spec.dim = 16;
      spec.spread = 1.0;
      break;
  }
  Dataset all = make_synthetic(spec);
  return {all.slice(0, config.samples), all.slice(config.samples, eval_rows)};
}

std::unique_ptr<Model> make_experiment_model(const ExperimentConfig& config, const Dataset& data) {
  switch (config.model) {
    case ModelKind::kQuadratic: return make_quadratic(data.dim);
    case ModelKind::kLinear: return make_linear_regression(data.dim);
    case ModelKind::kLogistic: return make_logistic_regression(data.dim);
    case ModelKind::kMlp3:
      return make_mlp3(MlpShape{data.dim, 32, 32, std::max<std::size_t>(data.num_classes, 2)});
  }
  throw std::invalid_argument("unknown model kind");
}

TrainConfig make_train_config(const ExperimentConfig& config) {
  TrainConfig t;
  t.algo = config.algo;
  t.workers = config.workers;
  t.batch = config.batch;
  t.epochs = config.epochs;
  t.iterations = config.iterations;
  t.lr = LrSchedule{config.lr_schedule, config.lr, config.lr_lambda, 0};
  t.codec.k_ratio = config.k_ratio;
  t.codec.qsgd_level = config.qsgd_level;
  t.seed = config.seed;
  t.cost = CostModel{config.alpha, config.beta};
  t.record_histograms = true;
  t.hist_bins = config.hist_bins;
  return t;
}

json run_json(const ExperimentConfig& config, const RunResult& result) {
  return json{{"config", config.to_json()},
              {"loss", result.loss},
              {"acc", result.accuracy},
              {"iterations", result.iterations},
              {"num_params", result.num_params},
              {"bits_total", result.bits_total},
              {"bits_per_worker", result.bits_per_worker},
              {"bits_with_indices_per_worker", result.bits_with_indices_per_worker},
              {"modeled_comm_s", result.modeled_comm_s},
              {"encode_s", result.encode_s},
              {"wall_s", result.wall_s}};
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ExperimentData data = make_experiment_data(config);
  const auto model = make_experiment_model(config, data.train);
  RunResult result = train(*model, data.train, make_train_config(config), &data.eval);

  const std::filesystem::path out(config.out);
  std::filesystem::create_directories(out / "hist");
  write_text(out / "run.json", run_json(config, result).dump(2) + "\n");

  std::ostringstream ledger;
  result.ledger.write_csv(ledger);
  write_text(out / "ledger.csv", ledger.str());

  json manifest = json::array();
  for (const auto& h : result.histograms) {
    std::ostringstream csv;
    write_histogram_csv(csv, h);
    const std::string file = std::to_string(h.iter) + ".csv";
    write_text(out / "hist" / file, csv.str());
    manifest.push_back({{"iter", h.iter}, {"file", file}, {"bins", h.counts.size()}});
  }
  write_text(out / "hist" / "manifest.json", json{{"worker", 0}, {"histograms", manifest}}.dump(2) + "\n");
  return result;
}

std::vector<CompareRow> compare_runs(std::span<const std::filesystem::path> run_dirs) {
  if (run_dirs.size() < 2) throw std::invalid_argument("compare: need at least two runs");
  std::vector<CompareRow> rows;
  for (const auto& dir : run_dirs) {
    const auto path = dir / "run.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("compare: missing run file " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("compare: cannot parse " + path.string() + ": " + e.what());
    }
    CompareRow r;
    r.run = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    r.algo = j.at("config").at("algo").get<std::string>();
    const auto& loss = j.at("loss");
    r.final_loss = loss.empty() ? std::numeric_limits<double>::quiet_NaN() : loss.back().get<double>();
    const auto& acc = j.at("acc");
    r.final_accuracy = acc.empty() ? std::numeric_limits<double>::quiet_NaN() : acc.back().get<double>();
    r.bits_per_worker = j.at("bits_per_worker").get<std::uint64_t>();
    r.modeled_comm_s = j.at("modeled_comm_s").get<double>();
    r.encode_s = j.at("encode_s").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_compare_csv(std::ostream& os, std::span<const CompareRow> rows) {
  const auto precision = os.precision();
  os << "run,algo,final_loss,final_accuracy,bits_per_worker,modeled_comm_s,encode_s\n"
     << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.run << ',' << r.algo << ',' << r.final_loss << ',' << r.final_accuracy << ','
       << r.bits_per_worker << ',' << r.modeled_comm_s << ',' << r.encode_s << '\n';
  }
  os.precision(precision);
}

std::vector<BenchRow> bench_codecs(std::span<const std::size_t> sizes, std::size_t repeats,
                                   std::uint64_t seed, std::span<const CodecKind> codecs) {
  if (repeats == 0) throw std::invalid_argument("bench_codecs: repeats must be >= 1");
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw std::invalid_argument("bench_codecs: sizes must be ascending");
  }
  static constexpr CodecKind kAll[] = {CodecKind::kDense, CodecKind::kA2sgd, CodecKind::kTopK,
                                       CodecKind::kGaussianK, CodecKind::kQsgd};
  if (codecs.empty()) codecs = kAll;

  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    if (n == 0) throw std::invalid_argument("bench_codecs: sizes must be >= 1");
    Rng rng(seed, n);
    const GradVector v = sample_normal(rng, n, 0.0, 1.0);
    for (CodecKind kind : codecs) {
      CodecState state(CodecParams{}, Rng(seed, 0xbe7c));
      const auto encode = [&] {
        switch (kind) {
          case CodecKind::kDense: return dense_encode(v);
          case CodecKind::kA2sgd: return a2sgd_encode(v, state);
          case CodecKind::kTopK: return topk_encode(v, state);
          case CodecKind::kGaussianK: return gaussian_k_encode(v, state);
          case CodecKind::kQsgd: return qsgd_encode(v, state);
        }
        throw std::invalid_argument("bench_codecs: unknown codec");
      };
      encode();  // warm-up: sizes the state buffers
      std::vector<double> times;
      for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const WirePayload p = encode();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        if (p.length != n) throw std::logic_error("bench_codecs: payload length mismatch");
      }
      std::sort(times.begin(), times.end());
      const std::size_t mid = times.size() / 2;
      const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
      rows.push_back({kind, n, median});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  const auto precision = os.precision();
  os << "codec,n,median_s\n" << std::setprecision(10);
  for (const auto& r : rows) os << to_string(r.codec) << ',' << r.n << ',' << r.median_s << '\n';
  os.precision(precision);
}

double loglog_slope(std::span<const BenchRow> rows, CodecKind codec) {
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.codec != codec) continue;
    if (!(r.median_s > 0.0)) throw std::invalid_argument("loglog_slope: non-positive timing");
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(std::log(r.median_s));
  }
  if (xs.size() < 2) throw std::invalid_argument("loglog_slope: need at least two sizes");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace a2sgd
