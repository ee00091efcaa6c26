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

#include "a2sgd/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2sgd/errors.hpp"

namespace a2sgd {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kQuadratic: return "quadratic";
    case ModelKind::kLinear: return "linear";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kMlp3: return "mlp3";
  }
  throw std::invalid_argument("unknown model kind");
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::kQuadratic, ModelKind::kLinear, ModelKind::kLogistic,
                    ModelKind::kMlp3}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "' (expected quadratic, linear, logistic or mlp3)");
}

double Model::loss(const GradVector& w, const Dataset& data,
                   std::span<const std::size_t> rows) const {
  return loss_and_gradient(w, data, rows).loss;
}

int Model::predict(const GradVector&, std::span<const double>) const {
  throw std::logic_error("predict: model is not a classifier");
}

namespace {

void require_batch(std::span<const std::size_t> rows, const Dataset& data, std::size_t dim) {
  if (rows.empty()) throw std::invalid_argument("gradient: empty batch");
  if (data.dim != dim) {
    throw ShapeError("gradient: dataset dim " + std::to_string(data.dim) + " != model input " +
                     std::to_string(dim));
  }
}

void require_weights(const GradVector& w, std::size_t n) {
  if (w.size() != n) {
    throw ShapeError("weights length " + std::to_string(w.size()) + " != model size " +
                     std::to_string(n));
  }
}

LossGrad checked(double loss, GradVector grad) {
  if (!std::isfinite(loss)) throw NumericError("loss overflowed to a non-finite value");
  grad.check_finite("gradient");
  return {loss, std::move(grad)};
}

void fill_uniform(GradVector& w, std::size_t first, std::size_t count, std::size_t fan_in,
                  Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = first; i < first + count; ++i) w[i] = bound * (2.0 * rng.uniform() - 1.0);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class Quadratic final : public Model {
 public:
  explicit Quadratic(std::size_t dim) : dim_(dim) {}
  ModelKind kind() const override { return ModelKind::kQuadratic; }
  std::size_t num_params() const override { return dim_; }

  GradVector initial_weights(Rng& rng) const override {
    GradVector w(dim_);
    fill_uniform(w, 0, dim_, dim_, rng);
    return w;
  }

  LossGrad loss_and_gradient(const GradVector& w, const Dataset& data,
                             std::span<const std::size_t> rows) const override {
    require_weights(w, dim_);
    require_batch(rows, data, dim_);
    GradVector g(dim_);
    double loss = 0.0;
    for (auto r : rows) {
      const auto c = data.row(r);
      for (std::size_t j = 0; j < dim_; ++j) {
        const double diff = w[j] - c[j];
        loss += 0.5 * diff * diff;
        g[j] += diff;
      }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& x : g) x *= inv;
    return checked(loss * inv, std::move(g));
  }

 private:
  std::size_t dim_;
};

class LinearRegression final : public Model {
 public:
  explicit LinearRegression(std::size_t dim) : dim_(dim) {}
  ModelKind kind() const override { return ModelKind::kLinear; }
  std::size_t num_params() const override { return dim_ + 1; }

  GradVector initial_weights(Rng& rng) const override {
    GradVector w(dim_ + 1);
    fill_uniform(w, 0, dim_, dim_, rng);
    return w;
  }

  LossGrad loss_and_gradient(const GradVector& w, const Dataset& data,
                             std::span<const std::size_t> rows) const override {
    require_weights(w, dim_ + 1);
    require_batch(rows, data, dim_);
    if (data.targets.size() != data.size()) throw ShapeError("linear regression needs targets");
    GradVector g(dim_ + 1);
    double loss = 0.0;
    for (auto r : rows) {
      const auto x = data.row(r);
      double pred = w[dim_];
      for (std::size_t j = 0; j < dim_; ++j) pred += w[j] * x[j];
      const double err = pred - data.targets[r];
      loss += 0.5 * err * err;
      for (std::size_t j = 0; j < dim_; ++j) g[j] += err * x[j];
      g[dim_] += err;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& x : g) x *= inv;
    return checked(loss * inv, std::move(g));
  }

 private:
  std::size_t dim_;
};

class LogisticRegression final : public Model {
 public:
  explicit LogisticRegression(std::size_t dim) : dim_(dim) {}
  ModelKind kind() const override { return ModelKind::kLogistic; }
  std::size_t num_params() const override { return dim_ + 1; }
  bool is_classifier() const override { return true; }

  GradVector initial_weights(Rng& rng) const override {
    GradVector w(dim_ + 1);
    fill_uniform(w, 0, dim_, dim_, rng);
    return w;
  }

  LossGrad loss_and_gradient(const GradVector& w, const Dataset& data,
                             std::span<const std::size_t> rows) const override {
    require_weights(w, dim_ + 1);
    require_batch(rows, data, dim_);
    if (data.labels.size() != data.size()) throw ShapeError("logistic regression needs labels");
    GradVector g(dim_ + 1);
    double loss = 0.0;
    for (auto r : rows) {
      const auto x = data.row(r);
      const int y = data.labels[r];
      if (y != 0 && y != 1) throw std::invalid_argument("logistic regression: labels must be 0/1");
      const double z = logit(w, x);
      loss += softplus(z) - y * z;
      const double err = sigmoid(z) - y;
      for (std::size_t j = 0; j < dim_; ++j) g[j] += err * x[j];
      g[dim_] += err;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& x : g) x *= inv;
    return checked(loss * inv, std::move(g));
  }

  int predict(const GradVector& w, std::span<const double> x) const override {
    return logit(w, x) >= 0.0 ? 1 : 0;
  }

 private:
  double logit(const GradVector& w, std::span<const double> x) const {
    double z = w[dim_];
    for (std::size_t j = 0; j < dim_; ++j) z += w[j] * x[j];
    return z;
  }

  std::size_t dim_;
};

// Parameter layout: W1 (h1 x in), b1, W2 (h2 x h1), b2, W3 (classes x h2), b3.
class Mlp3 final : public Model {
 public:
  explicit Mlp3(const MlpShape& s) : s_(s) {
    if (s.input == 0 || s.hidden1 == 0 || s.hidden2 == 0 || s.classes < 2) {
      throw std::invalid_argument("mlp3: layer widths must be >= 1 and classes >= 2");
    }
    w1_ = 0;
    b1_ = w1_ + s.hidden1 * s.input;
    w2_ = b1_ + s.hidden1;
    b2_ = w2_ + s.hidden2 * s.hidden1;
    w3_ = b2_ + s.hidden2;
    b3_ = w3_ + s.classes * s.hidden2;
    n_ = b3_ + s.classes;
  }

  ModelKind kind() const override { return ModelKind::kMlp3; }
  std::size_t num_params() const override { return n_; }
  bool is_classifier() const override { return true; }

  GradVector initial_weights(Rng& rng) const override {
    GradVector w(n_);
    fill_uniform(w, w1_, s_.hidden1 * s_.input, s_.input, rng);
    fill_uniform(w, b1_, s_.hidden1, s_.input, rng);
    fill_uniform(w, w2_, s_.hidden2 * s_.hidden1, s_.hidden1, rng);
    fill_uniform(w, b2_, s_.hidden2, s_.hidden1, rng);
    fill_uniform(w, w3_, s_.classes * s_.hidden2, s_.hidden2, rng);
    fill_uniform(w, b3_, s_.classes, s_.hidden2, rng);
    return w;
  }

  LossGrad loss_and_gradient(const GradVector& w, const Dataset& data,
                             std::span<const std::size_t> rows) const override {
    require_weights(w, n_);
    require_batch(rows, data, s_.input);
    if (data.labels.size() != data.size()) throw ShapeError("mlp3 needs labels");

    GradVector g(n_);
    Activations a(s_);
    std::vector<double> d1(s_.hidden1), d2(s_.hidden2), d3(s_.classes);
    double loss = 0.0;

    for (auto r : rows) {
      const auto x = data.row(r);
      const int y = data.labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= s_.classes) {
        throw std::invalid_argument("mlp3: label out of range");
      }
      forward(w, x, a);

      // softmax cross-entropy
      const double zmax = *std::max_element(a.logits.begin(), a.logits.end());
      double denom = 0.0;
      for (double z : a.logits) denom += std::exp(z - zmax);
      const double log_denom = zmax + std::log(denom);
      loss += log_denom - a.logits[static_cast<std::size_t>(y)];
      for (std::size_t c = 0; c < s_.classes; ++c) {
        d3[c] = std::exp(a.logits[c] - log_denom) - (static_cast<int>(c) == y ? 1.0 : 0.0);
      }

      // layer 3
      for (std::size_t c = 0; c < s_.classes; ++c) {
        const double* h2 = a.h2.data();
        double* gw = g.data() + w3_ + c * s_.hidden2;
        for (std::size_t k = 0; k < s_.hidden2; ++k) gw[k] += d3[c] * h2[k];
        g[b3_ + c] += d3[c];
      }
      for (std::size_t k = 0; k < s_.hidden2; ++k) {
        double acc = 0.0;
        for (std::size_t c = 0; c < s_.classes; ++c) acc += w[w3_ + c * s_.hidden2 + k] * d3[c];
        d2[k] = a.h2[k] > 0.0 ? acc : 0.0;
      }

      // layer 2
      for (std::size_t k = 0; k < s_.hidden2; ++k) {
        double* gw = g.data() + w2_ + k * s_.hidden1;
        for (std::size_t j = 0; j < s_.hidden1; ++j) gw[j] += d2[k] * a.h1[j];
        g[b2_ + k] += d2[k];
      }
      for (std::size_t j = 0; j < s_.hidden1; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < s_.hidden2; ++k) acc += w[w2_ + k * s_.hidden1 + j] * d2[k];
        d1[j] = a.h1[j] > 0.0 ? acc : 0.0;
      }

      // layer 1
      for (std::size_t j = 0; j < s_.hidden1; ++j) {
        if (d1[j] == 0.0) continue;
        double* gw = g.data() + w1_ + j * s_.input;
        for (std::size_t i = 0; i < s_.input; ++i) gw[i] += d1[j] * x[i];
        g[b1_ + j] += d1[j];
      }
    }

    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& v : g) v *= inv;
    return checked(loss * inv, std::move(g));
  }

  int predict(const GradVector& w, std::span<const double> x) const override {
    require_weights(w, n_);
    Activations a(s_);
    forward(w, x, a);
    return static_cast<int>(std::max_element(a.logits.begin(), a.logits.end()) - a.logits.begin());
  }

 private:
  struct Activations {
    explicit Activations(const MlpShape& s) : h1(s.hidden1), h2(s.hidden2), logits(s.classes) {}
    std::vector<double> h1, h2, logits;
  };

  void forward(const GradVector& w, std::span<const double> x, Activations& a) const {
    for (std::size_t j = 0; j < s_.hidden1; ++j) {
      const double* row = w.data() + w1_ + j * s_.input;
      double z = w[b1_ + j];
      for (std::size_t i = 0; i < s_.input; ++i) z += row[i] * x[i];
      a.h1[j] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t k = 0; k < s_.hidden2; ++k) {
      const double* row = w.data() + w2_ + k * s_.hidden1;
      double z = w[b2_ + k];
      for (std::size_t j = 0; j < s_.hidden1; ++j) z += row[j] * a.h1[j];
      a.h2[k] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t c = 0; c < s_.classes; ++c) {
      const double* row = w.data() + w3_ + c * s_.hidden2;
      double z = w[b3_ + c];
      for (std::size_t k = 0; k < s_.hidden2; ++k) z += row[k] * a.h2[k];
      a.logits[c] = z;
    }
  }

  MlpShape s_;
  std::size_t w1_, b1_, w2_, b2_, w3_, b3_, n_;
};

}  // namespace

std::unique_ptr<Model> make_quadratic(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("quadratic: dim must be >= 1");
  return std::make_unique<Quadratic>(dim);
}

std::unique_ptr<Model> make_linear_regression(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("linear: dim must be >= 1");
  return std::make_unique<LinearRegression>(dim);
}

std::unique_ptr<Model> make_logistic_regression(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("logistic: dim must be >= 1");
  return std::make_unique<LogisticRegression>(dim);
}

std::unique_ptr<Model> make_mlp3(const MlpShape& shape) { return std::make_unique<Mlp3>(shape); }

double accuracy(const Model& model, const GradVector& w, const Dataset& data) {
  if (!model.is_classifier()) throw std::logic_error("accuracy: model is not a classifier");
  if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(w, data.row(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace a2sgd
