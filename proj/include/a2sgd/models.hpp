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
#include <memory>
#include <span>
#include <string_view>

#include "a2sgd/dataset.hpp"
#include "a2sgd/numkit.hpp"

namespace a2sgd {

enum class ModelKind { kQuadratic, kLinear, kLogistic, kMlp3 };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct LossGrad {
  double loss = 0.0;
  GradVector grad;
};

/// Differentiable objective over a dataset. Models are stateless: weights
/// are passed in, so one Model instance serves every simulated worker.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t num_params() const = 0;
  virtual GradVector initial_weights(Rng& rng) const = 0;

  // Mean loss over the given rows and its exact gradient. Throws
  // std::invalid_argument on an empty batch and NumericError if the loss or
  // gradient is not finite.
  virtual LossGrad loss_and_gradient(const GradVector& w, const Dataset& data,
                                     std::span<const std::size_t> rows) const = 0;
  virtual double loss(const GradVector& w, const Dataset& data,
                      std::span<const std::size_t> rows) const;

  virtual bool is_classifier() const { return false; }
  // Predicted class of one sample; classifiers only.
  virtual int predict(const GradVector& w, std::span<const double> x) const;
};

struct MlpShape {
  std::size_t input = 64;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 32;
  std::size_t classes = 10;
};

// 0.5 * mean_i ||w - c_i||^2 over the rows c_i. With a single row at the
// origin this is the bowl 0.5 * ||w||^2.
std::unique_ptr<Model> make_quadratic(std::size_t dim);
// 0.5 * mean (x.w + b - y)^2; weights [w, b].
std::unique_ptr<Model> make_linear_regression(std::size_t dim);
// Binary cross-entropy with labels in {0, 1}; weights [w, b].
std::unique_ptr<Model> make_logistic_regression(std::size_t dim);
// Two ReLU hidden layers and a softmax cross-entropy head.
std::unique_ptr<Model> make_mlp3(const MlpShape& shape);

// Fraction of rows whose predicted class equals the label.
double accuracy(const Model& model, const GradVector& w, const Dataset& data);

}  // namespace a2sgd
