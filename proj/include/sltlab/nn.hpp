// Copyright 2026 The sltlab Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sltlab/common.hpp"
#include "sltlab/linalg.hpp"

namespace sltlab {

enum class Activation { relu, tanh };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

/// Fully connected feed-forward classifier shape. Affine layers only; every
/// layer has weights and biases, hidden layers apply the activation, the
/// output layer feeds a log-softmax.
struct MlpArchitecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_layers;
  std::size_t output_classes = 0;
  Activation activation = Activation::relu;

  /// Number of affine layers (hidden + output).
  std::size_t num_layers() const { return hidden_layers.size() + 1; }
  /// Sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;
  /// Width of the layer's output, layer in [0, num_layers()).
  std::size_t layer_output_dim(std::size_t layer) const;
  std::size_t layer_input_dim(std::size_t layer) const;
  void validate() const;
  std::string label() const;  // e.g. "64-32-10(relu)"
};

/// A mini-batch: row-major inputs (m x input_dim) and class labels.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

/// Architecture plus a flat parameter vector. Evaluation is pure: concurrent
/// read-only use is safe, and parameters change only by replacement.
class MlpModel {
 public:
  explicit MlpModel(MlpArchitecture arch);
  MlpModel(MlpArchitecture arch, ParamVector params);

  /// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
  static MlpModel random_init(const MlpArchitecture& arch, std::uint64_t seed);

  const MlpArchitecture& arch() const { return arch_; }
  const ParamVector& params() const { return params_; }
  std::size_t dim() const { return params_.size(); }
  void set_params(ParamVector params);

  /// Offset of layer's weight block (row-major out x in) in the flat vector;
  /// the bias block (out entries) follows immediately after.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

 private:
  MlpArchitecture arch_;
  ParamVector params_;
  std::vector<std::size_t> offsets_;  // weight offset per layer
};

/// Log-probabilities, one row per example; each row is a log-softmax.
Matrix forward(const MlpModel& model, const Batch& batch);

/// Mean negative log likelihood of the labels under the model.
double nll_loss(const MlpModel& model, const Batch& batch);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Loss and its gradient in one forward/backward pass.
LossAndGrad loss_and_grad(const MlpModel& model, const Batch& batch);

ParamVector grad(const MlpModel& model, const Batch& batch);

/// Row i is the gradient of example i's own negative log likelihood (not
/// scaled by 1/m). The column mean equals grad().
Matrix per_example_grads(const MlpModel& model, const Batch& batch);

/// Hessian-vector product H v of the batch-mean loss, computed as the
/// directional derivative of the gradient along v (one tangent-augmented
/// forward/backward pass; H is never formed).
ParamVector hvp(const MlpModel& model, const Batch& batch,
                const ParamVector& v);

/// Empirical Fisher-vector product (1/m) sum_i (g_i^T v) g_i without forming
/// the d x d matrix.
ParamVector fisher_vector_product(const MlpModel& model, const Batch& batch,
                                  const ParamVector& v);

/// Tr of the empirical Fisher: (1/m) sum_i ||g_i||^2.
double fisher_trace(const MlpModel& model, const Batch& batch);

/// Applies (1/m) G^T G v + ridge * v for a precomputed per-example gradient
/// matrix G (m x d). Shared by the Fisher ops and the NGD solver.
ParamVector fisher_apply(const Matrix& per_example_grads,
                         std::span<const double> v, double ridge = 0.0);

double fisher_trace_of(const Matrix& per_example_grads);

}  // namespace sltlab
