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

#include "sltlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sltlab {

namespace {

struct Dims {
  std::size_t in;
  std::size_t out;
  std::size_t w_off;
  std::size_t b_off;
};

std::vector<Dims> layer_dims(const MlpArchitecture& arch) {
  std::vector<Dims> dims(arch.num_layers());
  std::size_t off = 0;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    dims[l].in = arch.layer_input_dim(l);
    dims[l].out = arch.layer_output_dim(l);
    dims[l].w_off = off;
    dims[l].b_off = off + dims[l].in * dims[l].out;
    off = dims[l].b_off + dims[l].out;
  }
  return dims;
}

// Activation derivatives expressed through the activation *value*, which both
// supported nonlinearities allow: relu'(z)=[a>0], tanh'(z)=1-a^2.
inline double act_value(Activation act, double z) {
  return act == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}
inline double act_deriv(Activation act, double a) {
  return act == Activation::relu ? (a > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
}
inline double act_second(Activation act, double a) {
  return act == Activation::relu ? 0.0 : -2.0 * a * (1.0 - a * a);
}

// out (m x rows) = in (m x cols) * W^T + b, W row-major rows x cols.
void affine(const Matrix& in, const double* w, const double* b,
            std::size_t rows, Matrix& out) {
  const std::size_t m = in.rows;
  const std::size_t cols = in.cols;
  out = Matrix(m, rows);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = in.data.data() + i * cols;
    double* y = out.data.data() + i * rows;
    for (std::size_t j = 0; j < rows; ++j) {
      const double* wj = w + j * cols;
      double acc = b[j];
      for (std::size_t k = 0; k < cols; ++k) acc += wj[k] * x[k];
      y[j] = acc;
    }
  }
}

// out (m x cols) = delta (m x rows) * W, i.e. backprop through the affine map.
void affine_back(const Matrix& delta, const double* w, std::size_t rows,
                 std::size_t cols, Matrix& out) {
  const std::size_t m = delta.rows;
  out = Matrix(m, cols);
  for (std::size_t i = 0; i < m; ++i) {
    const double* d = delta.data.data() + i * rows;
    double* y = out.data.data() + i * cols;
    for (std::size_t j = 0; j < rows; ++j) {
      const double* wj = w + j * cols;
      const double dj = d[j];
      if (dj == 0.0) continue;
      for (std::size_t k = 0; k < cols; ++k) y[k] += dj * wj[k];
    }
  }
}

struct ForwardCache {
  std::vector<Matrix> acts;  // acts[0] = inputs, acts[1..L-1] hidden outputs
  Matrix logprobs;           // m x C
  Matrix probs;              // m x C
};

void check_batch(const MlpArchitecture& arch, const Batch& batch) {
  if (batch.inputs.cols != arch.input_dim) {
    throw ConfigError("batch input dim " + std::to_string(batch.inputs.cols) +
                      " does not match architecture input dim " +
                      std::to_string(arch.input_dim));
  }
  if (batch.inputs.rows != batch.labels.size()) {
    throw ConfigError("batch has " + std::to_string(batch.inputs.rows) +
                      " input rows but " + std::to_string(batch.labels.size()) +
                      " labels");
  }
  if (batch.size() == 0) throw ConfigError("batch is empty");
  const int c = static_cast<int>(arch.output_classes);
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    if (batch.labels[i] < 0 || batch.labels[i] >= c) {
      throw ConfigError("label " + std::to_string(batch.labels[i]) +
                        " at row " + std::to_string(i) +
                        " outside [0, " + std::to_string(c) + ")");
    }
  }
}

void run_forward(const MlpModel& model, const Batch& batch,
                 const std::vector<Dims>& dims, ForwardCache& cache) {
  const auto& arch = model.arch();
  const double* p = model.params().data();
  const std::size_t nlayers = dims.size();
  cache.acts.assign(1, batch.inputs);
  cache.acts.reserve(nlayers);
  Matrix pre;
  for (std::size_t l = 0; l < nlayers; ++l) {
    affine(cache.acts[l], p + dims[l].w_off, p + dims[l].b_off, dims[l].out,
           pre);
    if (l + 1 < nlayers) {
      Matrix a(pre.rows, pre.cols);
      for (std::size_t t = 0; t < pre.data.size(); ++t)
        a.data[t] = act_value(arch.activation, pre.data[t]);
      cache.acts.push_back(std::move(a));
    } else {
      // Max-subtracted log-softmax keeps the exponentials in range.
      const std::size_t m = pre.rows, c = pre.cols;
      cache.logprobs = Matrix(m, c);
      cache.probs = Matrix(m, c);
      for (std::size_t i = 0; i < m; ++i) {
        const double* z = pre.data.data() + i * c;
        double* lp = cache.logprobs.data.data() + i * c;
        double* pr = cache.probs.data.data() + i * c;
        double zmax = z[0];
        for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
        const double logz = std::log(sum);
        for (std::size_t j = 0; j < c; ++j) {
          lp[j] = z[j] - zmax - logz;
          pr[j] = std::exp(lp[j]);
        }
      }
    }
  }
}

// dNLL_i/dlogits = probs - onehot(label), one row per example, unscaled.
Matrix output_delta(const ForwardCache& cache, const std::vector<int>& labels) {
  Matrix delta = cache.probs;
  for (std::size_t i = 0; i < delta.rows; ++i)
    delta.at(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  return delta;
}

// Accumulates the mean-loss gradient blocks for one layer into g.
void accumulate_layer_grad(const Matrix& delta, const Matrix& acts,
                           const Dims& d, double inv_m, double* g) {
  const std::size_t m = delta.rows;
  double* gw = g + d.w_off;
  double* gb = g + d.b_off;
  for (std::size_t i = 0; i < m; ++i) {
    const double* dl = delta.data.data() + i * d.out;
    const double* a = acts.data.data() + i * d.in;
    for (std::size_t j = 0; j < d.out; ++j) {
      const double dj = dl[j];
      if (dj == 0.0) continue;
      double* gwj = gw + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) gwj[k] += dj * a[k];
      gb[j] += dj;
    }
  }
  for (std::size_t j = 0; j < d.out; ++j) {
    double* gwj = gw + j * d.in;
    for (std::size_t k = 0; k < d.in; ++k) gwj[k] *= inv_m;
    gb[j] *= inv_m;
  }
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "' (want relu or tanh)");
}

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

std::size_t MlpArchitecture::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < num_layers(); ++l)
    total += (layer_input_dim(l) + 1) * layer_output_dim(l);
  return total;
}

std::size_t MlpArchitecture::layer_output_dim(std::size_t layer) const {
  return layer < hidden_layers.size() ? hidden_layers[layer] : output_classes;
}

std::size_t MlpArchitecture::layer_input_dim(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_layers[layer - 1];
}

void MlpArchitecture::validate() const {
  if (input_dim == 0) throw ConfigError("architecture input_dim must be > 0");
  if (output_classes < 2)
    throw ConfigError("architecture needs at least 2 output classes");
  for (std::size_t w : hidden_layers)
    if (w == 0) throw ConfigError("hidden layer width must be > 0");
}

std::string MlpArchitecture::label() const {
  std::ostringstream os;
  os << input_dim;
  for (std::size_t w : hidden_layers) os << '-' << w;
  os << '-' << output_classes << '(' << to_string(activation) << ')';
  return os.str();
}

MlpModel::MlpModel(MlpArchitecture arch)
    : MlpModel(std::move(arch), ParamVector()) {}

MlpModel::MlpModel(MlpArchitecture arch, ParamVector params)
    : arch_(std::move(arch)) {
  arch_.validate();
  const auto dims = layer_dims(arch_);
  offsets_.resize(dims.size());
  for (std::size_t l = 0; l < dims.size(); ++l) offsets_[l] = dims[l].w_off;
  if (params.empty()) params.assign(arch_.param_count(), 0.0);
  set_params(std::move(params));
}

void MlpModel::set_params(ParamVector params) {
  if (params.size() != arch_.param_count()) {
    throw ConfigError("parameter vector has " + std::to_string(params.size()) +
                      " entries, architecture needs " +
                      std::to_string(arch_.param_count()));
  }
  check_finite(params, "model parameters");
  params_ = std::move(params);
}

std::size_t MlpModel::weight_offset(std::size_t layer) const {
  return offsets_.at(layer);
}

std::size_t MlpModel::bias_offset(std::size_t layer) const {
  return offsets_.at(layer) +
         arch_.layer_input_dim(layer) * arch_.layer_output_dim(layer);
}

MlpModel MlpModel::random_init(const MlpArchitecture& arch,
                               std::uint64_t seed) {
  arch.validate();
  ParamVector params(arch.param_count(), 0.0);
  auto rng = make_rng(seed);
  const auto dims = layer_dims(arch);
  for (const auto& d : dims) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(d.in + d.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t t = 0; t < d.in * d.out; ++t) params[d.w_off + t] = u(rng);
    // biases stay zero
  }
  return MlpModel(arch, std::move(params));
}

Matrix forward(const MlpModel& model, const Batch& batch) {
  check_batch(model.arch(), batch);
  ForwardCache cache;
  run_forward(model, batch, layer_dims(model.arch()), cache);
  return std::move(cache.logprobs);
}

double nll_loss(const MlpModel& model, const Batch& batch) {
  const Matrix lp = forward(model, batch);
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.rows; ++i)
    acc -= lp.at(i, static_cast<std::size_t>(batch.labels[i]));
  const double loss = acc / static_cast<double>(lp.rows);
  if (!std::isfinite(loss)) throw NumericError("loss is not finite");
  return loss;
}

LossAndGrad loss_and_grad(const MlpModel& model, const Batch& batch) {
  check_batch(model.arch(), batch);
  const auto dims = layer_dims(model.arch());
  ForwardCache cache;
  run_forward(model, batch, dims, cache);

  LossAndGrad out;
  const std::size_t m = batch.size();
  for (std::size_t i = 0; i < m; ++i)
    out.loss -= cache.logprobs.at(i, static_cast<std::size_t>(batch.labels[i]));
  out.loss /= static_cast<double>(m);
  if (!std::isfinite(out.loss)) throw NumericError("loss is not finite");

  out.grad.assign(model.dim(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix delta = output_delta(cache, batch.labels);
  const double* p = model.params().data();
  for (std::size_t l = dims.size(); l-- > 0;) {
    accumulate_layer_grad(delta, cache.acts[l], dims[l], inv_m,
                          out.grad.data());
    if (l > 0) {
      Matrix prev;
      affine_back(delta, p + dims[l].w_off, dims[l].out, dims[l].in, prev);
      const Matrix& a = cache.acts[l];
      for (std::size_t t = 0; t < prev.data.size(); ++t)
        prev.data[t] *= act_deriv(model.arch().activation, a.data[t]);
      delta = std::move(prev);
    }
  }
  check_finite(out.grad, "loss gradient");
  return out;
}

ParamVector grad(const MlpModel& model, const Batch& batch) {
  return loss_and_grad(model, batch).grad;
}

Matrix per_example_grads(const MlpModel& model, const Batch& batch) {
  check_batch(model.arch(), batch);
  const auto dims = layer_dims(model.arch());
  ForwardCache cache;
  run_forward(model, batch, dims, cache);

  const std::size_t m = batch.size();
  Matrix g(m, model.dim());
  Matrix delta = output_delta(cache, batch.labels);
  const double* p = model.params().data();
  for (std::size_t l = dims.size(); l-- > 0;) {
    const Dims& d = dims[l];
    const Matrix& a = cache.acts[l];
    for (std::size_t i = 0; i < m; ++i) {
      const double* dl = delta.data.data() + i * d.out;
      const double* ai = a.data.data() + i * d.in;
      double* gw = g.data.data() + i * g.cols + d.w_off;
      double* gb = g.data.data() + i * g.cols + d.b_off;
      for (std::size_t j = 0; j < d.out; ++j) {
        const double dj = dl[j];
        gb[j] = dj;
        double* gwj = gw + j * d.in;
        if (dj == 0.0) {
          std::fill(gwj, gwj + d.in, 0.0);
        } else {
          for (std::size_t k = 0; k < d.in; ++k) gwj[k] = dj * ai[k];
        }
      }
    }
    if (l > 0) {
      Matrix prev;
      affine_back(delta, p + dims[l].w_off, d.out, d.in, prev);
      for (std::size_t t = 0; t < prev.data.size(); ++t)
        prev.data[t] *= act_deriv(model.arch().activation, a.data[t]);
      delta = std::move(prev);
    }
  }
  check_finite(g.data, "per-example gradients");
  return g;
}

ParamVector hvp(const MlpModel& model, const Batch& batch,
                const ParamVector& v) {
  check_batch(model.arch(), batch);
  if (v.size() != model.dim()) {
    throw ConfigError("hvp direction has " + std::to_string(v.size()) +
                      " entries, model has " + std::to_string(model.dim()));
  }
  const auto& arch = model.arch();
  const auto dims = layer_dims(arch);
  ForwardCache cache;
  run_forward(model, batch, dims, cache);

  const std::size_t m = batch.size();
  const std::size_t nlayers = dims.size();
  const double* p = model.params().data();
  const double* t = v.data();

  // Tangent-augmented forward pass: Rz_l = V_l a_l + W_l Ra_l + c_l, hidden
  // Ra_{l+1} = phi'(z_l) . Rz_l. Rpre[l] is kept because the backward pass
  // needs the raw pre-activation tangent where phi'' != 0.
  std::vector<Matrix> racts(1, Matrix(m, dims[0].in));  // R of inputs = 0
  std::vector<Matrix> rpre(nlayers);
  for (std::size_t l = 0; l < nlayers; ++l) {
    Matrix rz;
    affine(cache.acts[l], t + dims[l].w_off, t + dims[l].b_off, dims[l].out,
           rz);
    Matrix wra;
    const std::vector<double> zeros(dims[l].out, 0.0);
    affine(racts[l], p + dims[l].w_off, zeros.data(), dims[l].out, wra);
    for (std::size_t i = 0; i < rz.data.size(); ++i) rz.data[i] += wra.data[i];
    if (l + 1 < nlayers) {
      Matrix ra(rz.rows, rz.cols);
      const Matrix& a = cache.acts[l + 1];
      for (std::size_t i = 0; i < rz.data.size(); ++i)
        ra.data[i] = act_deriv(arch.activation, a.data[i]) * rz.data[i];
      racts.push_back(std::move(ra));
    }
    rpre[l] = std::move(rz);
  }

  // Output tangents: delta = p - onehot, Rdelta = Rp with
  // Rp_j = p_j (Rz_j - sum_c p_c Rz_c).
  Matrix delta = output_delta(cache, batch.labels);
  Matrix rdelta(m, dims.back().out);
  {
    const Matrix& rz = rpre.back();
    const Matrix& pr = cache.probs;
    const std::size_t c = dims.back().out;
    for (std::size_t i = 0; i < m; ++i) {
      const double* pi = pr.data.data() + i * c;
      const double* rzi = rz.data.data() + i * c;
      double* rdi = rdelta.data.data() + i * c;
      double mix = 0.0;
      for (std::size_t j = 0; j < c; ++j) mix += pi[j] * rzi[j];
      for (std::size_t j = 0; j < c; ++j) rdi[j] = pi[j] * (rzi[j] - mix);
    }
  }

  ParamVector hv(model.dim(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t l = nlayers; l-- > 0;) {
    const Dims& d = dims[l];
    // R(gradW) = (1/m)(Rdelta^T a + delta^T Ra); R(gradb) = (1/m) sum Rdelta.
    double* gw = hv.data() + d.w_off;
    double* gb = hv.data() + d.b_off;
    const Matrix& a = cache.acts[l];
    const Matrix& ra = racts[l];
    for (std::size_t i = 0; i < m; ++i) {
      const double* dl = delta.data.data() + i * d.out;
      const double* rdl = rdelta.data.data() + i * d.out;
      const double* ai = a.data.data() + i * d.in;
      const double* rai = ra.data.data() + i * d.in;
      for (std::size_t j = 0; j < d.out; ++j) {
        const double dj = dl[j];
        const double rdj = rdl[j];
        double* gwj = gw + j * d.in;
        for (std::size_t k = 0; k < d.in; ++k)
          gwj[k] += rdj * ai[k] + dj * rai[k];
        gb[j] += rdj;
      }
    }
    for (std::size_t j = 0; j < d.out; ++j) {
      double* gwj = gw + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) gwj[k] *= inv_m;
      gb[j] *= inv_m;
    }
    if (l > 0) {
      // s = W^T delta (the raw backprop signal), rs = V^T delta + W^T Rdelta;
      // delta_{l-1} = s . phi'(z), Rdelta_{l-1} = rs . phi'(z)
      //                                          + s . phi''(z) . Rz_{l-1}.
      Matrix s, rs1, rs2;
      affine_back(delta, p + d.w_off, d.out, d.in, s);
      affine_back(delta, t + d.w_off, d.out, d.in, rs1);
      affine_back(rdelta, p + d.w_off, d.out, d.in, rs2);
      const Matrix& rz = rpre[l - 1];
      Matrix nd(m, d.in), nrd(m, d.in);
      for (std::size_t i = 0; i < nd.data.size(); ++i) {
        const double av = a.data[i];
        const double d1 = act_deriv(arch.activation, av);
        const double d2 = act_second(arch.activation, av);
        nd.data[i] = s.data[i] * d1;
        nrd.data[i] =
            (rs1.data[i] + rs2.data[i]) * d1 + s.data[i] * d2 * rz.data[i];
      }
      delta = std::move(nd);
      rdelta = std::move(nrd);
    }
  }
  check_finite(hv, "hessian-vector product");
  return hv;
}

ParamVector fisher_apply(const Matrix& g, std::span<const double> v,
                         double ridge) {
  if (v.size() != g.cols) {
    throw ConfigError("fisher_apply direction has " + std::to_string(v.size()) +
                      " entries, gradients have " + std::to_string(g.cols));
  }
  const std::size_t m = g.rows;
  ParamVector out(g.cols, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g.data.data() + i * g.cols;
    double dotv = 0.0;
    for (std::size_t k = 0; k < g.cols; ++k) dotv += gi[k] * v[k];
    const double coef = dotv * inv_m;
    for (std::size_t k = 0; k < g.cols; ++k) out[k] += coef * gi[k];
  }
  if (ridge != 0.0)
    for (std::size_t k = 0; k < g.cols; ++k) out[k] += ridge * v[k];
  return out;
}

double fisher_trace_of(const Matrix& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.rows; ++i) {
    const double* gi = g.data.data() + i * g.cols;
    for (std::size_t k = 0; k < g.cols; ++k) acc += gi[k] * gi[k];
  }
  return acc / static_cast<double>(g.rows);
}

ParamVector fisher_vector_product(const MlpModel& model, const Batch& batch,
                                  const ParamVector& v) {
  return fisher_apply(per_example_grads(model, batch), v, 0.0);
}

double fisher_trace(const MlpModel& model, const Batch& batch) {
  return fisher_trace_of(per_example_grads(model, batch));
}

}  // namespace sltlab
