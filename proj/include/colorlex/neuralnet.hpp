// Copyright 2026 The colorlex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense feed-forward networks with exact reverse-mode gradients and an
// adaptive-moment optimizer. Everything is templated on the scalar type and
// works on column-major batches: one sample per column.

#ifndef COLORLEX_NEURALNET_HPP_
#define COLORLEX_NEURALNET_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

namespace colorlex::nn {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ParamRef = Eigen::Map<Vector<Scalar>>;

enum class Activation { kRelu, kIdentity };

inline std::string_view ToString(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

inline Activation ParseActivation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw std::invalid_argument(fmt::format("unknown activation '{}'", s));
}

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Activation activation = Activation::kIdentity;

  Index in() const { return weights.cols(); }
  Index out() const { return weights.rows(); }
};

template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<DenseLayer<Scalar>> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.bias.size() != l.out()) {
        throw std::invalid_argument(
            fmt::format("layer {}: bias size {} != output size {}", i,
                        l.bias.size(), l.out()));
      }
      if (i > 0 && l.in() != layers_[i - 1].out()) {
        throw std::invalid_argument(fmt::format(
            "layer {}: input size {} does not chain with previous output {}", i,
            l.in(), layers_[i - 1].out()));
      }
    }
  }

  // sizes = {input, hidden..., output}. Weights are uniform in
  // [-sqrt(6/(in+out)), +sqrt(6/(in+out))], biases zero.
  template <typename Gen>
  static Mlp Create(std::span<const Index> sizes, Activation hidden,
                    Activation output, Gen& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least two sizes");
    std::vector<DenseLayer<Scalar>> layers;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      const Index in = sizes[i], out = sizes[i + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> u(-limit, limit);
      DenseLayer<Scalar> l;
      l.weights.resize(out, in);
      for (Index c = 0; c < in; ++c)
        for (Index r = 0; r < out; ++r) l.weights(r, c) = static_cast<Scalar>(u(rng));
      l.bias = Vector<Scalar>::Zero(out);
      l.activation = i + 2 == sizes.size() ? output : hidden;
      layers.push_back(std::move(l));
    }
    return Mlp(std::move(layers));
  }

  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  Index input_size() const { return layers_.empty() ? 0 : layers_.front().in(); }
  Index output_size() const { return layers_.empty() ? 0 : layers_.back().out(); }

  // Views over every weight and bias, in layer order (weights then bias).
  std::vector<ParamRef<Scalar>> parameters() {
    std::vector<ParamRef<Scalar>> out;
    for (auto& l : layers_) {
      out.emplace_back(l.weights.data(), l.weights.size());
      out.emplace_back(l.bias.data(), l.bias.size());
    }
    return out;
  }

  bool AllFinite() const {
    for (const auto& l : layers_)
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
};

template <typename Scalar>
struct ForwardTrace {
  std::vector<Matrix<Scalar>> inputs;     // input to each layer
  std::vector<Matrix<Scalar>> preactive;  // affine output of each layer
  Matrix<Scalar> output;
};

template <typename Scalar>
struct MlpGradients {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> bias;
  Matrix<Scalar> input;

  std::vector<ParamRef<Scalar>> parameters() {
    std::vector<ParamRef<Scalar>> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out.emplace_back(weights[i].data(), weights[i].size());
      out.emplace_back(bias[i].data(), bias[i].size());
    }
    return out;
  }
};

namespace detail {

template <typename Scalar>
void Activate(Activation a, Matrix<Scalar>& z) {
  if (a == Activation::kRelu) z = z.cwiseMax(Scalar(0));
}

template <typename Scalar, typename Derived>
void CheckInput(const Mlp<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  if (m.layers().empty()) throw std::invalid_argument("forward on an empty MLP");
  if (x.rows() != m.input_size()) {
    throw std::invalid_argument(fmt::format(
        "input has {} rows, network expects {}", x.rows(), m.input_size()));
  }
}

}  // namespace detail

// Batched forward pass; x is [input_size x batch].
template <typename Scalar, typename Derived>
Matrix<Scalar> forward(const Mlp<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  detail::CheckInput(m, x);
  Matrix<Scalar> h = x.template cast<Scalar>();
  for (const auto& l : m.layers()) {
    Matrix<Scalar> z = (l.weights * h).colwise() + l.bias;
    detail::Activate(l.activation, z);
    h = std::move(z);
  }
  return h;
}

template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward_trace(const Mlp<Scalar>& m,
                                   const Eigen::MatrixBase<Derived>& x) {
  detail::CheckInput(m, x);
  ForwardTrace<Scalar> t;
  Matrix<Scalar> h = x.template cast<Scalar>();
  for (const auto& l : m.layers()) {
    Matrix<Scalar> z = (l.weights * h).colwise() + l.bias;
    t.inputs.push_back(std::move(h));
    t.preactive.push_back(z);
    detail::Activate(l.activation, z);
    h = std::move(z);
  }
  t.output = std::move(h);
  return t;
}

// Reverse-mode gradients of sum(upstream .* output) with respect to every
// parameter and to the input. Gradients sum over the batch columns.
template <typename Scalar, typename Derived>
MlpGradients<Scalar> backward(const Mlp<Scalar>& m, const ForwardTrace<Scalar>& t,
                              const Eigen::MatrixBase<Derived>& upstream) {
  const auto& layers = m.layers();
  if (t.inputs.size() != layers.size()) {
    throw std::invalid_argument("forward trace does not match the network depth");
  }
  if (upstream.rows() != t.output.rows() || upstream.cols() != t.output.cols()) {
    throw std::invalid_argument(fmt::format(
        "upstream gradient is {}x{}, output is {}x{}", upstream.rows(),
        upstream.cols(), t.output.rows(), t.output.cols()));
  }
  MlpGradients<Scalar> g;
  g.weights.resize(layers.size());
  g.bias.resize(layers.size());
  Matrix<Scalar> delta = upstream.template cast<Scalar>();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& l = layers[i];
    if (l.activation == Activation::kRelu)
      delta = delta.cwiseProduct((t.preactive[i].array() > Scalar(0)).template cast<Scalar>().matrix());
    g.weights[i] = delta * t.inputs[i].transpose();
    g.bias[i] = delta.rowwise().sum();
    delta = l.weights.transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> e = (z.array() - z.maxCoeff()).exp().matrix();
  return Vector<Scalar>(e / e.sum());
}

template <typename Derived>
auto log_softmax(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar mx = z.maxCoeff();
  const Scalar lse = mx + std::log((z.array() - mx).exp().sum());
  return Vector<Scalar>(z.array() - lse);
}

// Column-wise softmax of a [classes x batch] matrix.
template <typename Scalar>
Matrix<Scalar> softmax_columns(const Matrix<Scalar>& z) {
  Matrix<Scalar> p(z.rows(), z.cols());
  for (Index c = 0; c < z.cols(); ++c) p.col(c) = softmax(z.col(c));
  return p;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, std::span<const ParamRef<Scalar>> params) : cfg_(cfg) {
    for (const auto& p : params) {
      first_.push_back(Vector<Scalar>::Zero(p.size()));
      second_.push_back(Vector<Scalar>::Zero(p.size()));
    }
  }

  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  std::int64_t steps() const { return step_; }
  const std::vector<Vector<Scalar>>& first_moments() const { return first_; }
  const std::vector<Vector<Scalar>>& second_moments() const { return second_; }

  // Bias-corrected adaptive-moment update. Throws before touching anything
  // if a gradient is non-finite or shapes disagree.
  void step(std::span<ParamRef<Scalar>> params, std::span<const ParamRef<Scalar>> grads) {
    if (params.size() != first_.size() || grads.size() != first_.size())
      throw std::invalid_argument("parameter block count does not match optimizer state");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (params[i].size() != first_[i].size() || grads[i].size() != first_[i].size())
        throw std::invalid_argument(fmt::format("parameter block {} changed shape", i));
      if (!grads[i].allFinite())
        throw std::runtime_error(fmt::format("non-finite gradient in block {}", i));
    }
    ++step_;
    const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step_));
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar eps = static_cast<Scalar>(cfg_.epsilon);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      first_[i] = b1 * first_[i] + (Scalar(1) - b1) * grads[i];
      second_[i] = b2 * second_[i] + (Scalar(1) - b2) * grads[i].cwiseAbs2();
      params[i].array() -= lr * (first_[i].array() / c1) /
                           ((second_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<Vector<Scalar>> first_;
  std::vector<Vector<Scalar>> second_;
  std::int64_t step_ = 0;
};

// Rescales the gradient blocks so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(std::span<ParamRef<Scalar>> grads, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > Scalar(0)) {
    const Scalar s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace colorlex::nn

#endif  // COLORLEX_NEURALNET_HPP_
