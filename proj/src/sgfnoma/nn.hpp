/*
 *  Copyright 2026 The sgfnoma Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sgfnoma/errors.hpp"
#include "sgfnoma/rng.hpp"

namespace sgf::nn {

enum class HeadKind { plain, dueling };

// Layer widths of a Q-network. The plain head maps the last hidden layer
// straight to one output per action. The dueling head splits after the last
// hidden layer into a value stream (stream_hidden -> 1) and an advantage
// stream (stream_hidden -> actions), recombined by dueling_aggregate.
struct NetworkShape {
  int inputs = 0;
  std::vector<int> hidden;
  int actions = 0;
  HeadKind head = HeadKind::plain;
  int stream_hidden = 60;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
struct Dense {
  Matrix<T> weight;  // out x in
  Vector<T> bias;    // out
};

// Same layout as QNetwork::layers(); also used for optimizer moments.
template <class T>
using ParameterSet = std::vector<Dense<T>>;

// Q = V + A - mean(A). Throws DimensionError on empty advantages.
template <class T>
std::vector<T> dueling_aggregate(T value, std::span<const T> advantages) {
  if (advantages.empty()) throw DimensionError("dueling_aggregate: no advantages");
  T mean = 0;
  for (T a : advantages) mean += a;
  mean /= static_cast<T>(advantages.size());
  std::vector<T> q(advantages.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = value + advantages[i] - mean;
  return q;
}

template <class T>
class QNetwork {
 public:
  // Activations kept by forward_batch for backward, plus scratch space that
  // backward reuses. Keeping one Cache per caller avoids reallocating every
  // buffer on each call.
  struct Cache {
    std::vector<Matrix<T>> trunk;  // trunk[0] = input, trunk[l+1] = ReLU output
    Matrix<T> value_hidden;
    Matrix<T> advantage_hidden;
    Matrix<T> value;
    Matrix<T> advantage;
    Matrix<T> q;
    Matrix<T> d_top, d_below, d_value, d_adv, d_vh, d_ah;
  };

  QNetwork() = default;

  // All parameters zero.
  explicit QNetwork(NetworkShape shape) : shape_(std::move(shape)) {
    if (shape_.inputs < 1 || shape_.actions < 1 || shape_.hidden.empty())
      throw DimensionError("QNetwork: degenerate shape");
    int fan_in = shape_.inputs;
    for (int h : shape_.hidden) {
      add_layer(h, fan_in);
      fan_in = h;
    }
    if (shape_.head == HeadKind::plain) {
      add_layer(shape_.actions, fan_in);
    } else {
      add_layer(shape_.stream_hidden, fan_in);
      add_layer(1, shape_.stream_hidden);
      add_layer(shape_.stream_hidden, fan_in);
      add_layer(shape_.actions, shape_.stream_hidden);
    }
  }

  // Uniform He initialisation: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
  static QNetwork he_uniform(const NetworkShape& shape, Rng& rng) {
    QNetwork net(shape);
    for (Dense<T>& layer : net.layers_) {
      const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
          layer.weight(r, c) = static_cast<T>((2.0 * rng.uniform01() - 1.0) * bound);
    }
    return net;
  }

  const NetworkShape& shape() const { return shape_; }
  ParameterSet<T>& layers() { return layers_; }
  const ParameterSet<T>& layers() const { return layers_; }

  const Matrix<T>& forward_batch(const Matrix<T>& inputs, Cache& cache) const {
    if (inputs.rows() != shape_.inputs)
      throw DimensionError("QNetwork: expected " + std::to_string(shape_.inputs) +
                           " inputs, got " + std::to_string(inputs.rows()));
    const std::size_t depth = shape_.hidden.size();
    cache.trunk.resize(depth + 1);
    cache.trunk[0] = inputs;
    for (std::size_t l = 0; l < depth; ++l)
      affine(layers_[l], cache.trunk[l], cache.trunk[l + 1], true);
    const Matrix<T>& top = cache.trunk[depth];
    if (shape_.head == HeadKind::plain) {
      affine(layers_[depth], top, cache.q, false);
      return cache.q;
    }
    affine(layers_[depth], top, cache.value_hidden, true);
    affine(layers_[depth + 1], cache.value_hidden, cache.value, false);
    affine(layers_[depth + 2], top, cache.advantage_hidden, true);
    affine(layers_[depth + 3], cache.advantage_hidden, cache.advantage, false);
    cache.q.resize(cache.advantage.rows(), cache.advantage.cols());
    for (Eigen::Index c = 0; c < cache.q.cols(); ++c)
      cache.q.col(c) = cache.advantage.col(c).array() +
                       (cache.value(0, c) - cache.advantage.col(c).mean());
    return cache.q;
  }

  Matrix<T> forward_batch(const Matrix<T>& inputs) const {
    Cache cache;
    return forward_batch(inputs, cache);
  }

  Vector<T> forward(const Vector<T>& input) const {
    Cache cache;
    return forward_batch(input, cache).col(0);
  }

  // Gradient of a scalar loss L given dL/dQ (actions x batch) for the batch
  // that produced `cache`. Every entry of `grads` is overwritten.
  void backward(Cache& cache, const Matrix<T>& dq, ParameterSet<T>& grads) const {
    if (grads.size() != layers_.size()) grads = zeros_like();
    const std::size_t depth = shape_.hidden.size();
    if (shape_.head == HeadKind::plain) {
      backprop_layer(depth, cache.trunk[depth], dq, grads, &cache.d_top);
    } else {
      cache.d_value = dq.colwise().sum();
      cache.d_adv = dq;
      for (Eigen::Index c = 0; c < dq.cols(); ++c)
        cache.d_adv.col(c).array() -= cache.d_value(0, c) / static_cast<T>(shape_.actions);
      backprop_layer(depth + 1, cache.value_hidden, cache.d_value, grads, &cache.d_vh);
      cache.d_vh.array() *= (cache.value_hidden.array() > T(0)).template cast<T>();
      backprop_layer(depth + 3, cache.advantage_hidden, cache.d_adv, grads, &cache.d_ah);
      cache.d_ah.array() *= (cache.advantage_hidden.array() > T(0)).template cast<T>();
      backprop_layer(depth, cache.trunk[depth], cache.d_vh, grads, &cache.d_top);
      backprop_layer(depth + 2, cache.trunk[depth], cache.d_ah, grads, &cache.d_below);
      cache.d_top += cache.d_below;
    }
    for (std::size_t l = depth; l-- > 0;) {
      cache.d_top.array() *= (cache.trunk[l + 1].array() > T(0)).template cast<T>();
      // The input gradient of the first layer is never needed.
      backprop_layer(l, cache.trunk[l], cache.d_top, grads, l > 0 ? &cache.d_below : nullptr);
      if (l > 0) cache.d_top.swap(cache.d_below);
    }
  }

  ParameterSet<T> backward(Cache& cache, const Matrix<T>& dq) const {
    ParameterSet<T> grads;
    backward(cache, dq, grads);
    return grads;
  }

  ParameterSet<T> zeros_like() const {
    ParameterSet<T> z(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      z[i].weight = Matrix<T>::Zero(layers_[i].weight.rows(), layers_[i].weight.cols());
      z[i].bias = Vector<T>::Zero(layers_[i].bias.size());
    }
    return z;
  }

  std::size_t parameter_count() const { return count_parameters(layers_); }

  // Flat view: layer by layer, weights column-major then biases.
  T& parameter(std::size_t index) { return flat_ref(layers_, index); }
  T parameter(std::size_t index) const {
    return flat_ref(const_cast<ParameterSet<T>&>(layers_), index);
  }

  bool all_finite() const {
    for (const Dense<T>& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  template <class U>
  QNetwork<U> cast() const {
    QNetwork<U> out(shape_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      out.layers()[i].weight = layers_[i].weight.template cast<U>();
      out.layers()[i].bias = layers_[i].bias.template cast<U>();
    }
    return out;
  }

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    if (!(a.shape_ == b.shape_)) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i)
      if (a.layers_[i].weight != b.layers_[i].weight ||
          a.layers_[i].bias != b.layers_[i].bias)
        return false;
    return true;
  }

  static std::size_t count_parameters(const ParameterSet<T>& set) {
    std::size_t n = 0;
    for (const Dense<T>& l : set)
      n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  static T& flat_ref(ParameterSet<T>& set, std::size_t index) {
    for (Dense<T>& l : set) {
      const auto w = static_cast<std::size_t>(l.weight.size());
      if (index < w) return l.weight.data()[index];
      index -= w;
      const auto b = static_cast<std::size_t>(l.bias.size());
      if (index < b) return l.bias.data()[index];
      index -= b;
    }
    throw DimensionError("parameter index out of range");
  }

 private:
  void add_layer(int out, int in) {
    layers_.push_back({Matrix<T>::Zero(out, in), Vector<T>::Zero(out)});
  }

  static void affine(const Dense<T>& layer, const Matrix<T>& x, Matrix<T>& out, bool relu) {
    out.noalias() = layer.weight * x;
    out.colwise() += layer.bias;
    if (relu) out = out.cwiseMax(T(0));
  }

  // Writes the parameter gradient of layer `index` and, when `d_in` is set,
  // the gradient with respect to the layer input.
  void backprop_layer(std::size_t index, const Matrix<T>& input, const Matrix<T>& d_out,
                      ParameterSet<T>& grads, Matrix<T>* d_in) const {
    grads[index].weight.noalias() = d_out * input.transpose();
    grads[index].bias = d_out.rowwise().sum();
    if (d_in) d_in->noalias() = layers_[index].weight.transpose() * d_out;
  }

  NetworkShape shape_;
  ParameterSet<T> layers_;
};

// Loss and gradient of mean_i (y_i - Q(s_i, a_i))^2 over a batch. Only the
// taken action's output receives gradient.
template <class T>
struct LossGradient {
  T loss = 0;
  ParameterSet<T> grads;
};

// Reusable buffers for td_loss_gradient.
template <class T>
struct LossWorkspace {
  typename QNetwork<T>::Cache cache;
  Matrix<T> dq;
  LossGradient<T> result;
};

template <class T>
const LossGradient<T>& td_loss_gradient(const QNetwork<T>& net, const Matrix<T>& states,
                                        std::span<const int> actions,
                                        std::span<const T> targets, LossWorkspace<T>& ws) {
  const auto batch = states.cols();
  if (static_cast<Eigen::Index>(actions.size()) != batch ||
      static_cast<Eigen::Index>(targets.size()) != batch)
    throw DimensionError("td_loss_gradient: batch size mismatch");
  const Matrix<T>& q = net.forward_batch(states, ws.cache);
  ws.dq.setZero(q.rows(), q.cols());
  LossGradient<T>& out = ws.result;
  out.loss = 0;
  const T scale = T(2) / static_cast<T>(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.rows()) throw DimensionError("td_loss_gradient: bad action");
    const T residual = q(a, i) - targets[static_cast<std::size_t>(i)];
    out.loss += residual * residual;
    ws.dq(a, i) = scale * residual;
  }
  out.loss /= static_cast<T>(batch);
  net.backward(ws.cache, ws.dq, out.grads);
  return out;
}

template <class T>
LossGradient<T> td_loss_gradient(const QNetwork<T>& net, const Matrix<T>& states,
                                 std::span<const int> actions, std::span<const T> targets) {
  LossWorkspace<T> ws;
  return td_loss_gradient(net, states, actions, targets, ws);
}

// Single-sample form: gradient of (y - Q(s, a))^2.
template <class T>
ParameterSet<T> backward(const QNetwork<T>& net, const Vector<T>& state, T target,
                         int taken_action) {
  const int a[1] = {taken_action};
  const T y[1] = {target};
  return td_loss_gradient<T>(net, state, a, y).grads;
}

template <class T>
struct AdamState {
  ParameterSet<T> first_moment;
  ParameterSet<T> second_moment;
  long long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const QNetwork<T>& net, double lr, double b1 = 0.9, double b2 = 0.999,
            double eps = 1e-8)
      : first_moment(net.zeros_like()),
        second_moment(net.zeros_like()),
        learning_rate(lr),
        beta1(b1),
        beta2(b2),
        epsilon(eps) {}
};

// One bias-corrected Adam update. grad_clip > 0 rescales the gradient to at
// most that global L2 norm first. Throws TrainingError on non-finite input.
template <class T>
void adam_step(QNetwork<T>& net, const ParameterSet<T>& grads, AdamState<T>& opt,
               double grad_clip = 0.0) {
  ParameterSet<T>& params = net.layers();
  if (grads.size() != params.size() || opt.first_moment.size() != params.size())
    throw DimensionError("adam_step: parameter layout mismatch");
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].weight.rows() != params[i].weight.rows() ||
        grads[i].weight.cols() != params[i].weight.cols() ||
        grads[i].bias.size() != params[i].bias.size())
      throw DimensionError("adam_step: gradient shape mismatch");
    norm_sq += static_cast<double>(grads[i].weight.squaredNorm()) +
               static_cast<double>(grads[i].bias.squaredNorm());
  }
  // Any NaN or infinity makes the norm non-finite; only then is the full
  // scan needed (a huge but finite gradient can overflow the norm too).
  if (!std::isfinite(norm_sq))
    for (const Dense<T>& g : grads)
      if (!g.weight.allFinite() || !g.bias.allFinite())
        throw TrainingError("adam_step: non-finite gradient");
  T scale = T(1);
  if (grad_clip > 0.0 && norm_sq > grad_clip * grad_clip)
    scale = static_cast<T>(grad_clip / std::sqrt(norm_sq));

  ++opt.step;
  const T b1 = static_cast<T>(opt.beta1);
  const T b2 = static_cast<T>(opt.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(opt.beta1, static_cast<double>(opt.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(opt.beta2, static_cast<double>(opt.step)));
  const T lr = static_cast<T>(opt.learning_rate);
  const T eps = static_cast<T>(opt.epsilon);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    const auto g = grad.array() * scale;
    m.array() = b1 * m.array() + (T(1) - b1) * g;
    v.array() = b2 * v.array() + (T(1) - b2) * g.square();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weight, grads[i].weight, opt.first_moment[i].weight,
           opt.second_moment[i].weight);
    update(params[i].bias, grads[i].bias, opt.first_moment[i].bias,
           opt.second_moment[i].bias);
  }
}

}  // namespace sgf::nn
