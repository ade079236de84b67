#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The rkhskl Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

// Dense feature network with leaky-rectifier activations, hand-written
// reverse pass and an adaptive-moment optimizer.
//
// Batches are row-major in the mathematical sense: one point per row, so a
// batch of b points in R^n is a b x n matrix.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rkhskl/errors.hpp"
#include "rkhskl/random.hpp"

namespace rkhskl {

inline constexpr double kDefaultLeakySlope = 0.01;

struct DenseLayer
{
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  Eigen::Index in_dim() const
  {
    return weight.cols();
  }
  Eigen::Index out_dim() const
  {
    return weight.rows();
  }
};

/// Stack of fully connected layers, each followed by a leaky rectifier.
/// The output of the last activation is the feature map phi(x).
struct FeatureNet
{
  std::vector<DenseLayer> layers;
  double leaky_slope = kDefaultLeakySlope;

  Eigen::Index input_dim() const
  {
    return layers.empty() ? 0 : layers.front().in_dim();
  }
  Eigen::Index output_dim() const
  {
    return layers.empty() ? 0 : layers.back().out_dim();
  }

  std::size_t parameter_count() const
  {
    std::size_t count = 0;
    for (auto const &layer : layers)
    {
      count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return count;
  }

  /// Same shapes, all zeros. Used as the gradient container.
  FeatureNet zeros_like() const
  {
    FeatureNet out;
    out.leaky_slope = leaky_slope;
    out.layers.reserve(layers.size());
    for (auto const &layer : layers)
    {
      out.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
    }
    return out;
  }

  bool all_finite() const
  {
    for (auto const &layer : layers)
    {
      if (!layer.weight.allFinite() || !layer.bias.allFinite())
      {
        return false;
      }
    }
    return true;
  }
};

/// Activations cached by forward() for the matching backward() call.
struct GradientTape
{
  std::vector<Eigen::MatrixXd> inputs;           // input of layer k, b x in_k
  std::vector<Eigen::MatrixXd> pre_activations;  // b x out_k
};

struct ForwardResult
{
  Eigen::MatrixXd features;  // b x p
  GradientTape    tape;
};

inline double leaky_relu(double z, double slope)
{
  return z > 0.0 ? z : slope * z;
}

inline double leaky_relu_derivative(double z, double slope)
{
  return z > 0.0 ? 1.0 : slope;
}

/// Fully connected layer with weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline DenseLayer init_dense_layer(Eigen::Index in, Eigen::Index out, Rng &rng)
{
  double const bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
  for (Eigen::Index c = 0; c < in; ++c)
  {
    for (Eigen::Index r = 0; r < out; ++r)
    {
      layer.weight(r, c) = uniform(rng);
    }
  }
  return layer;
}

/// Two-layer feature network n -> hidden -> p, leaky rectifier after each.
inline FeatureNet init_feature_net(Eigen::Index n, Eigen::Index hidden, Eigen::Index p,
                                   std::uint64_t seed, double leaky_slope = kDefaultLeakySlope)
{
  if (n < 1 || hidden < 1 || p < 1)
  {
    throw ConfigError("init_feature_net: dimensions must be >= 1 (n=" + std::to_string(n) +
                      ", hidden=" + std::to_string(hidden) + ", p=" + std::to_string(p) + ")");
  }
  Rng rng = make_rng(seed, 0x6e6574);
  FeatureNet net;
  net.leaky_slope = leaky_slope;
  net.layers.push_back(init_dense_layer(n, hidden, rng));
  net.layers.push_back(init_dense_layer(hidden, p, rng));
  return net;
}

inline ForwardResult forward(FeatureNet const &net, Eigen::MatrixXd const &x)
{
  if (net.layers.empty())
  {
    throw ContractError("forward: network has no layers");
  }
  if (x.cols() != net.input_dim())
  {
    throw InputError("forward: expected points of dim " + std::to_string(net.input_dim()) +
                     ", got " + std::to_string(x.cols()));
  }
  if (!x.allFinite())
  {
    throw InputError("forward: non-finite input");
  }

  ForwardResult result;
  result.tape.inputs.reserve(net.layers.size());
  result.tape.pre_activations.reserve(net.layers.size());

  Eigen::MatrixXd activation = x;
  for (auto const &layer : net.layers)
  {
    Eigen::MatrixXd pre = activation * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    result.tape.inputs.push_back(std::move(activation));
    activation = pre.unaryExpr([slope = net.leaky_slope](double z) { return leaky_relu(z, slope); });
    result.tape.pre_activations.push_back(std::move(pre));
  }
  result.features = std::move(activation);
  return result;
}

/// Reverse pass. `upstream` is dLoss/dFeatures with the shape of the forward
/// output. Returns dLoss/dParameters in a FeatureNet-shaped container; when
/// `input_grad` is non-null it also receives dLoss/dInput.
inline FeatureNet backward(FeatureNet const &net, GradientTape const &tape,
                           Eigen::MatrixXd const &upstream, Eigen::MatrixXd *input_grad = nullptr)
{
  if (tape.inputs.size() != net.layers.size() || tape.pre_activations.size() != net.layers.size())
  {
    throw ContractError("backward: tape does not match network depth");
  }
  auto const &last = tape.pre_activations.back();
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols())
  {
    throw ContractError("backward: upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                        std::to_string(upstream.cols()) + ", expected " +
                        std::to_string(last.rows()) + "x" + std::to_string(last.cols()));
  }

  FeatureNet grads = net.zeros_like();
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = net.layers.size(); k-- > 0;)
  {
    auto const &pre = tape.pre_activations[k];
    Eigen::MatrixXd dpre = delta.cwiseProduct(
        pre.unaryExpr([slope = net.leaky_slope](double z) { return leaky_relu_derivative(z, slope); }));
    grads.layers[k].weight = dpre.transpose() * tape.inputs[k];
    grads.layers[k].bias   = dpre.colwise().sum().transpose();
    if (k > 0 || input_grad != nullptr)
    {
      delta = dpre * net.layers[k].weight;
    }
  }
  if (input_grad != nullptr)
  {
    *input_grad = std::move(delta);
  }
  return grads;
}

using ParamView      = Eigen::Map<Eigen::VectorXd>;
using ConstParamView = Eigen::Map<Eigen::VectorXd const>;

inline void append_views(FeatureNet &net, std::vector<ParamView> &out)
{
  for (auto &layer : net.layers)
  {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
}

inline void append_views(FeatureNet const &net, std::vector<ConstParamView> &out)
{
  for (auto const &layer : net.layers)
  {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
}

struct AdamSettings
{
  double learning_rate = 5e-3;
  double beta1         = 0.9;
  double beta2         = 0.999;
  double epsilon       = 1e-8;
};

/// Adaptive-moment optimizer over a fixed list of flat parameter tensors.
/// Moment buffers are sized on the first step and must match afterwards.
class AdamOptimizer
{
public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(AdamSettings settings)
    : settings_(settings)
  {
    if (!(settings_.learning_rate > 0.0))
    {
      throw ConfigError("AdamOptimizer: learning rate must be positive");
    }
  }

  /// Applies one update in place. Throws TrainingError, leaving parameters and
  /// state untouched, when any gradient entry is non-finite.
  void step(std::span<ParamView> params, std::span<ConstParamView const> grads)
  {
    if (params.size() != grads.size())
    {
      throw ContractError("AdamOptimizer::step: parameter/gradient count mismatch");
    }
    if (first_.empty())
    {
      for (auto const &p : params)
      {
        first_.push_back(Eigen::VectorXd::Zero(p.size()));
        second_.push_back(Eigen::VectorXd::Zero(p.size()));
      }
    }
    if (first_.size() != params.size())
    {
      throw ContractError("AdamOptimizer::step: parameter list changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i)
    {
      if (params[i].size() != grads[i].size() || params[i].size() != first_[i].size())
      {
        throw ContractError("AdamOptimizer::step: shape mismatch in tensor " + std::to_string(i));
      }
      if (!grads[i].allFinite())
      {
        throw TrainingError("AdamOptimizer::step: non-finite gradient in tensor " +
                            std::to_string(i));
      }
    }

    ++step_count_;
    double const t      = static_cast<double>(step_count_);
    double const alpha  = settings_.learning_rate;
    double const b1     = settings_.beta1;
    double const b2     = settings_.beta2;
    double const bias1  = 1.0 - std::pow(b1, t);
    double const bias2  = 1.0 - std::pow(b2, t);

    for (std::size_t i = 0; i < params.size(); ++i)
    {
      first_[i]  = b1 * first_[i] + (1.0 - b1) * grads[i];
      second_[i] = b2 * second_[i] + (1.0 - b2) * grads[i].cwiseAbs2();
      params[i].array() -= alpha * (first_[i].array() / bias1) /
                           ((second_[i].array() / bias2).sqrt() + settings_.epsilon);
    }
  }

  std::uint64_t step_count() const
  {
    return step_count_;
  }
  AdamSettings const &settings() const
  {
    return settings_;
  }
  std::vector<Eigen::VectorXd> const &first_moments() const
  {
    return first_;
  }
  std::vector<Eigen::VectorXd> const &second_moments() const
  {
    return second_;
  }

private:
  AdamSettings                 settings_{};
  std::uint64_t                step_count_ = 0;
  std::vector<Eigen::VectorXd> first_;
  std::vector<Eigen::VectorXd> second_;
};

}  // namespace rkhskl
