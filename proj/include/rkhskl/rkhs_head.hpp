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

// Stochastic last layer w ~ N(mean, L L^T) on top of a feature map phi and the
// kernel it induces,
//
//   K(x, t) = phi(x)^T (mean mean^T + L L^T) phi(t).
//
// Averaging the linear readout over weight draws puts the discriminator in
// the RKHS of K with norm at most one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "rkhskl/errors.hpp"
#include "rkhskl/random.hpp"

namespace rkhskl {

struct StochasticHead
{
  Eigen::VectorXd mean;    // p
  Eigen::MatrixXd factor;  // p x p, lower triangular

  Eigen::Index dim() const
  {
    return mean.size();
  }

  /// mean = 0, L L^T = I.
  static StochasticHead standard(Eigen::Index p)
  {
    return {Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Identity(p, p)};
  }

  /// Deterministic readout: L = 0.
  static StochasticHead deterministic(Eigen::VectorXd readout)
  {
    auto const p = readout.size();
    return {std::move(readout), Eigen::MatrixXd::Zero(p, p)};
  }

  /// mean mean^T + L L^T, assembled explicitly.
  Eigen::MatrixXd second_moment() const
  {
    return mean * mean.transpose() + factor * factor.transpose();
  }

  StochasticHead zeros_like() const
  {
    return {Eigen::VectorXd::Zero(mean.size()), Eigen::MatrixXd::Zero(factor.rows(), factor.cols())};
  }
};

/// d weight draws w_j = mean + L eps_j, plus the standard-normal eps_j used.
struct WeightSamples
{
  Eigen::MatrixXd noise;    // p x d
  Eigen::MatrixXd weights;  // p x d

  Eigen::Index count() const
  {
    return weights.cols();
  }
  Eigen::VectorXd mean_weight() const
  {
    return weights.rowwise().mean();
  }
  Eigen::VectorXd mean_noise() const
  {
    return noise.rowwise().mean();
  }
};

inline WeightSamples sample_weights(StochasticHead const &head, Eigen::Index d, Rng &rng)
{
  if (d < 1)
  {
    throw ConfigError("sample_weights: d must be >= 1");
  }
  if (head.factor.rows() != head.dim() || head.factor.cols() != head.dim())
  {
    throw ContractError("sample_weights: factor is not p x p");
  }
  WeightSamples out;
  out.noise   = standard_normal(head.dim(), d, rng);
  out.weights = head.factor.triangularView<Eigen::Lower>() * out.noise;
  out.weights.colwise() += head.mean;
  return out;
}

/// f(x_i) = (1/d) sum_j phi(x_i)^T w_j for every row of `features`.
inline Eigen::VectorXd discriminator_value(Eigen::MatrixXd const &features,
                                           WeightSamples const &samples)
{
  if (features.cols() != samples.weights.rows())
  {
    throw ContractError("discriminator_value: feature dim " + std::to_string(features.cols()) +
                        " != head dim " + std::to_string(samples.weights.rows()));
  }
  return features * samples.mean_weight();
}

inline double kernel_value(Eigen::Ref<Eigen::VectorXd const> const &phi_x,
                           Eigen::Ref<Eigen::VectorXd const> const &phi_t, StochasticHead const &head)
{
  if (phi_x.size() != head.dim() || phi_t.size() != head.dim())
  {
    throw ContractError("kernel_value: feature dims do not match head");
  }
  auto const lower = head.factor.triangularView<Eigen::Lower>();
  Eigen::VectorXd const ux = lower.transpose() * phi_x;
  Eigen::VectorXd const ut = lower.transpose() * phi_t;
  return phi_x.dot(head.mean) * head.mean.dot(phi_t) + ux.dot(ut);
}

/// Kernel matrix over a joint minibatch. Rows [0, split) come from p, rows
/// [split, size) from q.
struct MinibatchGram
{
  Eigen::MatrixXd entries;
  Eigen::Index    split = 0;
  double          s_mini = 0.0;
  Eigen::Index    argmax_row = 0;
  Eigen::Index    argmax_col = 0;

  Eigen::Index size() const
  {
    return entries.rows();
  }
};

/// Gram of the joint feature batch under K. S_mini is the largest entry; ties
/// resolve to the lowest (row, col) in row-major order.
inline MinibatchGram minibatch_gram(Eigen::MatrixXd const &joint_features, Eigen::Index split,
                                    StochasticHead const &head)
{
  if (joint_features.cols() != head.dim())
  {
    throw ContractError("minibatch_gram: feature dim does not match head");
  }
  if (split < 0 || split > joint_features.rows())
  {
    throw ContractError("minibatch_gram: partition index out of range");
  }
  auto const n = joint_features.rows();
  auto const p = head.dim();

  // K = Psi Psi^T with Psi = [phi mean, phi L]
  Eigen::MatrixXd psi(n, p + 1);
  psi.col(0)          = joint_features * head.mean;
  psi.rightCols(p)    = joint_features * head.factor.triangularView<Eigen::Lower>();

  MinibatchGram gram;
  gram.split   = split;
  gram.entries = Eigen::MatrixXd::Zero(n, n);
  gram.entries.selfadjointView<Eigen::Lower>().rankUpdate(psi);
  gram.entries.triangularView<Eigen::StrictlyUpper>() = gram.entries.transpose();

  gram.s_mini = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < n; ++r)
  {
    for (Eigen::Index c = 0; c < n; ++c)
    {
      if (gram.entries(r, c) > gram.s_mini)
      {
        gram.s_mini     = gram.entries(r, c);
        gram.argmax_row = r;
        gram.argmax_col = c;
      }
    }
  }
  return gram;
}

/// Empirical mean-embedding quantities of one minibatch.
struct EmbeddingStats
{
  double inner_p   = 0.0;  // <mu_p, f> = mean f over p rows
  double inner_q   = 0.0;  // <mu_q, f>
  double norm_diff = 0.0;  // ||mu_p - mu_q||
  double norm_sum  = 0.0;  // ||mu_p + mu_q||
};

inline EmbeddingStats embedding_stats(Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q,
                                      MinibatchGram const &gram)
{
  if (f_p.size() != gram.split || f_p.size() + f_q.size() != gram.size())
  {
    throw ContractError("embedding_stats: batch sizes do not match the Gram partition");
  }
  if (f_p.size() == 0 || f_q.size() == 0)
  {
    throw ContractError("embedding_stats: empty batch");
  }
  auto const bp = static_cast<double>(f_p.size());
  auto const bq = static_cast<double>(f_q.size());
  auto const np = f_p.size();
  auto const nq = f_q.size();

  double const sum_pp = gram.entries.topLeftCorner(np, np).sum();
  double const sum_qq = gram.entries.bottomRightCorner(nq, nq).sum();
  double const sum_pq = gram.entries.topRightCorner(np, nq).sum();

  double const pp = sum_pp / (bp * bp);
  double const qq = sum_qq / (bq * bq);
  double const pq = sum_pq / (bp * bq);

  EmbeddingStats stats;
  stats.inner_p   = f_p.mean();
  stats.inner_q   = f_q.mean();
  stats.norm_sum  = std::sqrt(std::max(0.0, pp + 2.0 * pq + qq));
  stats.norm_diff = std::sqrt(std::max(0.0, pp - 2.0 * pq + qq));
  return stats;
}

}  // namespace rkhskl
