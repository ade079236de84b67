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

// Test-only oracles. Nothing here calls into the analytic gradient code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rkhskl/nn_core.hpp"
#include "rkhskl/trainer.hpp"

namespace rkhskl::support {

/// Central finite differences of `loss` over every entry of every view.
/// The views alias the parameters that `loss` reads.
inline std::vector<Eigen::VectorXd> central_differences(std::vector<ParamView> views,
                                                        std::function<double()> const &loss,
                                                        double step = 1e-5)
{
  std::vector<Eigen::VectorXd> out;
  for (auto &view : views)
  {
    Eigen::VectorXd g(view.size());
    for (Eigen::Index i = 0; i < view.size(); ++i)
    {
      double const saved = view[i];
      view[i]            = saved + step;
      double const up    = loss();
      view[i]            = saved - step;
      double const down  = loss();
      view[i]            = saved;
      g[i]               = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline Eigen::VectorXd concat(std::vector<Eigen::VectorXd> const &parts)
{
  Eigen::Index total = 0;
  for (auto const &p : parts)
  {
    total += p.size();
  }
  Eigen::VectorXd out(total);
  Eigen::Index offset = 0;
  for (auto const &p : parts)
  {
    out.segment(offset, p.size()) = p;
    offset += p.size();
  }
  return out;
}

template <typename View>
inline Eigen::VectorXd concat_views(std::vector<View> const &views)
{
  std::vector<Eigen::VectorXd> parts;
  for (auto const &v : views)
  {
    parts.emplace_back(v);
  }
  return concat(parts);
}

/// ||a - b|| / max(||a||, ||b||), with a floor for all-zero gradients.
inline double relative_error(Eigen::VectorXd const &a, Eigen::VectorXd const &b)
{
  double const scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

struct GradientCheck
{
  double       relative_error = 0.0;
  double       argmax_gap     = 0.0;  // distance of S_mini from the runner-up entry
  std::size_t  parameters     = 0;
};

/// Random small RKHS discriminator (n = 2, hidden <= 8, b <= 4) with a
/// non-trivial head, compared against central differences of the total
/// penalized loss at fixed weight noise.
inline GradientCheck penalized_gradient_check(std::uint64_t seed, double step = 1e-5)
{
  Rng rng = make_rng(seed, 0xfd);
  std::uniform_int_distribution<int> hidden_dist(1, 8);
  std::uniform_int_distribution<int> batch_dist(1, 4);
  std::uniform_real_distribution<double> lambda_dist(0.05, 2.0);
  std::uniform_real_distribution<double> gamma_dist(0.05, 1.5);

  TrainConfig config;
  config.hidden_dim     = hidden_dist(rng);
  config.b              = batch_dist(rng);
  config.m              = config.b;
  config.lambda         = lambda_dist(rng);
  config.gamma          = gamma_dist(rng);
  config.estimator_kind = EstimatorKind::rkhs_penalized;
  config.seed           = seed;

  Discriminator disc = init_discriminator(config, 2);
  auto const p       = disc.head.dim();
  disc.head.mean     = 0.7 * standard_normal(p, 1, rng);
  disc.head.factor   = (Eigen::MatrixXd::Identity(p, p) + 0.4 * standard_normal(p, p, rng))
                         .triangularView<Eigen::Lower>();
  for (auto &layer : disc.net.layers)
  {
    layer.bias = 0.2 * standard_normal(layer.bias.size(), 1, rng);
  }

  JointBatch batch{standard_normal(config.b, 2, rng), standard_normal(config.b, 2, rng)};
  batch.q.col(0).array() += 1.5;
  Eigen::VectorXd const noise = standard_normal(p, config.d, rng).rowwise().mean();

  auto const ev = evaluate_minibatch(disc, config, batch, noise, true);
  GradientCheck out;
  {
    // gap between the max entry and the largest entry at a different position
    Eigen::MatrixXd g = ev.gram.entries;
    g(ev.gram.argmax_row, ev.gram.argmax_col) = -std::numeric_limits<double>::infinity();
    g(ev.gram.argmax_col, ev.gram.argmax_row) = -std::numeric_limits<double>::infinity();
    out.argmax_gap = g.size() > 1 && std::isfinite(g.maxCoeff()) ? ev.gram.s_mini - g.maxCoeff()
                                                                 : std::numeric_limits<double>::infinity();
  }

  auto loss = [&] { return evaluate_minibatch(disc, config, batch, noise, false).objective.total; };
  auto numeric  = concat(central_differences(disc.views(), loss, step));
  auto analytic = concat_views(std::as_const(ev.grad).views());
  out.relative_error = relative_error(analytic, numeric);
  out.parameters     = static_cast<std::size_t>(analytic.size());
  return out;
}

}  // namespace rkhskl::support
