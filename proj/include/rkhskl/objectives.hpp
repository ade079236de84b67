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

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "rkhskl/errors.hpp"

namespace rkhskl {

inline constexpr double kSoftplusThreshold = 30.0;
inline constexpr double kSMiniFloor        = 1e-12;
inline constexpr double kMebubTolerance    = 1e-9;

/// Exponent arguments above this are treated as overflow by the unstabilized
/// f-GAN baseline. It is the single-precision exp range, which is where the
/// baseline breaks down in practice.
inline constexpr double kExpOverflowArgument = 88.72283905206835;

/// log(1 + e^z), exact to ~1e-13 relative on both tails.
inline double softplus(double z)
{
  if (z > kSoftplusThreshold)
  {
    return z + std::exp(-z);
  }
  if (z < -kSoftplusThreshold)
  {
    return std::exp(z);
  }
  return std::log1p(std::exp(z));
}

inline double log_sigmoid(double z)
{
  return -softplus(-z);
}

inline double sigmoid(double z)
{
  if (z >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double const e = std::exp(z);
  return e / (1.0 + e);
}

struct ObjectiveValue
{
  double loss_d   = 0.0;
  double penalty  = 0.0;
  double total    = 0.0;
  double kl_batch = 0.0;
};

/// loss_d = -(1/b) sum log sig(f(x_i)) - (1/b) sum log sig(-f(y_j)).
/// Minimizing it maximizes the logistic discrimination objective.
inline double logistic_objective(Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q)
{
  if (f_p.size() == 0 || f_q.size() == 0)
  {
    throw ContractError("logistic_objective: empty batch");
  }
  double sum_p = 0.0;
  for (double v : f_p)
  {
    sum_p += softplus(-v);
  }
  double sum_q = 0.0;
  for (double v : f_q)
  {
    sum_q += softplus(v);
  }
  return sum_p / static_cast<double>(f_p.size()) + sum_q / static_cast<double>(f_q.size());
}

/// dloss_d/df on each side.
inline void logistic_objective_grad(Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q,
                                    Eigen::VectorXd &grad_p, Eigen::VectorXd &grad_q)
{
  auto const bp = static_cast<double>(f_p.size());
  auto const bq = static_cast<double>(f_q.size());
  grad_p = f_p.unaryExpr([bp](double v) { return -sigmoid(-v) / bp; });
  grad_q = f_q.unaryExpr([bq](double v) { return sigmoid(v) / bq; });
}

struct Penalty
{
  double value      = 0.0;  // lambda * max(S, floor)^gamma
  double derivative = 0.0;  // d value / d S, zero while clamped
  bool   clamped    = false;
};

inline Penalty complexity_penalty(double s_mini, double lambda, double gamma)
{
  if (lambda < 0.0 || !(gamma > 0.0))
  {
    throw ConfigError("complexity_penalty: need lambda >= 0 and gamma > 0");
  }
  Penalty out;
  out.clamped   = !(s_mini > kSMiniFloor);
  double const s = out.clamped ? kSMiniFloor : s_mini;
  out.value      = lambda * std::pow(s, gamma);
  out.derivative = out.clamped ? 0.0 : lambda * gamma * std::pow(s, gamma - 1.0);
  return out;
}

inline double penalized_objective(double loss_d, double s_mini, double lambda, double gamma)
{
  return loss_d + complexity_penalty(s_mini, lambda, gamma).value;
}

/// KL_m(f) = mean of f over the p-samples.
inline double kl_readout(Eigen::VectorXd const &f_p)
{
  if (f_p.size() == 0)
  {
    throw ContractError("kl_readout: empty batch");
  }
  return f_p.mean();
}

/// Mean of log sig(f) over the p-samples; the accumulator printed in the
/// published pseudo-code, kept for comparison runs.
inline double kl_readout_log_sigmoid(Eigen::VectorXd const &f_p)
{
  if (f_p.size() == 0)
  {
    throw ContractError("kl_readout_log_sigmoid: empty batch");
  }
  return f_p.unaryExpr([](double v) { return log_sigmoid(v); }).mean();
}

/// Value of a variational lower bound plus its gradient w.r.t. f. `finite`
/// is false when the bound could not be represented.
struct BoundValue
{
  double          value  = 0.0;
  bool            finite = true;
  Eigen::VectorXd grad_p;
  Eigen::VectorXd grad_q;
};

/// Donsker-Varadhan bound mean(f_p) - log mean(exp(f_q)), log-sum-exp stabilized.
inline BoundValue dv_objective(Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q)
{
  if (f_p.size() == 0 || f_q.size() == 0)
  {
    throw ContractError("dv_objective: empty batch");
  }
  BoundValue out;
  if (!f_p.allFinite() || !f_q.allFinite())
  {
    out.finite = false;
    out.value  = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  auto const   bq    = static_cast<double>(f_q.size());
  double const shift = f_q.maxCoeff();
  Eigen::VectorXd const weights = (f_q.array() - shift).exp().matrix();
  double const total = weights.sum();
  double const log_mean_exp = shift + std::log(total) - std::log(bq);

  out.value  = f_p.mean() - log_mean_exp;
  out.finite = std::isfinite(out.value);
  out.grad_p = Eigen::VectorXd::Constant(f_p.size(), 1.0 / static_cast<double>(f_p.size()));
  out.grad_q = -weights / total;
  return out;
}

/// f-GAN form of the KL bound: mean(f_p) - mean(exp(f_q - 1)). No
/// stabilization; see kExpOverflowArgument.
inline BoundValue fgan_kl_objective(Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q)
{
  if (f_p.size() == 0 || f_q.size() == 0)
  {
    throw ContractError("fgan_kl_objective: empty batch");
  }
  BoundValue out;
  if (!f_p.allFinite() || !f_q.allFinite() || (f_q.array() - 1.0).maxCoeff() > kExpOverflowArgument)
  {
    out.finite = false;
    out.value  = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  auto const bq = static_cast<double>(f_q.size());
  Eigen::VectorXd const e = (f_q.array() - 1.0).exp().matrix();
  out.value  = f_p.mean() - e.sum() / bq;
  out.finite = std::isfinite(out.value);
  out.grad_p = Eigen::VectorXd::Constant(f_p.size(), 1.0 / static_cast<double>(f_p.size()));
  out.grad_q = -e / bq;
  return out;
}

/// Mean-embedding upper bound on the logistic objective:
///   -loss_d <= log sig(mean f_p - mean f_q).
struct MebubCheck
{
  double lhs       = 0.0;
  double rhs       = 0.0;
  bool   satisfied = true;

  double slack() const
  {
    return lhs - rhs;
  }
};

inline MebubCheck mebub_check(double loss_d, Eigen::VectorXd const &f_p, Eigen::VectorXd const &f_q)
{
  if (f_p.size() == 0 || f_q.size() == 0)
  {
    throw ContractError("mebub_check: empty batch");
  }
  MebubCheck out;
  out.lhs       = -loss_d;
  out.rhs       = log_sigmoid(f_p.mean() - f_q.mean());
  out.satisfied = out.lhs <= out.rhs + kMebubTolerance;
  return out;
}

}  // namespace rkhskl
