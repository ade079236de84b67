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

// Gaussian scenarios, samplers and minibatching for the estimation experiments.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "rkhskl/errors.hpp"
#include "rkhskl/random.hpp"

namespace rkhskl {

/// Multivariate normal with a cached square-root factor (factor * factor^T = cov).
class GaussianSpec
{
public:
  GaussianSpec() = default;

  GaussianSpec(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean))
    , cov_(std::move(cov))
  {
    auto const n = mean_.size();
    if (n < 1 || cov_.rows() != n || cov_.cols() != n)
    {
      throw DomainError("GaussianSpec: covariance must be n x n with n = mean size >= 1");
    }
    if (!mean_.allFinite() || !cov_.allFinite())
    {
      throw DomainError("GaussianSpec: non-finite parameters");
    }
    double const scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    {
      throw DomainError("GaussianSpec: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
    {
      throw DomainError("GaussianSpec: covariance is not positive semidefinite");
    }
    factor_ = compute_factor(cov_);
  }

  Eigen::Index dim() const
  {
    return mean_.size();
  }
  Eigen::VectorXd const &mean() const
  {
    return mean_;
  }
  Eigen::MatrixXd const &cov() const
  {
    return cov_;
  }
  Eigen::MatrixXd const &factor() const
  {
    return factor_;
  }

private:
  // Cholesky when positive definite; otherwise pivoted LDL^T with the
  // (roundoff-negative) pivots clamped to zero. The latter is lower
  // triangular only up to the pivot permutation.
  static Eigen::MatrixXd compute_factor(Eigen::MatrixXd const &cov)
  {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success)
    {
      return llt.matrixL();
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    Eigen::VectorXd const d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd lower   = ldlt.matrixL();
    Eigen::MatrixXd factor  = ldlt.transpositionsP().transpose() * (lower * d.asDiagonal());
    return factor;
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

/// KL(p || q) for two Gaussians of the same dimension.
inline double analytic_gaussian_kl(GaussianSpec const &p, GaussianSpec const &q)
{
  if (p.dim() != q.dim())
  {
    throw DomainError("analytic_gaussian_kl: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> q_llt(q.cov());
  if (q_llt.info() != Eigen::Success)
  {
    throw DomainError("analytic_gaussian_kl: q covariance is singular");
  }
  Eigen::LLT<Eigen::MatrixXd> p_llt(p.cov());
  if (p_llt.info() != Eigen::Success)
  {
    throw DomainError("analytic_gaussian_kl: p covariance is singular, divergence is infinite");
  }
  auto const n = static_cast<double>(p.dim());
  Eigen::VectorXd const delta = q.mean() - p.mean();

  double const trace_term = q_llt.solve(p.cov()).trace();
  double const quad_term  = delta.dot(q_llt.solve(delta));
  double const logdet_q   = 2.0 * q_llt.matrixLLT().diagonal().array().log().sum();
  double const logdet_p   = 2.0 * p_llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * (trace_term + quad_term - n + logdet_q - logdet_p);
}

struct Scenario
{
  GaussianSpec p;
  GaussianSpec q;
  double       true_kl = 0.0;
  std::string  name;
};

/// p = N(0, I2), q = N((delta, 0), I2) with delta = sqrt(2 * target_kl), so the
/// divergence equals the target exactly.
inline Scenario make_scenario(double target_kl)
{
  if (!(target_kl >= 0.0) || !std::isfinite(target_kl))
  {
    throw DomainError("make_scenario: target KL must be a finite non-negative number");
  }
  double const shift = std::sqrt(2.0 * target_kl);
  Scenario s;
  s.p       = GaussianSpec(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  s.q       = GaussianSpec(Eigen::Vector2d(shift, 0.0), Eigen::Matrix2d::Identity());
  s.true_kl = analytic_gaussian_kl(s.p, s.q);
  s.name    = "shift2d";
  return s;
}

namespace detail {

inline GaussianSpec gaussian_from_json(nlohmann::json const &j, char const *which)
{
  if (!j.is_object() || !j.contains("mean") || !j.contains("cov"))
  {
    throw InputError(std::string("scenario: '") + which + "' needs \"mean\" and \"cov\"");
  }
  auto const mean_values = j.at("mean").get<std::vector<double>>();
  auto const cov_rows    = j.at("cov").get<std::vector<std::vector<double>>>();
  auto const n           = static_cast<Eigen::Index>(mean_values.size());
  if (static_cast<Eigen::Index>(cov_rows.size()) != n)
  {
    throw InputError(std::string("scenario: '") + which + "' covariance has wrong row count");
  }
  Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd const>(mean_values.data(), n);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
  {
    if (static_cast<Eigen::Index>(cov_rows[static_cast<std::size_t>(r)].size()) != n)
    {
      throw InputError(std::string("scenario: '") + which + "' covariance is not square");
    }
    for (Eigen::Index c = 0; c < n; ++c)
    {
      cov(r, c) = cov_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return GaussianSpec(std::move(mean), std::move(cov));
}

inline nlohmann::json gaussian_to_json(GaussianSpec const &g)
{
  std::vector<std::vector<double>> cov;
  for (Eigen::Index r = 0; r < g.dim(); ++r)
  {
    cov.emplace_back(g.cov().row(r).begin(), g.cov().row(r).end());
  }
  return {{"mean", std::vector<double>(g.mean().begin(), g.mean().end())}, {"cov", cov}};
}

}  // namespace detail

/// {"p": {"mean": [...], "cov": [[...]]}, "q": {...}, "name": optional}
inline Scenario scenario_from_json(nlohmann::json const &j)
{
  if (!j.is_object() || !j.contains("p") || !j.contains("q"))
  {
    throw InputError("scenario: expected an object with \"p\" and \"q\"");
  }
  Scenario s;
  s.p = detail::gaussian_from_json(j.at("p"), "p");
  s.q = detail::gaussian_from_json(j.at("q"), "q");
  if (s.p.dim() != s.q.dim())
  {
    throw InputError("scenario: p and q have different dimensions");
  }
  s.true_kl = analytic_gaussian_kl(s.p, s.q);
  s.name    = j.value("name", std::string("custom"));
  return s;
}

inline nlohmann::json scenario_to_json(Scenario const &s)
{
  return {{"name", s.name},
          {"p", detail::gaussian_to_json(s.p)},
          {"q", detail::gaussian_to_json(s.q)},
          {"true_kl", s.true_kl}};
}

inline Scenario load_scenario(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open scenario file " + path);
  }
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw InputError("scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

/// count x n matrix of i.i.d. draws.
inline Eigen::MatrixXd sample(GaussianSpec const &spec, Eigen::Index count, Rng &rng)
{
  if (count < 1)
  {
    throw ConfigError("sample: count must be >= 1");
  }
  Eigen::MatrixXd z = standard_normal(spec.dim(), count, rng);
  Eigen::MatrixXd out = (spec.factor() * z).transpose();
  out.rowwise() += spec.mean().transpose();
  return out;
}

/// b points from each distribution.
struct JointBatch
{
  Eigen::MatrixXd p;
  Eigen::MatrixXd q;
};

/// One epoch over two equal-size pools: each pool is shuffled independently
/// and cut into floor(m / b) aligned batches; the tail is dropped.
inline std::vector<JointBatch> minibatches(Eigen::MatrixXd const &pool_p,
                                           Eigen::MatrixXd const &pool_q, Eigen::Index b, Rng &rng)
{
  if (pool_p.rows() != pool_q.rows() || pool_p.cols() != pool_q.cols())
  {
    throw ConfigError("minibatches: pools must have equal size and dimension");
  }
  auto const m = pool_p.rows();
  if (b < 1 || b > m)
  {
    throw ConfigError("minibatches: batch size " + std::to_string(b) + " not in [1, " +
                      std::to_string(m) + "]");
  }
  std::vector<Eigen::Index> order_p(static_cast<std::size_t>(m));
  std::vector<Eigen::Index> order_q(static_cast<std::size_t>(m));
  std::iota(order_p.begin(), order_p.end(), Eigen::Index{0});
  std::iota(order_q.begin(), order_q.end(), Eigen::Index{0});
  std::shuffle(order_p.begin(), order_p.end(), rng);
  std::shuffle(order_q.begin(), order_q.end(), rng);

  auto const count = m / b;
  std::vector<JointBatch> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k)
  {
    JointBatch batch{Eigen::MatrixXd(b, pool_p.cols()), Eigen::MatrixXd(b, pool_q.cols())};
    for (Eigen::Index i = 0; i < b; ++i)
    {
      auto const slot = static_cast<std::size_t>(k * b + i);
      batch.p.row(i)  = pool_p.row(order_p[slot]);
      batch.q.row(i)  = pool_q.row(order_q[slot]);
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace rkhskl
