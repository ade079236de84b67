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

// Runtime checks of the estimator's inequalities and the deviation-from-mean
// probability bound.

#include <algorithm>
#include <cmath>
#include <limits>

#include "rkhskl/errors.hpp"
#include "rkhskl/objectives.hpp"
#include "rkhskl/trainer.hpp"

namespace rkhskl {

/// Inputs of the deviation-from-mean bound. C_s and the Sobolev embedding norm
/// have no computable value here; they default to 1.
struct BoundInputs
{
  double epsilon       = 1.0;  // accuracy level
  double m             = 1.0;  // sample count
  double M             = 1.0;  // bound on |f|
  double R             = 1.0;  // RKHS ball radius
  double S_K           = 1.0;  // kernel complexity
  double C_s           = 1.0;
  double L_s_norm      = 1.0;
  double n             = 2.0;  // input dimension
  double h             = 4.0;  // smoothness, h > n
};

/// Lower bound on Prob(|KL_m - KL| <= epsilon):
///
///   1 - 2 exp[ (4 R C_s sqrt(S_K ||L_s||) / epsilon)^(2n/h) - m epsilon^2 / (4 M^2) ]
///
/// Returned as-is, so it can be negative (vacuous).
inline double deviation_bound(BoundInputs const &in)
{
  for (double v : {in.epsilon, in.m, in.M, in.R, in.S_K, in.C_s, in.L_s_norm, in.n, in.h})
  {
    if (!(v > 0.0) || !std::isfinite(v))
    {
      throw DomainError("deviation_bound: all inputs must be positive and finite");
    }
  }
  if (!(in.h > in.n))
  {
    throw DomainError("deviation_bound: smoothness h must exceed the input dimension n");
  }
  double const radius_term = 4.0 * in.R * in.C_s * std::sqrt(in.S_K * in.L_s_norm) / in.epsilon;
  double const covering    = std::pow(radius_term, 2.0 * in.n / in.h);
  double const hoeffding   = in.m * in.epsilon * in.epsilon / (4.0 * in.M * in.M);
  return 1.0 - 2.0 * std::exp(covering - hoeffding);
}

/// Outcome of re-checking a run's per-epoch records.
struct TraceCheckSummary
{
  int epochs_checked   = 0;
  int mebub_passed     = 0;
  int mebub_failed     = 0;
  int norm_passed      = 0;
  int norm_failed      = 0;
  int psd_checked      = 0;
  int psd_failed       = 0;
  double worst_mebub_slack = -std::numeric_limits<double>::infinity();
  double worst_norm_slack  = -std::numeric_limits<double>::infinity();
  double worst_eig_ratio   = std::numeric_limits<double>::infinity();

  bool passed() const
  {
    return mebub_failed == 0 && norm_failed == 0 && psd_failed == 0;
  }
};

inline constexpr double kPsdTolerance = 1e-8;

/// Re-derives pass/fail from the recorded slacks; the report is not modified.
inline TraceCheckSummary training_trace_checks(RunReport const &report)
{
  TraceCheckSummary out;
  for (auto const &t : report.traces)
  {
    ++out.epochs_checked;
    bool const mebub_ok = t.mebub_violations == 0 && t.mebub_satisfied &&
                          !(t.mebub_slack_max > kMebubTolerance);
    bool const norm_ok = t.norm_violations == 0 && !(t.norm_slack_max > kMebubTolerance);
    (mebub_ok ? out.mebub_passed : out.mebub_failed) += 1;
    (norm_ok ? out.norm_passed : out.norm_failed) += 1;
    out.worst_mebub_slack = std::max(out.worst_mebub_slack, t.mebub_slack_max);
    out.worst_norm_slack  = std::max(out.worst_norm_slack, t.norm_slack_max);
    for (double ratio : t.gram_eig_ratios)
    {
      ++out.psd_checked;
      if (!(ratio >= -kPsdTolerance))
      {
        ++out.psd_failed;
      }
      out.worst_eig_ratio = std::min(out.worst_eig_ratio, ratio);
    }
  }
  return out;
}

/// Boundedness constant observed during a run: the largest |f| seen.
inline double observed_bound_constant(RunReport const &report)
{
  return report.max_abs_f;
}

}  // namespace rkhskl
