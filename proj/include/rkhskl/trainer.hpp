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

// End-to-end KL estimation: minibatch objective and gradients, the epoch loop
// with best-loss early stopping, and repetition aggregation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <exception>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "rkhskl/data.hpp"
#include "rkhskl/errors.hpp"
#include "rkhskl/nn_core.hpp"
#include "rkhskl/objectives.hpp"
#include "rkhskl/random.hpp"
#include "rkhskl/rkhs_head.hpp"

namespace rkhskl {

enum class EstimatorKind
{
  rkhs_penalized,
  rkhs_unpenalized,
  plain_nn,
  dv_baseline,
  fgan_baseline,
};

enum class SampleMode
{
  finite,
  infinite,
};

enum class KlAccumulator
{
  mean_f,            // mean of f over the p-batch
  mean_log_sigmoid,  // mean of log sig(f) over the p-batch
};

inline std::string_view to_string(EstimatorKind kind)
{
  switch (kind)
  {
  case EstimatorKind::rkhs_penalized:
    return "rkhs_penalized";
  case EstimatorKind::rkhs_unpenalized:
    return "rkhs_unpenalized";
  case EstimatorKind::plain_nn:
    return "plain_nn";
  case EstimatorKind::dv_baseline:
    return "dv_baseline";
  case EstimatorKind::fgan_baseline:
    return "fgan_baseline";
  }
  return "unknown";
}

inline std::string_view to_string(SampleMode mode)
{
  return mode == SampleMode::finite ? "finite" : "infinite";
}

inline std::string_view to_string(KlAccumulator acc)
{
  return acc == KlAccumulator::mean_f ? "mean_f" : "mean_log_sigmoid";
}

inline EstimatorKind parse_estimator_kind(std::string_view text)
{
  for (auto kind : {EstimatorKind::rkhs_penalized, EstimatorKind::rkhs_unpenalized,
                    EstimatorKind::plain_nn, EstimatorKind::dv_baseline,
                    EstimatorKind::fgan_baseline})
  {
    if (text == to_string(kind))
    {
      return kind;
    }
  }
  throw ConfigError("unknown estimator kind '" + std::string(text) + "'");
}

inline SampleMode parse_sample_mode(std::string_view text)
{
  if (text == "finite")
  {
    return SampleMode::finite;
  }
  if (text == "infinite")
  {
    return SampleMode::infinite;
  }
  throw ConfigError("unknown sample mode '" + std::string(text) + "'");
}

inline KlAccumulator parse_kl_accumulator(std::string_view text)
{
  if (text == "mean_f")
  {
    return KlAccumulator::mean_f;
  }
  if (text == "mean_log_sigmoid")
  {
    return KlAccumulator::mean_log_sigmoid;
  }
  throw ConfigError("unknown KL accumulator '" + std::string(text) + "'");
}

/// Whether the estimator trains a stochastic (RKHS) last layer.
inline bool uses_stochastic_head(EstimatorKind kind)
{
  return kind == EstimatorKind::rkhs_penalized || kind == EstimatorKind::rkhs_unpenalized;
}

/// Whether the estimator reads the complexity penalty weight at all.
inline bool uses_penalty(EstimatorKind kind)
{
  return kind == EstimatorKind::rkhs_penalized;
}

struct TrainConfig
{
  Eigen::Index  m                    = 5000;
  Eigen::Index  b                    = 50;
  double        lr                   = 5e-3;
  double        lambda               = 5e-4;
  double        gamma                = 0.05;
  Eigen::Index  d                    = 8;
  Eigen::Index  d_readout            = 128;
  int           flat_n               = 100;
  int           iter_max             = 2000;
  std::uint64_t seed                 = 0;
  EstimatorKind estimator_kind       = EstimatorKind::rkhs_penalized;
  SampleMode    sample_mode          = SampleMode::finite;
  Eigen::Index  hidden_dim           = 25;
  KlAccumulator kl_accumulator       = KlAccumulator::mean_f;
  int           psd_checks_per_epoch = 0;

  void validate() const
  {
    auto fail = [](std::string const &what) { throw ConfigError("TrainConfig: " + what); };
    if (b < 1)
      fail("b must be >= 1");
    if (m < b)
      fail("m must be >= b");
    if (!(lr > 0.0))
      fail("lr must be positive");
    if (!(lambda >= 0.0))
      fail("lambda must be >= 0");
    if (!(gamma > 0.0))
      fail("gamma must be positive");
    if (d < 1 || d_readout < 1)
      fail("weight sample counts must be >= 1");
    if (flat_n < 1)
      fail("flat_n must be >= 1");
    if (iter_max < 1)
      fail("iter_max must be >= 1");
    if (hidden_dim < 1)
      fail("hidden_dim must be >= 1");
    if (psd_checks_per_epoch < 0)
      fail("psd_checks_per_epoch must be >= 0");
  }

  /// The tail m mod b samples are never visited in finite mode.
  bool truncates_tail() const
  {
    return m % b != 0;
  }

  double effective_lambda() const
  {
    return uses_penalty(estimator_kind) ? lambda : 0.0;
  }
};

/// Feature net plus last layer. Deterministic estimators keep factor == 0.
struct Discriminator
{
  FeatureNet     net;
  StochasticHead head;
  bool           stochastic = true;

  Discriminator zeros_like() const
  {
    return {net.zeros_like(), head.zeros_like(), stochastic};
  }

  std::vector<ParamView> views()
  {
    std::vector<ParamView> out;
    append_views(net, out);
    out.emplace_back(head.mean.data(), head.mean.size());
    out.emplace_back(head.factor.data(), head.factor.size());
    return out;
  }

  std::vector<ConstParamView> views() const
  {
    std::vector<ConstParamView> out;
    append_views(net, out);
    out.emplace_back(head.mean.data(), head.mean.size());
    out.emplace_back(head.factor.data(), head.factor.size());
    return out;
  }

  bool all_finite() const
  {
    return net.all_finite() && head.mean.allFinite() && head.factor.allFinite();
  }
};

/// RKHS estimators start from mean = 0, L L^T = I; the baselines get a
/// deterministic readout initialized like any dense layer.
inline Discriminator init_discriminator(TrainConfig const &config, Eigen::Index input_dim)
{
  Discriminator disc;
  disc.net = init_feature_net(input_dim, config.hidden_dim, config.hidden_dim, config.seed);
  disc.stochastic = uses_stochastic_head(config.estimator_kind);
  if (disc.stochastic)
  {
    disc.head = StochasticHead::standard(config.hidden_dim);
  }
  else
  {
    Rng rng      = make_rng(config.seed, 0x68656164);
    auto readout = init_dense_layer(config.hidden_dim, 1, rng);
    disc.head    = StochasticHead::deterministic(readout.weight.row(0).transpose());
  }
  return disc;
}

struct MinibatchEvaluation
{
  ObjectiveValue  objective;
  Eigen::MatrixXd features;  // 2b x p, p-rows first
  Eigen::VectorXd f_p;
  Eigen::VectorXd f_q;
  MinibatchGram   gram;
  EmbeddingStats  embedding;
  MebubCheck      mebub;
  bool            finite          = true;
  bool            penalty_clamped = false;
  Discriminator   grad;  // filled when requested
};

/// Objective of one joint minibatch for a fixed draw of the weight noise.
/// `noise_mean` is the average of the d standard-normal vectors, so the
/// effective readout is mean + L * noise_mean; it is ignored for
/// deterministic heads.
inline MinibatchEvaluation evaluate_minibatch(Discriminator const &disc, TrainConfig const &config,
                                              JointBatch const &batch,
                                              Eigen::VectorXd const &noise_mean, bool with_grad)
{
  auto const bp = batch.p.rows();
  auto const bq = batch.q.rows();
  auto const p  = disc.head.dim();
  if (bp == 0 || bq == 0)
  {
    throw ContractError("evaluate_minibatch: empty batch");
  }
  if (noise_mean.size() != p)
  {
    throw ContractError("evaluate_minibatch: noise dimension does not match head");
  }

  Eigen::MatrixXd joint(bp + bq, batch.p.cols());
  joint << batch.p, batch.q;
  auto fwd = forward(disc.net, joint);

  MinibatchEvaluation ev;
  ev.features = std::move(fwd.features);
  auto const lower = disc.head.factor.triangularView<Eigen::Lower>();
  Eigen::VectorXd const readout =
      disc.stochastic ? Eigen::VectorXd(disc.head.mean + lower * noise_mean) : disc.head.mean;
  Eigen::VectorXd const f = ev.features * readout;
  ev.f_p = f.head(bp);
  ev.f_q = f.tail(bq);

  ev.gram      = minibatch_gram(ev.features, bp, disc.head);
  ev.embedding = embedding_stats(ev.f_p, ev.f_q, ev.gram);

  double const logistic = logistic_objective(ev.f_p, ev.f_q);
  ev.mebub              = mebub_check(logistic, ev.f_p, ev.f_q);

  Eigen::VectorXd grad_p;
  Eigen::VectorXd grad_q;
  switch (config.estimator_kind)
  {
  case EstimatorKind::dv_baseline:
  case EstimatorKind::fgan_baseline:
  {
    auto bound = config.estimator_kind == EstimatorKind::dv_baseline ? dv_objective(ev.f_p, ev.f_q)
                                                                     : fgan_kl_objective(ev.f_p, ev.f_q);
    ev.objective.loss_d   = -bound.value;
    ev.objective.kl_batch = bound.value;
    ev.finite             = bound.finite;
    if (bound.finite)
    {
      grad_p = -bound.grad_p;
      grad_q = -bound.grad_q;
    }
    break;
  }
  default:
    ev.objective.loss_d   = logistic;
    ev.objective.kl_batch = config.kl_accumulator == KlAccumulator::mean_f
                                ? kl_readout(ev.f_p)
                                : kl_readout_log_sigmoid(ev.f_p);
    if (with_grad)
    {
      logistic_objective_grad(ev.f_p, ev.f_q, grad_p, grad_q);
    }
    break;
  }

  Penalty penalty;
  double const lambda = config.effective_lambda();
  if (lambda > 0.0)
  {
    penalty            = complexity_penalty(ev.gram.s_mini, lambda, config.gamma);
    ev.penalty_clamped = penalty.clamped;
  }
  ev.objective.penalty = penalty.value;
  ev.objective.total   = ev.objective.loss_d + penalty.value;
  ev.finite            = ev.finite && std::isfinite(ev.objective.total) && f.allFinite();

  if (!with_grad || !ev.finite)
  {
    return ev;
  }

  // d total / d f, then through f = Phi * readout
  Eigen::VectorXd grad_f(bp + bq);
  grad_f << grad_p, grad_q;

  ev.grad                      = disc.zeros_like();
  Eigen::MatrixXd grad_features = grad_f * readout.transpose();
  Eigen::VectorXd const v      = ev.features.transpose() * grad_f;
  ev.grad.head.mean            = v;
  if (disc.stochastic)
  {
    ev.grad.head.factor = v * noise_mean.transpose();
  }

  // penalty subgradient flows through the argmax Gram entry only
  if (penalty.derivative != 0.0)
  {
    double const scale        = penalty.derivative;
    auto const a              = ev.gram.argmax_row;
    auto const c              = ev.gram.argmax_col;
    Eigen::VectorXd const phi_a = ev.features.row(a).transpose();
    Eigen::VectorXd const phi_c = ev.features.row(c).transpose();
    double const mean_a       = disc.head.mean.dot(phi_a);
    double const mean_c       = disc.head.mean.dot(phi_c);
    Eigen::VectorXd const u_a = lower.transpose() * phi_a;
    Eigen::VectorXd const u_c = lower.transpose() * phi_c;

    grad_features.row(a) += scale * (disc.head.mean * mean_c + lower * u_c).transpose();
    grad_features.row(c) += scale * (disc.head.mean * mean_a + lower * u_a).transpose();
    ev.grad.head.mean += scale * (phi_a * mean_c + phi_c * mean_a);
    if (disc.stochastic)
    {
      ev.grad.head.factor += scale * (phi_a * u_c.transpose() + phi_c * u_a.transpose());
    }
  }
  ev.grad.head.factor.triangularView<Eigen::StrictlyUpper>().setZero();

  ev.grad.net = backward(disc.net, fwd.tape, grad_features);
  return ev;
}

/// Per-epoch record of the training run.
struct EpochTrace
{
  int                 epoch          = 0;
  double              loss           = 0.0;  // mean adversarial loss over the epoch
  double              kl_epoch       = 0.0;
  double              s_mini_max     = 0.0;
  double              norm_sum       = 0.0;  // ||mu_p + mu_q|| on the last batch
  double              norm_diff      = 0.0;  // ||mu_p - mu_q|| on the last batch
  double              norm_slack_max = -std::numeric_limits<double>::infinity();
  double              mebub_slack_max = -std::numeric_limits<double>::infinity();
  int                 mebub_violations = 0;
  int                 norm_violations  = 0;
  bool                mebub_satisfied  = true;
  std::vector<double> gram_eig_ratios;  // min / max eigenvalue of spot-checked Grams
};

struct RunReport
{
  double                  kl_estimate = std::numeric_limits<double>::quiet_NaN();
  double                  best_loss   = std::numeric_limits<double>::infinity();
  int                     best_epoch  = 0;
  bool                    stable      = true;
  std::string             failure;
  double                  max_abs_f       = 0.0;
  double                  s_mini_final    = 0.0;
  int                     penalty_clamps  = 0;
  bool                    truncated_tail  = false;
  std::uint64_t           seed            = 0;
  std::vector<EpochTrace> traces;
};

/// Norm inequality ||mu_p + mu_q|| <= 2 sqrt(S_mini); relative tolerance so
/// large kernels do not trip on roundoff.
inline double norm_bound_slack(EmbeddingStats const &stats, double s_mini)
{
  double const bound = 2.0 * std::sqrt(std::max(0.0, s_mini));
  return (stats.norm_sum - bound) / std::max(1.0, bound);
}

inline double gram_eigen_ratio(MinibatchGram const &gram)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.entries, Eigen::EigenvaluesOnly);
  double const lo = eig.eigenvalues().minCoeff();
  double const hi = eig.eigenvalues().maxCoeff();
  if (hi <= 0.0)
  {
    return lo < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  return lo / hi;
}

/// Produces the minibatches of one epoch.
using EpochSource = std::function<std::vector<JointBatch>(Rng &)>;

namespace detail {

inline constexpr std::uint64_t kDataStream  = 0x64617461;
inline constexpr std::uint64_t kNoiseStream = 0x6e6f6973;

inline RunReport run_epochs(TrainConfig const &config, Eigen::Index input_dim,
                            EpochSource const &next_epoch, Rng &data_rng)
{
  RunReport report;
  report.seed           = config.seed;
  report.truncated_tail = config.sample_mode == SampleMode::finite && config.truncates_tail();

  Discriminator disc = init_discriminator(config, input_dim);
  AdamOptimizer optimizer(AdamSettings{config.lr});
  Rng noise_rng = make_rng(config.seed, kNoiseStream);

  double best_kl = std::numeric_limits<double>::quiet_NaN();
  int    idx     = 0;
  auto   fail    = [&](std::string why) {
    report.stable      = false;
    report.failure     = std::move(why);
    report.kl_estimate = std::numeric_limits<double>::quiet_NaN();
    return report;
  };

  for (int iter = 1; iter <= config.iter_max; ++iter)
  {
    auto const batches = next_epoch(data_rng);
    if (batches.empty())
    {
      throw ContractError("run_epochs: epoch produced no minibatches");
    }

    EpochTrace trace;
    trace.epoch    = iter;
    double kl_sum  = 0.0;
    double adv_sum = 0.0;
    trace.s_mini_max = -std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < batches.size(); ++k)
    {
      auto const &batch = batches[k];
      Eigen::VectorXd noise_mean = Eigen::VectorXd::Zero(disc.head.dim());
      if (disc.stochastic)
      {
        noise_mean = sample_weights(disc.head, config.d, noise_rng).mean_noise();
      }
      auto ev = evaluate_minibatch(disc, config, batch, noise_mean, true);
      if (!ev.finite)
      {
        report.traces.push_back(trace);
        return fail("non-finite objective at epoch " + std::to_string(iter));
      }

      // KL readout with a larger weight sample than the training step uses
      double kl_batch = ev.objective.kl_batch;
      if (disc.stochastic)
      {
        auto const readout = sample_weights(disc.head, config.d_readout, noise_rng);
        Eigen::VectorXd const f_eval = discriminator_value(ev.features.topRows(batch.p.rows()), readout);
        kl_batch = config.kl_accumulator == KlAccumulator::mean_f ? kl_readout(f_eval)
                                                                      : kl_readout_log_sigmoid(f_eval);
      }
      kl_sum += kl_batch;
      adv_sum += ev.objective.loss_d;

      trace.s_mini_max = std::max(trace.s_mini_max, ev.gram.s_mini);
      trace.norm_sum   = ev.embedding.norm_sum;
      trace.norm_diff  = ev.embedding.norm_diff;
      double const norm_slack = norm_bound_slack(ev.embedding, ev.gram.s_mini);
      trace.norm_slack_max    = std::max(trace.norm_slack_max, norm_slack);
      if (norm_slack > kMebubTolerance)
      {
        ++trace.norm_violations;
      }
      trace.mebub_slack_max = std::max(trace.mebub_slack_max, ev.mebub.slack());
      if (!ev.mebub.satisfied)
      {
        ++trace.mebub_violations;
        trace.mebub_satisfied = false;
      }
      if (static_cast<int>(k) < config.psd_checks_per_epoch)
      {
        trace.gram_eig_ratios.push_back(gram_eigen_ratio(ev.gram));
      }
      report.max_abs_f = std::max({report.max_abs_f, ev.f_p.cwiseAbs().maxCoeff(),
                                   ev.f_q.cwiseAbs().maxCoeff()});
      report.s_mini_final = ev.gram.s_mini;
      report.penalty_clamps += ev.penalty_clamped ? 1 : 0;

      auto params = disc.views();
      auto grads  = std::as_const(ev.grad).views();
      try
      {
        optimizer.step(params, grads);
      }
      catch (TrainingError const &e)
      {
        report.traces.push_back(trace);
        return fail(e.what());
      }
      if (!disc.all_finite())
      {
        report.traces.push_back(trace);
        return fail("non-finite parameters at epoch " + std::to_string(iter));
      }
    }

    auto const n_batch = static_cast<double>(batches.size());
    trace.loss     = adv_sum / n_batch;
    trace.kl_epoch = kl_sum / n_batch;
    report.traces.push_back(trace);

    if (trace.loss < report.best_loss)
    {
      report.best_loss  = trace.loss;
      report.best_epoch = iter;
      best_kl           = trace.kl_epoch;
      idx               = iter;
    }
    else if (iter > idx + config.flat_n)
    {
      break;
    }
  }
  report.kl_estimate = best_kl;
  return report;
}

}  // namespace detail

/// Trains on two fixed sample pools (rows are points).
inline RunReport train_on_pools(TrainConfig const &config, Eigen::MatrixXd const &pool_p,
                                Eigen::MatrixXd const &pool_q)
{
  config.validate();
  if (pool_p.rows() != pool_q.rows() || pool_p.cols() != pool_q.cols() || pool_p.rows() < config.b)
  {
    throw ConfigError("train_on_pools: pools must have equal shape with at least b rows");
  }
  if (!pool_p.allFinite() || !pool_q.allFinite())
  {
    throw InputError("train_on_pools: non-finite samples");
  }
  Rng data_rng = make_rng(config.seed, detail::kDataStream);
  EpochSource source = [&](Rng &rng) { return minibatches(pool_p, pool_q, config.b, rng); };
  return detail::run_epochs(config, pool_p.cols(), source, data_rng);
}

/// Fresh minibatches straight from the distributions; floor(m / b) per epoch.
inline RunReport infinite_sample_driver(TrainConfig const &config, GaussianSpec const &p,
                                        GaussianSpec const &q)
{
  config.validate();
  if (config.sample_mode != SampleMode::infinite)
  {
    throw ConfigError("infinite_sample_driver: sample_mode must be infinite");
  }
  if (p.dim() != q.dim())
  {
    throw ConfigError("infinite_sample_driver: p and q dimensions differ");
  }
  Rng data_rng = make_rng(config.seed, detail::kDataStream);
  EpochSource source = [&](Rng &rng) {
    std::vector<JointBatch> out;
    auto const count = config.m / config.b;
    out.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index k = 0; k < count; ++k)
    {
      JointBatch batch;
      batch.p = sample(p, config.b, rng);
      batch.q = sample(q, config.b, rng);
      out.push_back(std::move(batch));
    }
    return out;
  };
  return detail::run_epochs(config, p.dim(), source, data_rng);
}

/// One full estimation run. Finite mode draws m points from each distribution
/// once and trains on those pools.
inline RunReport train_estimate(TrainConfig const &config, GaussianSpec const &p, GaussianSpec const &q)
{
  config.validate();
  if (config.sample_mode == SampleMode::infinite)
  {
    return infinite_sample_driver(config, p, q);
  }
  if (p.dim() != q.dim())
  {
    throw ConfigError("train_estimate: p and q dimensions differ");
  }
  // pools come from their own stream so paired seeds share data across estimators
  Rng pool_rng = make_rng(config.seed, 0x706f6f6c);
  Eigen::MatrixXd const pool_p = sample(p, config.m, pool_rng);
  Eigen::MatrixXd const pool_q = sample(q, config.m, pool_rng);
  return train_on_pools(config, pool_p, pool_q);
}

inline RunReport train_estimate(TrainConfig const &config, Scenario const &scenario)
{
  return train_estimate(config, scenario.p, scenario.q);
}

/// Runs fn(0..count-1) on up to `jobs` threads. Each index runs exactly once.
inline void parallel_for(std::size_t count, unsigned jobs, std::function<void(std::size_t)> const &fn)
{
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1)
  {
    for (std::size_t i = 0; i < count; ++i)
    {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w)
    {
      workers.emplace_back([&, w] {
        try
        {
          for (std::size_t i = next++; i < count; i = next++)
          {
            fn(i);
          }
        }
        catch (...)
        {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto const &e : errors)
  {
    if (e)
    {
      std::rethrow_exception(e);
    }
  }
}

struct AggregateReport
{
  TrainConfig            config;
  std::vector<RunReport> runs;
  std::vector<double>    estimates;  // one per run, NaN for unstable runs
  std::optional<double>  mean;       // over stable runs
  std::optional<double>  stddev;       // unbiased; 0 for a single stable run
  int                    n          = 0;
  int                    n_unstable = 0;

  bool all_unstable() const
  {
    return n > 0 && n_unstable == n;
  }
};

inline AggregateReport aggregate(TrainConfig const &config, std::vector<RunReport> runs)
{
  AggregateReport agg;
  agg.config = config;
  agg.n      = static_cast<int>(runs.size());
  std::vector<double> stable;
  for (auto const &run : runs)
  {
    agg.estimates.push_back(run.kl_estimate);
    if (run.stable && std::isfinite(run.kl_estimate))
    {
      stable.push_back(run.kl_estimate);
    }
    else
    {
      ++agg.n_unstable;
    }
  }
  agg.runs = std::move(runs);
  if (!stable.empty())
  {
    double const mean = std::accumulate(stable.begin(), stable.end(), 0.0) / static_cast<double>(stable.size());
    double ss = 0.0;
    for (double v : stable)
    {
      ss += (v - mean) * (v - mean);
    }
    agg.mean = mean;
    agg.stddev = stable.size() > 1 ? std::sqrt(ss / static_cast<double>(stable.size() - 1)) : 0.0;
  }
  return agg;
}

/// n_reps runs with seeds base_seed .. base_seed + n_reps - 1.
inline AggregateReport run_repetitions(TrainConfig const &config, Scenario const &scenario, int n_reps,
                                       std::uint64_t base_seed, unsigned jobs = 1)
{
  if (n_reps < 1)
  {
    throw ConfigError("run_repetitions: n_reps must be >= 1");
  }
  config.validate();
  std::vector<RunReport> runs(static_cast<std::size_t>(n_reps));
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    TrainConfig rep = config;
    rep.seed        = base_seed + i;
    runs[i]         = train_estimate(rep, scenario);
  });
  TrainConfig echo = config;
  echo.seed        = base_seed;
  return aggregate(echo, std::move(runs));
}

}  // namespace rkhskl
