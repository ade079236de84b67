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

// Experiment plans: scenario x estimator x lambda x hidden-dim sweeps with
// repetitions, CSV/JSON emission and a text summary.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rkhskl/data.hpp"
#include "rkhskl/diagnostics.hpp"
#include "rkhskl/errors.hpp"
#include "rkhskl/trainer.hpp"

namespace rkhskl {

/// Estimator plus sampling regime. Written as "plain_nn" or "plain_nn:infinite".
struct Arm
{
  EstimatorKind kind = EstimatorKind::rkhs_penalized;
  SampleMode    mode = SampleMode::finite;

  std::string label() const
  {
    std::string out(to_string(kind));
    if (mode == SampleMode::infinite)
    {
      out += ":infinite";
    }
    return out;
  }

  friend bool operator==(Arm const &, Arm const &) = default;
};

inline Arm parse_arm(std::string_view text, SampleMode default_mode)
{
  Arm arm;
  arm.mode        = default_mode;
  auto const colon = text.find(':');
  arm.kind        = parse_estimator_kind(text.substr(0, colon));
  if (colon != std::string_view::npos)
  {
    arm.mode = parse_sample_mode(text.substr(colon + 1));
  }
  return arm;
}

struct ExperimentPlan
{
  std::vector<Scenario>     scenarios;
  std::vector<Arm>          arms;
  std::vector<double>       lambdas{5e-4};
  std::vector<Eigen::Index> hidden_dims{25};
  int                       n_reps    = 1;
  std::uint64_t             base_seed = 0;
  std::string               output_dir = "results";
  TrainConfig               config_template;
  unsigned                  jobs = 1;

  void validate() const
  {
    if (scenarios.empty() || arms.empty() || lambdas.empty() || hidden_dims.empty())
    {
      throw ConfigError("ExperimentPlan: every grid must be non-empty");
    }
    if (n_reps < 1)
    {
      throw ConfigError("ExperimentPlan: n_reps must be >= 1");
    }
    if (output_dir.empty())
    {
      throw ConfigError("ExperimentPlan: output directory is required");
    }
    config_template.validate();
  }
};

struct PlanCell
{
  std::size_t index = 0;
  Scenario    scenario;
  Arm         arm;
  TrainConfig config;
};

/// Cross product of the grids in scenario, arm, lambda, hidden order. Arms
/// that ignore lambda get a single cell with lambda = 0.
inline std::vector<PlanCell> expand_plan(ExperimentPlan const &plan)
{
  plan.validate();
  std::vector<PlanCell> cells;
  for (auto const &scenario : plan.scenarios)
  {
    for (auto const &arm : plan.arms)
    {
      std::vector<double> lambdas = plan.lambdas;
      if (!uses_penalty(arm.kind))
      {
        lambdas = {0.0};
      }
      for (double lambda : lambdas)
      {
        for (auto hidden : plan.hidden_dims)
        {
          PlanCell cell;
          cell.index                 = cells.size();
          cell.scenario              = scenario;
          cell.arm                   = arm;
          cell.config                = plan.config_template;
          cell.config.estimator_kind = arm.kind;
          cell.config.sample_mode    = arm.mode;
          cell.config.lambda         = lambda;
          cell.config.hidden_dim     = hidden;
          cell.config.seed           = plan.base_seed;
          cell.config.validate();
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

struct CellResult
{
  PlanCell        cell;
  AggregateReport aggregate;
};

inline constexpr char const *kCsvHeader =
    "scenario_kl,estimator,lambda,gamma,hidden_dim,d,seed,kl_estimate,best_loss,best_epoch,stable,"
    "s_mini_final,mebub_violations";

namespace detail {

inline std::string format_real(double v)
{
  if (std::isnan(v))
  {
    return "nan";
  }
  if (std::isinf(v))
  {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline int mebub_violation_count(RunReport const &run)
{
  int total = 0;
  for (auto const &t : run.traces)
  {
    total += t.mebub_violations;
  }
  return total;
}

inline std::string utc_timestamp()
{
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline std::string csv_row(PlanCell const &cell, RunReport const &run)
{
  using detail::format_real;
  std::ostringstream row;
  row << format_real(cell.scenario.true_kl) << ',' << cell.arm.label() << ','
      << format_real(cell.config.lambda) << ',' << format_real(cell.config.gamma) << ','
      << cell.config.hidden_dim << ',' << cell.config.d << ',' << run.seed << ','
      << format_real(run.kl_estimate) << ',' << format_real(run.best_loss) << ',' << run.best_epoch
      << ',' << (run.stable ? "true" : "false") << ',' << format_real(run.s_mini_final) << ','
      << detail::mebub_violation_count(run);
  return row.str();
}

inline nlohmann::json config_to_json(TrainConfig const &c)
{
  return {{"m", c.m},
          {"b", c.b},
          {"lr", c.lr},
          {"lambda", c.lambda},
          {"gamma", c.gamma},
          {"d", c.d},
          {"d_readout", c.d_readout},
          {"flat_n", c.flat_n},
          {"iter_max", c.iter_max},
          {"seed", c.seed},
          {"estimator", std::string(to_string(c.estimator_kind))},
          {"mode", std::string(to_string(c.sample_mode))},
          {"hidden_dim", c.hidden_dim},
          {"kl_accumulator", std::string(to_string(c.kl_accumulator))}};
}

inline nlohmann::json aggregate_to_json(CellResult const &result)
{
  auto const &agg = result.aggregate;
  nlohmann::json runs = nlohmann::json::array();
  for (auto const &run : agg.runs)
  {
    auto const checks = training_trace_checks(run);
    runs.push_back({{"seed", run.seed},
                    {"kl_estimate", run.kl_estimate},
                    {"best_epoch", run.best_epoch},
                    {"epochs", run.traces.size()},
                    {"stable", run.stable},
                    {"failure", run.failure},
                    {"max_abs_f", run.max_abs_f},
                    {"checks",
                     {{"epochs_checked", checks.epochs_checked},
                      {"mebub_failed", checks.mebub_failed},
                      {"norm_failed", checks.norm_failed},
                      {"psd_checked", checks.psd_checked},
                      {"psd_failed", checks.psd_failed},
                      {"passed", checks.passed()}}}});
  }
  nlohmann::json out;
  out["config"]     = config_to_json(agg.config);
  out["scenario"]   = scenario_to_json(result.cell.scenario);
  out["estimator"]  = result.cell.arm.label();
  out["mean"]       = agg.mean ? nlohmann::json(*agg.mean) : nlohmann::json(nullptr);
  out["std"]        = agg.stddev ? nlohmann::json(*agg.stddev) : nlohmann::json(nullptr);
  out["n"]          = agg.n;
  out["n_unstable"] = agg.n_unstable;
  out["estimates"]  = agg.estimates;
  out["runs"]       = runs;
  out["timestamp"]  = detail::utc_timestamp();
  return out;
}

/// Executes every cell n_reps times and writes <out>/runs.csv plus one
/// <out>/cell_NNN.json per cell. The output directory is checked before any
/// training starts.
inline std::vector<CellResult> run_plan(ExperimentPlan const &plan, std::ostream *progress = nullptr)
{
  auto cells = expand_plan(plan);

  namespace fs = std::filesystem;
  fs::path const dir(plan.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream csv(dir / "runs.csv", std::ios::trunc);
  if (ec || !csv)
  {
    throw IoError("cannot write to output directory " + dir.string());
  }

  auto const reps = static_cast<std::size_t>(plan.n_reps);
  std::vector<std::vector<RunReport>> runs(cells.size(), std::vector<RunReport>(reps));
  parallel_for(cells.size() * reps, plan.jobs, [&](std::size_t job) {
    auto const &cell = cells[job / reps];
    auto const rep   = job % reps;
    TrainConfig config = cell.config;
    config.seed        = plan.base_seed + rep;
    runs[job / reps][rep] = train_estimate(config, cell.scenario);
  });

  std::vector<CellResult> results;
  results.reserve(cells.size());
  csv << kCsvHeader << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i)
  {
    for (auto const &run : runs[i])
    {
      csv << csv_row(cells[i], run) << '\n';
    }
    CellResult result{cells[i], aggregate(cells[i].config, std::move(runs[i]))};

    char name[32];
    std::snprintf(name, sizeof(name), "cell_%03zu.json", i);
    std::ofstream json(dir / name, std::ios::trunc);
    if (!json)
    {
      throw IoError("cannot write " + (dir / name).string());
    }
    json << std::setw(2) << aggregate_to_json(result) << '\n';
    if (progress != nullptr)
    {
      *progress << "cell " << i << ": " << result.cell.arm.label() << " kl=" << result.cell.scenario.true_kl
                << " done\n";
    }
    results.push_back(std::move(result));
  }
  if (!csv)
  {
    throw IoError("failed writing runs.csv");
  }
  return results;
}

/// Aligned table: scenario, estimator, lambda, hidden, mean +- std, unstable.
/// The lambda column is dropped when every row shares one value.
inline void emit_summary(std::vector<CellResult> const &results, std::ostream &out)
{
  if (results.empty())
  {
    return;
  }
  bool show_lambda = false;
  for (auto const &r : results)
  {
    show_lambda = show_lambda || r.cell.config.lambda != results.front().cell.config.lambda;
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"scenario", "estimator"};
  if (show_lambda)
  {
    header.emplace_back("lambda");
  }
  header.insert(header.end(), {"hidden", "kl (mean +- std)", "unstable"});
  rows.push_back(header);

  for (auto const &r : results)
  {
    auto const &agg = r.aggregate;
    std::vector<std::string> row{detail::format_real(r.cell.scenario.true_kl), r.cell.arm.label()};
    if (show_lambda)
    {
      row.push_back(detail::format_real(r.cell.config.lambda));
    }
    row.push_back(std::to_string(r.cell.config.hidden_dim));
    if (agg.mean)
    {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4g +- %.3g", *agg.mean, *agg.stddev);
      row.emplace_back(buf);
    }
    else
    {
      row.emplace_back("unstable");
    }
    row.push_back(std::to_string(agg.n_unstable) + "/" + std::to_string(agg.n));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (auto const &row : rows)
  {
    for (std::size_t c = 0; c < row.size(); ++c)
    {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  for (auto const &row : rows)
  {
    for (std::size_t c = 0; c < row.size(); ++c)
    {
      if (c + 1 < row.size())
      {
        out << std::left << std::setw(static_cast<int>(widths[c])) << row[c] << "  ";
      }
      else
      {
        out << row[c] << '\n';
      }
    }
  }
}

}  // namespace rkhskl
