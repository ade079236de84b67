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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "rkhskl/bench.hpp"

using namespace rkhskl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(std::string const &name)
{
  auto dir = fs::temp_directory_path() / ("rkhskl_bench_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(fs::path const &path)
{
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(std::string const &text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
  {
    out.push_back(line);
  }
  return out;
}

ExperimentPlan tiny_plan(fs::path const &dir)
{
  ExperimentPlan plan;
  plan.scenarios                   = {make_scenario(1.3)};
  plan.arms                        = {Arm{}};
  plan.hidden_dims                 = {4};
  plan.output_dir                  = dir.string();
  plan.config_template.m           = 100;
  plan.config_template.b           = 50;
  plan.config_template.iter_max    = 2;
  plan.config_template.d_readout   = 16;
  return plan;
}

CellResult fake_result(double kl, EstimatorKind kind, double lambda, std::vector<RunReport> runs)
{
  CellResult r;
  r.cell.scenario              = make_scenario(kl);
  r.cell.arm.kind              = kind;
  r.cell.config.estimator_kind = kind;
  r.cell.config.lambda         = lambda;
  r.aggregate                  = aggregate(r.cell.config, std::move(runs));
  return r;
}

RunReport fake_run(double kl, bool stable)
{
  RunReport r;
  r.stable      = stable;
  r.kl_estimate = stable ? kl : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

TEST(ParseArm, kinds_and_modes)
{
  auto const a = parse_arm("plain_nn", SampleMode::finite);
  EXPECT_EQ(a.kind, EstimatorKind::plain_nn);
  EXPECT_EQ(a.mode, SampleMode::finite);
  EXPECT_EQ(a.label(), "plain_nn");

  auto const b = parse_arm("rkhs_penalized:infinite", SampleMode::finite);
  EXPECT_EQ(b.mode, SampleMode::infinite);
  EXPECT_EQ(b.label(), "rkhs_penalized:infinite");

  EXPECT_EQ(parse_arm("dv_baseline", SampleMode::infinite).mode, SampleMode::infinite);
  EXPECT_THROW(parse_arm("mine", SampleMode::finite), ConfigError);
  EXPECT_THROW(parse_arm("plain_nn:forever", SampleMode::finite), ConfigError);
}

TEST(ExpandPlan, three_scenarios_three_arms_grid)
{
  ExperimentPlan plan;
  plan.n_reps    = 30;
  plan.scenarios = {make_scenario(1.3), make_scenario(13.8), make_scenario(61.1)};
  plan.arms      = {Arm{EstimatorKind::plain_nn}, Arm{EstimatorKind::rkhs_penalized},
                    Arm{EstimatorKind::rkhs_penalized, SampleMode::infinite}};
  auto const cells = expand_plan(plan);
  ASSERT_EQ(cells.size(), 9u);
  EXPECT_EQ(cells.size() * static_cast<std::size_t>(plan.n_reps), 270u);
  for (std::size_t i = 0; i < cells.size(); ++i)
  {
    EXPECT_EQ(cells[i].index, i);
    EXPECT_EQ(cells[i].config.hidden_dim, 25);
  }
  EXPECT_EQ(cells[0].config.lambda, 0.0);
  EXPECT_EQ(cells[1].config.lambda, 5e-4);
  EXPECT_EQ(cells[2].config.sample_mode, SampleMode::infinite);
  EXPECT_DOUBLE_EQ(cells[8].scenario.true_kl, 61.1);
}

TEST(ExpandPlan, lambda_sweep_collapses_for_unpenalized_arms)
{
  ExperimentPlan plan;
  plan.scenarios   = {make_scenario(13.8)};
  plan.arms        = {Arm{EstimatorKind::rkhs_penalized}, Arm{EstimatorKind::plain_nn}};
  plan.lambdas     = {5e-5, 5e-4, 5e-3};
  plan.hidden_dims = {20, 30};
  auto const cells = expand_plan(plan);
  EXPECT_EQ(cells.size(), 3u * 2u + 2u);
}

TEST(ExpandPlan, invalid_plans)
{
  ExperimentPlan plan;
  EXPECT_THROW(expand_plan(plan), ConfigError);
  plan.scenarios = {make_scenario(1.3)};
  plan.arms      = {Arm{}};
  plan.n_reps    = 0;
  EXPECT_THROW(expand_plan(plan), ConfigError);
  plan.n_reps                = 1;
  plan.config_template.gamma = 0.0;
  EXPECT_THROW(expand_plan(plan), ConfigError);
}

TEST(RunPlan, one_cell_one_rep_writes_csv_and_json)
{
  auto const dir     = fresh_dir("single");
  auto const results = run_plan(tiny_plan(dir));
  ASSERT_EQ(results.size(), 1u);

  auto const lines = lines_of(slurp(dir / "runs.csv"));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kCsvHeader);
  EXPECT_EQ(lines[1].rfind("1.3,rkhs_penalized,0.0005,0.05,4,8,0,", 0), 0u) << lines[1];

  auto const json = nlohmann::json::parse(slurp(dir / "cell_000.json"));
  EXPECT_EQ(json["estimator"], "rkhs_penalized");
  EXPECT_EQ(json["n"], 1);
  EXPECT_EQ(json["n_unstable"], 0);
  EXPECT_EQ(json["std"].get<double>(), 0.0);
  EXPECT_EQ(json["config"]["hidden_dim"], 4);
  EXPECT_EQ(json["runs"].size(), 1u);
  EXPECT_TRUE(json["runs"][0]["checks"]["passed"].get<bool>());
  EXPECT_TRUE(json.contains("timestamp"));
  EXPECT_DOUBLE_EQ(json["mean"].get<double>(), results[0].aggregate.runs[0].kl_estimate);
  fs::remove_all(dir);
}

TEST(RunPlan, csv_rows_follow_cells_and_seeds)
{
  auto const dir = fresh_dir("grid");
  auto plan      = tiny_plan(dir);
  plan.arms      = {Arm{EstimatorKind::rkhs_penalized}, Arm{EstimatorKind::plain_nn}};
  plan.n_reps    = 2;
  plan.base_seed = 7;
  plan.jobs      = 2;
  run_plan(plan);
  auto const lines = lines_of(slurp(dir / "runs.csv"));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_NE(lines[1].find("rkhs_penalized,0.0005,0.05,4,8,7,"), std::string::npos);
  EXPECT_NE(lines[2].find("rkhs_penalized,0.0005,0.05,4,8,8,"), std::string::npos);
  EXPECT_NE(lines[3].find("plain_nn,0,0.05,4,8,7,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "cell_001.json"));
  fs::remove_all(dir);
}

TEST(RunPlan, csv_is_byte_identical_across_invocations)
{
  auto const d1 = fresh_dir("det1");
  auto const d2 = fresh_dir("det2");
  auto p1       = tiny_plan(d1);
  p1.n_reps     = 2;
  auto p2       = p1;
  p2.output_dir = d2.string();
  run_plan(p1);
  run_plan(p2);
  EXPECT_EQ(slurp(d1 / "runs.csv"), slurp(d2 / "runs.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(RunPlan, unwritable_output_fails_before_training)
{
  auto const blocker = fresh_dir("blocker");
  {
    std::ofstream(blocker) << "not a directory";
  }
  auto plan = tiny_plan(blocker / "out");
  plan.config_template.iter_max = 2000;
  plan.config_template.m        = 5000;
  auto const start = std::chrono::steady_clock::now();
  EXPECT_THROW(run_plan(plan), IoError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
  fs::remove_all(blocker);
}

TEST(EmitSummary, single_row)
{
  std::ostringstream out;
  emit_summary({fake_result(1.3, EstimatorKind::rkhs_penalized, 5e-4, {fake_run(1.5, true)})}, out);
  auto const lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].find("lambda"), std::string::npos);
  EXPECT_NE(lines[1].find("rkhs_penalized"), std::string::npos);
  EXPECT_NE(lines[1].find("1.5 +- 0"), std::string::npos);
  EXPECT_NE(lines[1].find("0/1"), std::string::npos);
  for (auto const &line : lines)
  {
    EXPECT_NE(line.back(), ' ');
  }
}

TEST(EmitSummary, all_unstable_cell)
{
  std::ostringstream out;
  emit_summary({fake_result(61.1, EstimatorKind::dv_baseline, 0.0, {fake_run(0, false), fake_run(0, false)})},
               out);
  auto const lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_NE(lines[1].find("unstable"), std::string::npos);
  EXPECT_NE(lines[1].find("2/2"), std::string::npos);
}

TEST(EmitSummary, lambda_column_shown_when_values_differ)
{
  std::ostringstream out;
  emit_summary({fake_result(13.8, EstimatorKind::rkhs_penalized, 5e-5, {fake_run(10, true)}),
                fake_result(13.8, EstimatorKind::rkhs_penalized, 5e-4, {fake_run(12, true)})},
               out);
  auto const lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_NE(lines[0].find("lambda"), std::string::npos);
  EXPECT_NE(lines[1].find("5e-05"), std::string::npos);
  EXPECT_NE(lines[2].find("0.0005"), std::string::npos);
  // aligned columns
  EXPECT_EQ(lines[1].find("rkhs_penalized"), lines[0].find("estimator"));
}

TEST(Formatting, special_values)
{
  EXPECT_EQ(detail::format_real(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(detail::format_real(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(detail::format_real(0.1), "0.1");
}
