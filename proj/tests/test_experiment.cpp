// Copyright 2026 The grbmamp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "grbmamp/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace {

using namespace grbmamp;
namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "grbmamp_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Small synthetic set with a matched explicit prior.
ExperimentSpec synthetic_spec(const fs::path& dir, double rho, std::vector<double> alphas) {
  Rng rng(3);
  auto set = synth_sparse(200, rho, {0.0, 1.0, std::nullopt}, 6, rng);
  write_signal_cache(dir / "signals.bin", set);
  ExperimentSpec spec;
  spec.dataset = (dir / "signals.bin").string();
  spec.mode = SolverMode::kIid;
  spec.prior = "gb:" + io::format_double(rho) + ",0,1";
  spec.alphas = std::move(alphas);
  spec.output_dir = (dir / "out").string();
  spec.rho_bin_width = 0.1;
  return spec;
}

TEST(Sweep, EasyCornerConverges) {
  const auto dir = fresh_dir("easy");
  auto spec = synthetic_spec(dir, 0.2, {1.0});
  const auto s = run_phase_sweep(spec);
  EXPECT_EQ(s.total, 6u);
  EXPECT_EQ(s.failed, 0u);
  for (const auto& r : read_records(fs::path(spec.output_dir) / "records.csv")) {
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.correlation, 1.0, 1e-6);
  }
}

TEST(Sweep, SupportAgnosticPriorFailsBelowSparsity) {
  const auto dir = fresh_dir("contrast");
  auto spec = synthetic_spec(dir, 0.3, {0.1, 0.15});
  run_phase_sweep(spec);
  const auto grid = aggregate_grid(read_records(fs::path(spec.output_dir) / "records.csv"), spec.rho_bin_width);
  ASSERT_FALSE(grid.empty());
  for (const auto& c : grid) {
    EXPECT_LT(c.alpha, c.rho_lo);
    EXPECT_GT(c.mean_mse_db, -20.0);
  }
}

TEST(Sweep, RecordCountAndReaggregation) {
  const auto dir = fresh_dir("count");
  auto spec = synthetic_spec(dir, 0.2, {0.3, 0.6});
  spec.repetitions = 2;
  run_phase_sweep(spec);
  const fs::path out = spec.output_dir;
  const auto records = read_records(out / "records.csv");
  EXPECT_EQ(records.size(), 6u * 2u * 2u);
  const std::string grid = slurp(out / "grid.csv"), summary = slurp(out / "summary.csv");
  fs::remove(out / "grid.csv");
  aggregate_directory(out, spec.rho_bin_width);
  EXPECT_EQ(slurp(out / "grid.csv"), grid);
  EXPECT_EQ(slurp(out / "summary.csv"), summary);
  for (const auto& r : records) {
    EXPECT_LE(std::abs(r.correlation), 1.0);
    EXPECT_EQ(r.M, measurement_count(200, r.alpha));
  }
}

TEST(Sweep, ResumeProducesIdenticalRecords) {
  const auto dir = fresh_dir("resume");
  auto spec = synthetic_spec(dir, 0.2, {0.3, 0.6});
  run_phase_sweep(spec);
  const std::string full = slurp(fs::path(spec.output_dir) / "records.csv");

  spec.output_dir = (dir / "out2").string();
  const auto first = run_phase_sweep(spec, 5);
  EXPECT_EQ(first.total, 5u);
  // Simulate a crash that tore the last line.
  {
    std::ofstream tear(fs::path(spec.output_dir) / "records.csv", std::ios::app | std::ios::binary);
    tear << "3,0,1,0.6,120,4";
  }
  const auto second = run_phase_sweep(spec);
  EXPECT_EQ(second.resumed, 5u);
  EXPECT_EQ(second.total, 12u);
  EXPECT_EQ(slurp(fs::path(spec.output_dir) / "records.csv"), full);
}

TEST(Sweep, RefusesForeignOutputDirectory) {
  const auto dir = fresh_dir("foreign");
  auto spec = synthetic_spec(dir, 0.2, {0.5});
  run_phase_sweep(spec, 1);
  spec.seed = 2;
  EXPECT_THROW(run_phase_sweep(spec), InvalidArgument);
}

TEST(Sweep, ThreadCountDoesNotChangeRecords) {
  const auto dir = fresh_dir("threads");
  auto spec = synthetic_spec(dir, 0.2, {0.4});
  setenv("GRBMAMP_THREADS", "1", 1);
  run_phase_sweep(spec);
  const auto one = slurp(fs::path(spec.output_dir) / "records.csv");
  spec.output_dir = (dir / "out4").string();
  setenv("GRBMAMP_THREADS", "4", 1);
  run_phase_sweep(spec);
  unsetenv("GRBMAMP_THREADS");
  EXPECT_EQ(slurp(fs::path(spec.output_dir) / "records.csv"), one);
}

TEST(Sweep, SpecValidation) {
  const auto dir = fresh_dir("validation");
  auto spec = synthetic_spec(dir, 0.2, {0.5});
  spec.alphas.clear();
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.alphas = {0.5};
  spec.mode = SolverMode::kGrbm;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.mode = SolverMode::kNonIid;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.dataset = (dir / "nope.bin").string();
  EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(Records, FormatParseRoundTrip) {
  ResultRecord r;
  r.image = 12;
  r.repetition = 1;
  r.alpha_index = 2;
  r.alpha = 0.15;
  r.M = 118;
  r.K = 150;
  r.rho = 150.0 / 784.0;
  r.mode = "grbm";
  r.mse_db = -23.456789012345;
  r.correlation = 0.987654321;
  r.iterations = 77;
  r.inner_sweeps = 1234;
  r.converged = true;
  r.final_delta = 3.2e-8;
  r.seed = 0xfedcba9876543210ULL;
  const auto back = parse_record(format_record(r));
  ASSERT_TRUE(back);
  EXPECT_EQ(format_record(*back), format_record(r));
  EXPECT_EQ(back->rho, r.rho);
  EXPECT_FALSE(parse_record("1,2,3"));
}

TEST(Records, AggregationBins) {
  std::vector<ResultRecord> rs(4);
  rs[0].rho = 0.01, rs[0].mse_db = -10, rs[0].correlation = 0.5, rs[0].alpha = 0.1;
  rs[1].rho = 0.02, rs[1].mse_db = -20, rs[1].correlation = 0.7, rs[1].alpha = 0.1;
  rs[2].rho = 0.03, rs[2].mse_db = -30, rs[2].correlation = 0.9, rs[2].alpha = 0.1, rs[2].converged = true;
  rs[3].rho = 0.03, rs[3].alpha = 0.1, rs[3].status = "failed:error";
  const auto g = aggregate_grid(rs, 0.025);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].count, 2);
  EXPECT_DOUBLE_EQ(g[0].mean_mse_db, -15.0);
  EXPECT_DOUBLE_EQ(g[0].median_correlation, 0.6);
  EXPECT_DOUBLE_EQ(g[0].mk_alpha, 0.0125);
  EXPECT_EQ(g[1].count, 1);
  EXPECT_EQ(g[1].failed, 1);
  EXPECT_DOUBLE_EQ(g[1].converged_fraction, 0.5);
}

TEST(PriorText, ParseAndFormat) {
  EXPECT_TRUE((parse_prior("gb:0.2,0,1") == Prior{GaussBernoulli{0.2, 0.0, 1.0}}));
  EXPECT_TRUE((parse_prior("tgb:0.2,0.5,0.1,0,1") == Prior{TruncGaussBernoulli{0.2, 0.5, 0.1, 0.0, 1.0}}));
  EXPECT_TRUE((parse_prior("bernoulli:-1.5") == Prior{Bernoulli{-1.5}}));
  EXPECT_THROW(parse_prior("gb:0.2,0"), InvalidArgument);
  EXPECT_THROW(parse_prior("gb:2,0,1"), InvalidArgument);
  EXPECT_THROW(parse_prior("laplace:1"), InvalidArgument);
  EXPECT_THROW(parse_prior("gb:x,0,1"), InvalidArgument);
  const Prior p = TruncGaussBernoulli{0.1, 0.3, 0.07, -0.5, 2.0};
  EXPECT_TRUE(parse_prior(format_prior(p)) == p);
}

}  // namespace
