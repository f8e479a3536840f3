#include "rgail/sweep.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rgail/checkpoint.h"

namespace rgail {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class SweepTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("rgail_sweep_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunConfig tiny(const std::string& sub) const {
    RunConfig c;
    c.expert_steps = 2000;
    c.n_demos = 2;
    c.train_steps = 1500;
    c.eval_steps = 500;
    c.output_dir = (root_ / sub).string();
    return c;
  }

  fs::path root_;
};

TEST_F(SweepTest, SingleCellGivesOneRow) {
  const RunConfig c = tiny("a");
  const SweepResult r = run_sweep(c);
  ASSERT_EQ(r.transfer.size(), 1u);
  EXPECT_TRUE(r.transfer[0].ok) << r.transfer[0].error;
  EXPECT_TRUE(r.robustness.empty());
  EXPECT_EQ(r.transfer[0].steps_evaluated, 500);
  EXPECT_TRUE(std::isfinite(r.transfer[0].normalized_score));

  const CsvTable t = read_csv((fs::path(c.output_dir) / "transfer.csv").string());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("status")], "ok");
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "cells" / "le0_a1_s0" / "policy.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "cells" / "le0_a1_s0" / "metrics.csv"));
  EXPECT_EQ(load_run_config((fs::path(c.output_dir) / "config.txt").string()), c);
}

TEST_F(SweepTest, GridProducesOneRowPerCellWithDistinctSeeds) {
  RunConfig c = tiny("grid");
  c.learner_epsilons = {0.0, 0.2};
  c.alphas = {1.0, 0.9};
  c.seeds = {0, 1};
  c.test_epsilons = {0.0, 0.3};
  c.workers = 2;
  const SweepResult r = run_sweep(c);
  ASSERT_EQ(r.transfer.size(), 8u);
  EXPECT_EQ(r.robustness.size(), 16u);
  std::set<std::uint64_t> seeds;
  for (const auto& row : r.transfer) {
    EXPECT_TRUE(row.ok) << row.error;
    seeds.insert(row.run_seed);
  }
  EXPECT_EQ(seeds.size(), 8u);
  // Grid order: epsilon, then alpha, then seed.
  EXPECT_EQ(r.transfer[0].learner_epsilon, 0.0);
  EXPECT_EQ(r.transfer[1].seed, 1u);
  EXPECT_EQ(r.transfer[2].alpha, 0.9);
  EXPECT_EQ(r.transfer[4].learner_epsilon, 0.2);

  const CsvTable rob = read_csv((fs::path(c.output_dir) / "robustness.csv").string());
  EXPECT_EQ(rob.rows.size(), 16u);
  const auto agg = aggregate(rob);
  EXPECT_EQ(agg.size(), 8u);
  for (const auto& a : agg) EXPECT_EQ(a.n, 2);
}

TEST_F(SweepTest, RerunInFreshDirectoryIsByteIdentical) {
  RunConfig c = tiny("first");
  c.alphas = {1.0, 0.95};
  c.test_epsilons = {0.1};
  run_sweep(c);
  RunConfig d = c;
  d.output_dir = (root_ / "second").string();
  d.workers = 2;
  run_sweep(d);
  for (const char* f : {"transfer.csv", "robustness.csv"}) {
    EXPECT_EQ(slurp(fs::path(c.output_dir) / f), slurp(fs::path(d.output_dir) / f)) << f;
  }
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "cells" / "le0_a0.95_s0" / "policy.json"),
            slurp(fs::path(d.output_dir) / "cells" / "le0_a0.95_s0" / "policy.json"));
}

TEST_F(SweepTest, CachedInputsAreReused) {
  const RunConfig c = tiny("cache");
  const SweepInputs a = prepare_sweep_inputs(c);
  std::vector<std::string> messages;
  const SweepInputs b =
      prepare_sweep_inputs(c, [&](const std::string& m) { messages.push_back(m); });
  EXPECT_TRUE(messages.empty());
  EXPECT_EQ(a.demos.pairs, b.demos.pairs);
  EXPECT_EQ(a.reference(0.0).j_expert, b.reference(0.0).j_expert);
  EXPECT_THROW(a.reference(0.5), std::out_of_range);
}

TEST_F(SweepTest, FailedCellBecomesFailedRow) {
  RunConfig c = tiny("fail");
  c.alphas = {1.0, 0.9};
  c.test_epsilons = {0.1};
  // A plain file where the cell directory should go.
  fs::create_directories(fs::path(c.output_dir) / "cells");
  std::ofstream(fs::path(c.output_dir) / "cells" / "le0_a0.9_s0") << "blocker";
  const SweepResult r = run_sweep(c);
  ASSERT_EQ(r.transfer.size(), 2u);
  EXPECT_TRUE(r.transfer[0].ok);
  EXPECT_FALSE(r.transfer[1].ok);
  EXPECT_FALSE(r.transfer[1].error.empty());
  EXPECT_TRUE(std::isnan(r.transfer[1].normalized_score));
  EXPECT_FALSE(r.robustness[1].ok);

  const CsvTable t = read_csv((fs::path(c.output_dir) / "transfer.csv").string());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][t.column("status")], "failed");
  EXPECT_EQ(t.rows[1][t.column("normalized_score")], "nan");
  const auto agg = aggregate(t);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[1].n, 0);
  EXPECT_EQ(agg[1].n_failed, 1);
  EXPECT_TRUE(agg[0].best);
  EXPECT_FALSE(agg[1].best);
}

TEST_F(SweepTest, RejectsIndistinguishableGridValues) {
  RunConfig c = tiny("dup");
  c.alphas = {0.9, 0.9 + 1e-15};
  EXPECT_THROW(run_sweep(c), std::invalid_argument);
}

TEST(CellSeed, DistinctAcrossGridAndDeterministic) {
  std::set<std::uint64_t> seen;
  int n = 0;
  for (double e : {0.0, 0.1, 0.2}) {
    for (double a : {1.0, 0.999, 0.99, 0.98, 0.97, 0.96, 0.95, 0.9}) {
      for (std::uint64_t s : {0, 1, 2}) {
        seen.insert(cell_seed(s, e, a));
        ++n;
      }
    }
  }
  EXPECT_EQ(static_cast<int>(seen.size()), n);
  EXPECT_EQ(cell_seed(3, 0.2, 0.9), cell_seed(3, 0.2, 0.9));
}

TEST(Csv, RowsMatchHeaders) {
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  TransferRow t;
  t.error = "bad, worse\nworst";
  EXPECT_EQ(count(to_csv_row(t)), count(transfer_csv_header()));
  EXPECT_EQ(count(to_csv_row(RobustnessRow{})), count(robustness_csv_header()));
}

TEST(Csv, ParseHandlesTrailingEmptyField) {
  const CsvTable t = parse_csv("a,b,c\r\n1,2,\n\n4,5,6\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][2], "");
  EXPECT_EQ(t.column("c"), 2);
  EXPECT_EQ(t.column("d"), -1);
  EXPECT_THROW(parse_csv("a,b\n1\n"), std::invalid_argument);
  EXPECT_THROW(parse_csv(""), std::invalid_argument);
}

TEST(Aggregate, MeansStandardErrorsAndBestFlag) {
  const CsvTable t = parse_csv(
      "learner_epsilon,alpha,status,normalized_score,cumulative_return\n"
      "0.2,1,ok,0.5,10\n"
      "0.2,1,ok,0.7,20\n"
      "0.2,0.9,ok,0.9,30\n"
      "0.2,0.9,ok,0.8,40\n"
      "0,1,ok,1.0,50\n");
  const auto rows = aggregate(t);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rows[0].mean_score, 0.6);
  EXPECT_NEAR(rows[0].std_error, 0.1, 1e-12);
  EXPECT_DOUBLE_EQ(rows[0].mean_cumulative_return, 15.0);
  EXPECT_FALSE(rows[0].best);
  EXPECT_TRUE(rows[1].best);
  EXPECT_TRUE(rows[2].best);
  EXPECT_EQ(rows[2].std_error, 0.0);
  const std::string csv = to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), aggregate_csv_header(false));
}

TEST(Aggregate, StandardErrorOracle) {
  EXPECT_EQ(standard_error({}), 0.0);
  EXPECT_EQ(standard_error({3.0}), 0.0);
  // Sample sd of {1, 2, 3, 4} is sqrt(5/3).
  EXPECT_NEAR(standard_error({1, 2, 3, 4}), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

}  // namespace
}  // namespace rgail
