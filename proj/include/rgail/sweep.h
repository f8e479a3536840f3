#ifndef RGAIL_SWEEP_H_
#define RGAIL_SWEEP_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rgail/evaluation.h"
#include "rgail/policy.h"
#include "rgail/rollout.h"
#include "rgail/run_config.h"

namespace rgail {

// One trained policy evaluated in the deployment environment.
struct TransferRow {
  double learner_epsilon = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;      // base seed from the config
  std::uint64_t run_seed = 0;  // seed actually used for training
  bool ok = false;
  std::string error;
  double deploy_epsilon = 0.0;
  std::int64_t steps_evaluated = 0;
  int episodes_completed = 0;
  bool last_truncated = false;
  double mean_return = 0.0;
  double std_error = 0.0;
  double cumulative_return = 0.0;
  double normalized_score = 0.0;
  double goal_fraction = 0.0;
};

// The same policy evaluated at one point of the test-epsilon grid.
struct RobustnessRow {
  double learner_epsilon = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t run_seed = 0;
  double test_epsilon = 0.0;
  bool ok = false;
  std::int64_t steps_evaluated = 0;
  bool last_truncated = false;
  double mean_return = 0.0;
  double std_error = 0.0;
  double cumulative_return = 0.0;
  double normalized_score = 0.0;
};

std::string transfer_csv_header();
std::string to_csv_row(const TransferRow& row);
std::string robustness_csv_header();
std::string to_csv_row(const RobustnessRow& row);

// Training seed of one cell; distinct across the alpha and epsilon grids.
std::uint64_t cell_seed(std::uint64_t base_seed, double learner_epsilon,
                        double alpha);

// Expert, demonstrations and normalization anchors, cached under
// output_dir and reused when the same parameters are requested again.
struct SweepInputs {
  GaussianPolicy expert;
  DemoSet demos;
  std::map<double, ReferenceReturns> references;  // keyed by epsilon

  const ReferenceReturns& reference(double epsilon) const;
};

using SweepLog = std::function<void(const std::string&)>;

SweepInputs prepare_sweep_inputs(const RunConfig& config,
                                 const SweepLog& log = {});

struct CellResult {
  TransferRow transfer;
  std::vector<RobustnessRow> robustness;
};

// Trains and evaluates one (learner epsilon, alpha, seed) cell. Never
// throws: failures come back as rows with ok == false.
CellResult run_cell(const RunConfig& config, const SweepInputs& inputs,
                    double learner_epsilon, double alpha, std::uint64_t seed,
                    const SweepLog& log = {});

struct SweepResult {
  std::vector<TransferRow> transfer;
  std::vector<RobustnessRow> robustness;
};

// Runs every cell (config.workers at a time), each writing its own shard
// under output_dir/cells, then merges the shards into transfer.csv and
// robustness.csv in grid order.
SweepResult run_sweep(const RunConfig& config, const SweepLog& log = {});

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

// Mean normalized score per (learner epsilon, alpha[, test epsilon]) over
// successful seeds.
struct AggregateRow {
  double learner_epsilon = 0.0;
  double alpha = 1.0;
  bool has_test_epsilon = false;
  double test_epsilon = 0.0;
  int n = 0;
  int n_failed = 0;
  double mean_score = 0.0;
  double std_error = 0.0;
  double mean_cumulative_return = 0.0;
  bool best = false;  // highest mean score within its group
};

std::vector<AggregateRow> aggregate(const CsvTable& table);
std::string aggregate_csv_header(bool with_test_epsilon);
std::string to_csv(const std::vector<AggregateRow>& rows);

// Standard error of the mean of `values` (0 for fewer than two).
double standard_error(const std::vector<double>& values);

}  // namespace rgail

#endif  // RGAIL_SWEEP_H_
