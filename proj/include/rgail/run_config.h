#ifndef RGAIL_RUN_CONFIG_H_
#define RGAIL_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rgail/rollout.h"
#include "rgail/trainer.h"

namespace rgail {

inline constexpr int kRunConfigFormatVersion = 1;

// Experiment descriptor shared by every command. Stored as a flat
// "key = value" file; lists are comma separated, '#' starts a comment.
//
//   format_version     integer, must be 1
//   environment        "gridworld"
//   expert_epsilon     deployment (and expert) dynamics
//   learner_epsilons   simulation dynamics, one transfer row each
//   alphas             player control probability grid
//   seeds              base seeds, one training run per (epsilon, alpha, seed)
//   test_epsilons      robustness grid; may be empty
//   expert_steps       PPO budget for the expert
//   expert_seed
//   expert_path        pre-trained expert checkpoint; empty trains one
//   n_demos            state-only demonstrations
//   demo_seed
//   train_steps        environment steps per training run
//   lambda_ent         causal entropy weight
//   entropy_convention "bonus" or "penalty"
//   initial_log_std
//   eval_steps         evaluation budget
//   eval_seed
//   output_dir
//   workers            concurrent sweep cells
struct RunConfig {
  int format_version = kRunConfigFormatVersion;
  std::string environment = "gridworld";
  double expert_epsilon = 0.0;
  std::vector<double> learner_epsilons{0.0};
  std::vector<double> alphas{1.0};
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> test_epsilons;
  std::int64_t expert_steps = 500000;
  std::uint64_t expert_seed = 0;
  std::string expert_path;
  int n_demos = 10;
  std::uint64_t demo_seed = 0;
  std::int64_t train_steps = 300000;
  double lambda_ent = 1e-2;
  EntropySign entropy_sign = EntropySign::kBonus;
  double initial_log_std = TrainConfig{}.initial_log_std;
  std::int64_t eval_steps = 100000;
  std::uint64_t eval_seed = 0;
  std::string output_dir = "runs";
  int workers = 1;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& text);
std::string to_string(const RunConfig& config);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

std::string to_string(EntropySign sign);
EntropySign parse_entropy_sign(const std::string& name);

// Training configuration for one sweep cell.
TrainConfig make_train_config(const RunConfig& config, double learner_epsilon,
                              double alpha, std::uint64_t run_seed);

}  // namespace rgail

#endif  // RGAIL_RUN_CONFIG_H_
