#ifndef RGAIL_TRAINER_H_
#define RGAIL_TRAINER_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rgail/adam.h"
#include "rgail/checkpoint.h"
#include "rgail/gridworld.h"
#include "rgail/policy.h"
#include "rgail/rollout.h"

namespace rgail {

struct TrainConfig {
  double alpha = 1.0;
  double lambda_ent = 1e-2;
  double gamma = 0.99;
  std::int64_t total_steps = 300000;
  // Negative means "until total_steps"; 0 runs nothing.
  std::int64_t max_iterations = -1;
  int batch_steps = 4000;

  double ppo_clip = 0.2;
  int ppo_epochs = 5;
  int minibatch_size = 256;
  bool use_gae = false;
  double gae_lambda = 0.95;
  bool normalize_advantages = true;
  // PPO passes per outer iteration for each player (1:1 by default).
  int player_epochs = -1;    // -1 -> ppo_epochs
  int opponent_epochs = -1;  // -1 -> ppo_epochs

  double policy_lr = 3e-4;
  double value_lr = 3e-4;
  double discriminator_lr = 1e-4;
  int discriminator_epochs = 1;
  int discriminator_minibatch = 256;

  std::vector<int> hidden{128, 128};
  double initial_log_std = -0.5;
  std::uint64_t seed = 0;
  EntropySign entropy_sign = EntropySign::kBonus;
  GridConfig env;  // simulation environment

  void validate() const;
  int effective_player_epochs() const {
    return player_epochs < 0 ? ppo_epochs : player_epochs;
  }
  int effective_opponent_epochs() const {
    return opponent_epochs < 0 ? ppo_epochs : opponent_epochs;
  }
};

struct MetricsRow {
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
  double mean_episode_return_true = 0.0;
  double mean_surrogate_reward = 0.0;
  double mean_d_agent = 0.0;
  double mean_d_expert = 0.0;
  double player_entropy = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRow& row);

struct TrainState {
  static constexpr std::size_t kMetricsCapacity = 512;

  GaussianPolicy player;
  GaussianPolicy opponent;
  ValueFunction value;
  Discriminator discriminator;
  AdamState player_opt;
  AdamState opponent_opt;
  AdamState value_opt;
  AdamState discriminator_opt;
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
  std::deque<MetricsRow> metrics;  // most recent kMetricsCapacity rows

  static TrainState init(const TrainConfig& config, const DemoSet& demos);
  MixturePolicy mixture(double alpha) {
    return MixturePolicy{&player, &opponent, alpha};
  }
  void push_metrics(const MetricsRow& row);

  Checkpoint to_checkpoint() const;
  static TrainState from_checkpoint(const Checkpoint& ckpt);
};

// Directory layout: manifest.json naming player.json, opponent.json,
// value.json, discriminator.json and optimizer.json, plus alpha.
void save_train_state(const TrainState& state, const TrainConfig& config,
                      const std::string& dir);
TrainState load_train_state(const std::string& dir);

Checkpoint policy_to_checkpoint(const GaussianPolicy& policy);
GaussianPolicy policy_from_checkpoint(const Checkpoint& ckpt);
void save_policy(const GaussianPolicy& policy, const std::string& path);
GaussianPolicy load_policy(const std::string& path);

// Deterministic per-iteration stream, so a resumed run replays exactly.
Rng iteration_rng(std::uint64_t seed, std::int64_t iteration,
                  std::uint32_t tag = 0);

struct DiscriminatorDiagnostics {
  double mean_loss = 0.0;
  double mean_d_agent = 0.0;   // after the update
  double mean_d_expert = 0.0;  // after the update
  int steps = 0;
};

// One Adam step on the binary cross-entropy; returns the pre-step loss.
double discriminator_step(Discriminator& d, const Matrix& agent_pairs,
                          const Matrix& expert_pairs, AdamState& opt);

// One epoch over the union of fresh agent pairs and the demo pairs, the
// smaller side resampled with replacement to match the larger.
DiscriminatorDiagnostics update_discriminator(Discriminator& d,
                                              const RolloutBatch& batch,
                                              const DemoSet& demos,
                                              AdamState& opt, Rng& rng,
                                              int minibatch_size, int epochs = 1);

struct PolicyGradients {
  Vector theta;  // player, flattened in GaussianPolicy::parameters() order
  Vector phi;    // opponent
};

// (1/|D|) sum_i sum_t gamma^t grad log pi_mix(a_t | s_t) (G_t + lambda G^log_t)
// at the executed actions.
PolicyGradients reference_policy_gradients(const RolloutBatch& batch,
                                           GaussianPolicy& player,
                                           GaussianPolicy& opponent,
                                           double alpha, const Returns& returns,
                                           double gamma, double lambda_ent);

struct PpoDiagnostics {
  double policy_objective = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

// Advantages (targets - V) or GAE over the surrogate rewards.
Vector compute_advantages(const RolloutBatch& batch, const Returns& returns,
                          const ValueFunction& value, const TrainConfig& config);

// Gradient of the clipped surrogate over the whole batch at the current
// parameters (ratio = 1), i.e. the direction PPO starts from.
PolicyGradients ppo_surrogate_gradients(TrainState& state,
                                        const RolloutBatch& batch,
                                        const Returns& returns,
                                        const TrainConfig& config);

// Player ascends the clipped surrogate, opponent descends it, the value
// function regresses onto G + lambda G^log. Throws std::runtime_error on a
// non-finite loss before applying the offending step.
PpoDiagnostics ppo_update(TrainState& state, const RolloutBatch& batch,
                          const Returns& returns, const TrainConfig& config,
                          Rng& rng);

using MetricsSink = std::function<void(const MetricsRow&)>;

class RobustGailfoTrainer {
 public:
  RobustGailfoTrainer(TrainConfig config, DemoSet demos);
  RobustGailfoTrainer(TrainConfig config, DemoSet demos, TrainState resume);

  bool finished() const;
  // One outer iteration: collect, update discriminator, refresh rewards,
  // compute returns, PPO.
  MetricsRow run_iteration();
  void run(const MetricsSink& sink = {});

  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  DemoSet demos_;
  TrainState state_;
};

TrainState train_robust_gailfo(const DemoSet& demos, const TrainConfig& config,
                               const MetricsSink& sink = {});

struct ExpertConfig {
  std::int64_t total_steps = 500000;
  int batch_steps = 4000;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double ppo_clip = 0.2;
  int ppo_epochs = 10;
  int minibatch_size = 256;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double entropy_coef = 1e-3;
  double reward_scale = 0.1;
  std::vector<int> hidden{128, 128};
  double initial_log_std = 0.0;
  std::uint64_t seed = 0;
  // Empty means the environment's true reward.
  RewardFn reward_fn;
};

struct ExpertMetrics {
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
  double mean_true_return = 0.0;
  double goal_fraction = 0.0;
  double entropy = 0.0;
};

GaussianPolicy train_expert_ppo(
    const GridConfig& env, const ExpertConfig& config,
    const std::function<void(const ExpertMetrics&)>& sink = {});

}  // namespace rgail

#endif  // RGAIL_TRAINER_H_
