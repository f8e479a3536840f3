#ifndef RGAIL_ROLLOUT_H_
#define RGAIL_ROLLOUT_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rgail/gridworld.h"
#include "rgail/policy.h"
#include "rgail/tensor.h"

namespace rgail {

// Reward on a consecutive state pair, r_{t+1} = R(s_t, s_{t+1}).
using RewardFn = std::function<double(const GridState&, const GridState&)>;

struct Trajectory {
  std::vector<GridState> states;  // T + 1 entries
  std::vector<GridAction> player_actions;
  std::vector<GridAction> opponent_actions;
  std::vector<bool> executed_opponent;
  std::vector<double> rewards;       // active reward function
  std::vector<double> true_rewards;  // environment reward, for reporting
  bool done = false;                 // terminated in the goal region

  int length() const { return static_cast<int>(player_actions.size()); }
  const GridAction& executed_action(int t) const {
    return executed_opponent[t] ? opponent_actions[t] : player_actions[t];
  }
  double true_return() const;
  // Throws std::logic_error if sequence lengths disagree.
  void check_consistent() const;
};

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  int total_steps = 0;
  // Player entropy at each visited state, per trajectory.
  std::vector<std::vector<double>> entropies;

  // Row-major flattening in trajectory order.
  Matrix states() const;
  Matrix next_states() const;
  Matrix executed_actions() const;
  Matrix pairs() const;  // [s, s'] rows
  Vector rewards() const;
  double opponent_fraction() const;
  double mean_true_return() const;
};

struct DemoSet {
  std::vector<std::vector<GridState>> episodes;
  Matrix pairs;  // [s, s'] rows, no actions

  static DemoSet from_episodes(std::vector<std::vector<GridState>> episodes);
  int n_pairs() const { return static_cast<int>(pairs.rows()); }
};

struct DemoHeader {
  std::string env = "gridworld";
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int format_version = 1;
};

// Line-delimited JSON: a header record followed by one
// {"states": [[x, y], ...]} record per episode.
void save_demos(const DemoSet& demos, const DemoHeader& header,
                const std::string& path);
DemoSet load_demos(const std::string& path, DemoHeader* header = nullptr);

// Independent streams derived from one trajectory seed, so that
// trajectories can be generated in any order or in parallel.
struct TrajectoryStreams {
  Rng player;
  Rng opponent;
  Rng mixing;
  Rng env;

  explicit TrajectoryStreams(std::uint64_t seed);
};

// Runs one episode: both players act, the opponent's action is executed with
// probability 1 - alpha. reward_fn may be empty, leaving rewards at zero to
// be filled in later.
Trajectory rollout_episode(const GridConfig& env, const GaussianPolicy& player,
                           const GaussianPolicy& opponent, double alpha,
                           const RewardFn& reward_fn, std::uint64_t seed);

RolloutBatch collect_trajectories(const GridConfig& env,
                                  const GaussianPolicy& player,
                                  const GaussianPolicy& opponent, double alpha,
                                  const RewardFn& reward_fn, int n_traj,
                                  Rng& rng);

// Collects whole episodes until at least min_steps transitions are stored.
RolloutBatch collect_steps(const GridConfig& env, const GaussianPolicy& player,
                           const GaussianPolicy& opponent, double alpha,
                           const RewardFn& reward_fn, int min_steps, Rng& rng);

// Recomputes every stored reward with a (refreshed) discriminator.
void assign_surrogate_rewards(RolloutBatch& batch, const Discriminator& d);
void assign_entropies(RolloutBatch& batch, const GaussianPolicy& player);

DemoSet collect_demonstrations(const GridConfig& env,
                               const GaussianPolicy& expert, int n_episodes,
                               Rng& rng);

enum class EntropySign {
  kBonus,    // entropy enters the return as a bonus
  kPenalty,  // entropy enters with a leading minus
};

struct Returns {
  std::vector<Vector> reward;   // G_t
  std::vector<Vector> entropy;  // G^log_t, sign applied
};

// Reverse-sweep discounted returns:
//   G_t     = r_{t+1} + gamma G_{t+1}
//   G^log_t = sign * H(s_t) + gamma G^log_{t+1}
// Entropies come from batch.entropies, filled from the player if absent.
Returns compute_returns(RolloutBatch& batch, const GaussianPolicy& player,
                        double gamma, EntropySign sign);

// G_t + lambda G^log_t, flattened in trajectory order.
Vector combined_targets(const Returns& returns, double lambda_ent);

Vector to_vector(const GridState& s);
Vector to_vector(const GridAction& a);
GridAction to_action(const Vector& v);

}  // namespace rgail

#endif  // RGAIL_ROLLOUT_H_
