#ifndef RGAIL_EVALUATION_H_
#define RGAIL_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rgail/gridworld.h"
#include "rgail/policy.h"

namespace rgail {

inline constexpr std::int64_t kDefaultEvalSteps = 100000;

using ActionFn = std::function<GridAction(const GridState&, Rng&)>;

struct EvalReport {
  double epsilon = 0.0;
  std::int64_t total_steps_evaluated = 0;
  int episodes_completed = 0;     // episodes that ended on their own
  bool last_truncated = false;    // final episode cut by the step budget
  double mean_return = 0.0;       // per episode, partial final one included
  double std_error = 0.0;
  double cumulative_return = 0.0; // sum of every reward over the budget
  int goal_reached = 0;
  std::vector<std::uint64_t> seeds;

  int episodes_counted() const {
    return episodes_completed + (last_truncated ? 1 : 0);
  }
  double goal_fraction() const {
    return episodes_completed ? static_cast<double>(goal_reached) / episodes_completed
                              : 0.0;
  }
};

// Rolls episodes until the budget is used up, cutting the last episode.
EvalReport evaluate_policy(const ActionFn& act, const GridConfig& env,
                           std::int64_t step_budget, std::uint64_t seed);
EvalReport evaluate_policy(const GaussianPolicy& policy, const GridConfig& env,
                           std::int64_t step_budget, std::uint64_t seed,
                           bool use_mean = false);

ActionFn gaussian_actor(const GaussianPolicy& policy, bool use_mean = false);
// Uniform over the action box.
ActionFn uniform_random_actor();

// (j - j_random) / (j_expert - j_random). Throws std::domain_error when the
// anchors coincide.
double normalized_score(double j, double j_expert, double j_random);

// Anchors for score normalization in one deployment environment; scores
// use the cumulative return over the whole evaluation budget.
struct ReferenceReturns {
  double epsilon = 0.0;
  std::int64_t steps = kDefaultEvalSteps;
  std::uint64_t seed = 0;
  double j_expert = 0.0;
  double j_random = 0.0;
  double expert_episode_mean = 0.0;
  double random_episode_mean = 0.0;

  double score(double cumulative_return) const {
    return normalized_score(cumulative_return, j_expert, j_random);
  }
};

ReferenceReturns compute_references(const GaussianPolicy& expert,
                                    const GridConfig& env, std::int64_t steps,
                                    std::uint64_t seed);
void save_references(const ReferenceReturns& refs, const std::string& path);
ReferenceReturns load_references(const std::string& path);

}  // namespace rgail

#endif  // RGAIL_EVALUATION_H_
