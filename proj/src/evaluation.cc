#include "rgail/evaluation.h"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "rgail/checkpoint.h"
#include "rgail/rollout.h"

namespace rgail {

ActionFn gaussian_actor(const GaussianPolicy& policy, bool use_mean) {
  return [&policy, use_mean](const GridState& s, Rng& rng) {
    const Vector sv = to_vector(s);
    return to_action(use_mean ? policy.mean(sv) : policy.sample(sv, rng));
  };
}

ActionFn uniform_random_actor() {
  return [](const GridState&, Rng& rng) {
    std::uniform_real_distribution<double> unif(-gridworld::kActionLimit,
                                                gridworld::kActionLimit);
    const double ax = unif(rng);
    const double ay = unif(rng);
    return GridAction{ax, ay};
  };
}

EvalReport evaluate_policy(const ActionFn& act, const GridConfig& env,
                           std::int64_t step_budget, std::uint64_t seed) {
  if (step_budget <= 0) throw std::invalid_argument("step budget must be positive");
  TrajectoryStreams streams(seed);
  GridWorld world(env);
  EvalReport report;
  report.epsilon = env.epsilon;
  report.seeds = {seed};
  std::vector<double> returns;
  double episode_return = 0.0;
  bool in_episode = false;
  world.reset();
  while (report.total_steps_evaluated < step_budget) {
    const StepResult step = world.step(act(world.state(), streams.player), streams.env);
    ++report.total_steps_evaluated;
    in_episode = true;
    episode_return += step.reward;
    report.cumulative_return += step.reward;
    if (step.done) {
      returns.push_back(episode_return);
      ++report.episodes_completed;
      report.goal_reached += step.reached_goal ? 1 : 0;
      episode_return = 0.0;
      in_episode = false;
      world.reset();
    }
  }
  if (in_episode) {
    report.last_truncated = true;
    returns.push_back(episode_return);
  }
  const double n = static_cast<double>(returns.size());
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  report.mean_return = mean;
  report.std_error = returns.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  return report;
}

EvalReport evaluate_policy(const GaussianPolicy& policy, const GridConfig& env,
                           std::int64_t step_budget, std::uint64_t seed,
                           bool use_mean) {
  return evaluate_policy(gaussian_actor(policy, use_mean), env, step_budget, seed);
}

double normalized_score(double j, double j_expert, double j_random) {
  if (j_expert == j_random) {
    throw std::domain_error("normalization undefined: expert and random returns coincide");
  }
  return (j - j_random) / (j_expert - j_random);
}

ReferenceReturns compute_references(const GaussianPolicy& expert,
                                    const GridConfig& env, std::int64_t steps,
                                    std::uint64_t seed) {
  ReferenceReturns refs;
  refs.epsilon = env.epsilon;
  refs.steps = steps;
  refs.seed = seed;
  const EvalReport e = evaluate_policy(expert, env, steps, seed);
  const EvalReport r = evaluate_policy(uniform_random_actor(), env, steps, seed + 1);
  refs.j_expert = e.cumulative_return;
  refs.j_random = r.cumulative_return;
  refs.expert_episode_mean = e.mean_return;
  refs.random_episode_mean = r.mean_return;
  return refs;
}

void save_references(const ReferenceReturns& refs, const std::string& path) {
  nlohmann::json doc = {{"format_version", 1},
                        {"epsilon", refs.epsilon},
                        {"steps", refs.steps},
                        {"seed", refs.seed},
                        {"j_expert", refs.j_expert},
                        {"j_random", refs.j_random},
                        {"expert_episode_mean", refs.expert_episode_mean},
                        {"random_episode_mean", refs.random_episode_mean}};
  write_file(path, doc.dump(2) + "\n");
}

ReferenceReturns load_references(const std::string& path) {
  const auto doc = nlohmann::json::parse(read_file(path));
  ReferenceReturns refs;
  refs.epsilon = doc.at("epsilon").get<double>();
  refs.steps = doc.at("steps").get<std::int64_t>();
  refs.seed = doc.at("seed").get<std::uint64_t>();
  refs.j_expert = doc.at("j_expert").get<double>();
  refs.j_random = doc.at("j_random").get<double>();
  refs.expert_episode_mean = doc.at("expert_episode_mean").get<double>();
  refs.random_episode_mean = doc.at("random_episode_mean").get<double>();
  return refs;
}

}  // namespace rgail
