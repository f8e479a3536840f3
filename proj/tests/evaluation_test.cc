#include "rgail/evaluation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "rgail/rollout.h"

namespace rgail {
namespace {

ActionFn still_actor() {
  return [](const GridState&, Rng&) { return GridAction{0.0, 0.0}; };
}

TEST(Evaluate, BudgetSplitsIntoWholeEpisodes) {
  GridConfig env;
  env.horizon = 200;
  const EvalReport r = evaluate_policy(still_actor(), env, 1000, 0);
  EXPECT_EQ(r.total_steps_evaluated, 1000);
  EXPECT_EQ(r.episodes_completed, 5);
  EXPECT_FALSE(r.last_truncated);
  EXPECT_EQ(r.episodes_counted(), 5);
  EXPECT_EQ(r.goal_reached, 0);
  EXPECT_EQ(r.goal_fraction(), 0.0);
}

TEST(Evaluate, DeterministicActorHasZeroVariance) {
  GridConfig env;
  env.horizon = 200;
  const EvalReport r = evaluate_policy(still_actor(), env, 1000, 3);
  const GridState s = gridworld::start_state();
  const double per_step = gridworld::reward_at(s.x, s.y);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_NEAR(r.mean_return, 200 * per_step, 1e-9);
  EXPECT_NEAR(r.cumulative_return, 1000 * per_step, 1e-9);
}

TEST(Evaluate, FinalEpisodeIsCutByBudget) {
  GridConfig env;
  env.horizon = 200;
  const EvalReport r = evaluate_policy(still_actor(), env, 1050, 0);
  EXPECT_EQ(r.episodes_completed, 5);
  EXPECT_TRUE(r.last_truncated);
  EXPECT_EQ(r.episodes_counted(), 6);
  const GridState s = gridworld::start_state();
  const double per_step = gridworld::reward_at(s.x, s.y);
  EXPECT_NEAR(r.mean_return, 1050 * per_step / 6, 1e-9);
  EXPECT_GT(r.std_error, 0.0);
}

TEST(Evaluate, MatchesIndependentLoop) {
  std::mt19937_64 init(4);
  const GaussianPolicy p = GaussianPolicy::init(2, 2, {8, 8}, -0.5, init);
  GridConfig env;
  env.epsilon = 0.3;
  const std::int64_t budget = 1234;
  const EvalReport r = evaluate_policy(p, env, budget, 17);

  TrajectoryStreams streams(17);
  GridWorld world(env);
  world.reset();
  double total = 0.0;
  int completed = 0, goals = 0;
  for (std::int64_t t = 0; t < budget; ++t) {
    const Vector a = p.sample(to_vector(world.state()), streams.player);
    const StepResult s = world.step(to_action(a), streams.env);
    total += s.reward;
    if (s.done) {
      ++completed;
      goals += s.reached_goal ? 1 : 0;
      world.reset();
    }
  }
  EXPECT_EQ(r.cumulative_return, total);
  EXPECT_EQ(r.episodes_completed, completed);
  EXPECT_EQ(r.goal_reached, goals);
}

TEST(Evaluate, UniformActorMatchesIndependentLoop) {
  const ActionFn act = uniform_random_actor();
  const EvalReport r = evaluate_policy(act, GridConfig{}, 2500, 21);

  TrajectoryStreams streams(21);
  GridWorld world(GridConfig{});
  world.reset();
  std::vector<double> returns{0.0};
  for (int t = 0; t < 2500; ++t) {
    const StepResult s = world.step(act(world.state(), streams.player), streams.env);
    returns.back() += s.reward;
    if (s.done) {
      returns.push_back(0.0);
      world.reset();
    }
  }
  const bool cut = world.steps() > 0;
  if (!cut) returns.pop_back();
  double sum = 0.0;
  for (double x : returns) sum += x;
  EXPECT_NEAR(r.cumulative_return, sum, 1e-9 * std::abs(sum));
  EXPECT_NEAR(r.mean_return, sum / returns.size(), 1e-9 * std::abs(sum));
  EXPECT_EQ(r.episodes_counted(), static_cast<int>(returns.size()));
  EXPECT_EQ(r.last_truncated, cut);
}

TEST(Evaluate, SameSeedSameReport) {
  std::mt19937_64 init(5);
  const GaussianPolicy p = GaussianPolicy::init(2, 2, {8, 8}, -0.5, init);
  GridConfig env;
  env.epsilon = 0.2;
  const EvalReport a = evaluate_policy(p, env, 3000, 8);
  const EvalReport b = evaluate_policy(p, env, 3000, 8);
  const EvalReport c = evaluate_policy(p, env, 3000, 9);
  EXPECT_EQ(a.cumulative_return, b.cumulative_return);
  EXPECT_NE(a.cumulative_return, c.cumulative_return);
}

TEST(Evaluate, MeanActionIgnoresPolicyNoise) {
  std::mt19937_64 init(6);
  const GaussianPolicy p = GaussianPolicy::init(2, 2, {8, 8}, 0.0, init);
  const EvalReport a = evaluate_policy(p, GridConfig{}, 600, 1, true);
  const EvalReport b = evaluate_policy(p, GridConfig{}, 600, 2, true);
  EXPECT_EQ(a.cumulative_return, b.cumulative_return);
}

TEST(Evaluate, RejectsEmptyBudget) {
  EXPECT_THROW(evaluate_policy(still_actor(), GridConfig{}, 0, 0), std::invalid_argument);
}

TEST(Evaluate, UniformActorStaysInActionBox) {
  const ActionFn act = uniform_random_actor();
  Rng rng(3);
  double lo = 1.0, hi = -1.0;
  for (int i = 0; i < 10000; ++i) {
    const GridAction a = act(GridState{}, rng);
    lo = std::min({lo, a.ax, a.ay});
    hi = std::max({hi, a.ax, a.ay});
  }
  EXPECT_GE(lo, -gridworld::kActionLimit);
  EXPECT_LE(hi, gridworld::kActionLimit);
  EXPECT_LT(lo, -0.49);
  EXPECT_GT(hi, 0.49);
}

TEST(NormalizedScore, AnchorsMapToZeroAndOne) {
  EXPECT_DOUBLE_EQ(normalized_score(-50.0, 10.0, -50.0), 0.0);
  EXPECT_DOUBLE_EQ(normalized_score(10.0, 10.0, -50.0), 1.0);
  EXPECT_DOUBLE_EQ(normalized_score(-20.0, 10.0, -50.0), 0.5);
  EXPECT_DOUBLE_EQ(normalized_score(40.0, 10.0, -50.0), 1.5);
  EXPECT_DOUBLE_EQ(normalized_score(-110.0, 10.0, -50.0), -1.0);
}

TEST(NormalizedScore, CoincidentAnchorsThrow) {
  EXPECT_THROW(normalized_score(1.0, 3.0, 3.0), std::domain_error);
}

TEST(NormalizedScore, InvariantUnderPositiveAffineMaps) {
  const double j = -12.5, je = 7.0, jr = -40.0;
  const double base = normalized_score(j, je, jr);
  for (double a : {0.1, 3.0, 1000.0}) {
    for (double b : {-100.0, 0.0, 55.5}) {
      EXPECT_NEAR(normalized_score(a * j + b, a * je + b, a * jr + b), base, 1e-12);
    }
  }
}

TEST(References, SaveLoadRoundTrip) {
  ReferenceReturns r;
  r.epsilon = 0.2;
  r.steps = 5000;
  r.seed = 7;
  r.j_expert = 1.0 / 3.0;
  r.j_random = -123456.789;
  r.expert_episode_mean = 0.1;
  r.random_episode_mean = -0.7;
  const auto path = std::filesystem::temp_directory_path() / "rgail_refs_test.json";
  save_references(r, path.string());
  const ReferenceReturns b = load_references(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(b.epsilon, r.epsilon);
  EXPECT_EQ(b.steps, r.steps);
  EXPECT_EQ(b.seed, r.seed);
  EXPECT_EQ(b.j_expert, r.j_expert);
  EXPECT_EQ(b.j_random, r.j_random);
  EXPECT_EQ(b.score(r.j_expert), 1.0);
}

TEST(References, ExpertAnchorComesFromStochasticEvaluation) {
  std::mt19937_64 init(8);
  const GaussianPolicy p = GaussianPolicy::init(2, 2, {8, 8}, -0.5, init);
  GridConfig env;
  env.epsilon = 0.1;
  const ReferenceReturns r = compute_references(p, env, 800, 4);
  EXPECT_EQ(r.j_expert, evaluate_policy(p, env, 800, 4).cumulative_return);
  EXPECT_EQ(r.j_random,
            evaluate_policy(uniform_random_actor(), env, 800, 5).cumulative_return);
  EXPECT_EQ(r.epsilon, 0.1);
}

}  // namespace
}  // namespace rgail
