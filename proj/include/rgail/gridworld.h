#ifndef RGAIL_GRIDWORLD_H_
#define RGAIL_GRIDWORLD_H_

#include <random>

namespace rgail {

using Rng = std::mt19937_64;

struct GridState {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const GridState&) const = default;
};

struct GridAction {
  double ax = 0.0;
  double ay = 0.0;
};

struct GridConfig {
  double epsilon = 0.0;  // probability that the action is ignored
  int horizon = 200;
  double discount = 0.99;

  void validate() const;
};

struct StepResult {
  GridState next_state;
  double reward = 0.0;
  bool done = false;
  bool perturbed = false;
  bool reached_goal = false;  // done because of the terminal region
  bool truncated = false;     // done because of the horizon
};

namespace gridworld {

inline constexpr int kStateDim = 2;
inline constexpr int kActionDim = 2;
inline constexpr double kActionLimit = 0.5;
inline constexpr double kStepScale = 10.0;
// Below this norm the pull toward the origin is undefined and skipped.
inline constexpr double kOriginGuard = 1e-8;

// R(x, y) = -(x-1)^2 - (y+1)^2 - 80 exp(-8 (x^2 + y^2)) + 10 * goal(x, y).
double reward_at(double x, double y);
bool in_goal_region(const GridState& s);

GridState start_state();
GridAction clip_action(const GridAction& a);
GridState clip_state(const GridState& s);

// Deterministic branches of the dynamics (both box-clipped).
GridState move(const GridState& s, const GridAction& a);
GridState pull_toward_origin(const GridState& s);

struct Transition {
  GridState next_state;
  bool perturbed = false;
};

// Stateless kernel: one uniform draw decides the branch.
Transition sample_transition(const GridConfig& config, const GridState& s,
                             const GridAction& a, Rng& rng);

}  // namespace gridworld

// Episode wrapper around the stateless kernel; owns the step counter.
class GridWorld {
 public:
  explicit GridWorld(GridConfig config);

  GridState reset();
  StepResult step(const GridAction& action, Rng& rng);

  const GridConfig& config() const { return config_; }
  const GridState& state() const { return state_; }
  int steps() const { return steps_; }

 private:
  GridConfig config_;
  GridState state_;
  int steps_ = 0;
};

}  // namespace rgail

#endif  // RGAIL_GRIDWORLD_H_
