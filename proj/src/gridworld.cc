#include "rgail/gridworld.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rgail {

void GridConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in (0, 1)");
  }
}

namespace gridworld {

double reward_at(double x, double y) {
  const double goal = in_goal_region({x, y}) ? 10.0 : 0.0;
  return -(x - 1.0) * (x - 1.0) - (y + 1.0) * (y + 1.0) -
         80.0 * std::exp(-8.0 * (x * x + y * y)) + goal;
}

bool in_goal_region(const GridState& s) {
  return s.x >= 0.95 && s.x <= 1.0 && s.y >= -1.0 && s.y <= -0.95;
}

GridState start_state() { return {0.0, 1.0}; }

GridAction clip_action(const GridAction& a) {
  return {std::clamp(a.ax, -kActionLimit, kActionLimit),
          std::clamp(a.ay, -kActionLimit, kActionLimit)};
}

GridState clip_state(const GridState& s) {
  return {std::clamp(s.x, 0.0, 1.0), std::clamp(s.y, -1.0, 1.0)};
}

GridState move(const GridState& s, const GridAction& a) {
  const GridAction c = clip_action(a);
  return clip_state({s.x + c.ax / kStepScale, s.y + c.ay / kStepScale});
}

GridState pull_toward_origin(const GridState& s) {
  const double norm = std::hypot(s.x, s.y);
  if (norm < kOriginGuard) return s;
  return clip_state({s.x - s.x / (kStepScale * norm),
                     s.y - s.y / (kStepScale * norm)});
}

Transition sample_transition(const GridConfig& config, const GridState& s,
                             const GridAction& a, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool perturbed = unif(rng) < config.epsilon;
  return {perturbed ? pull_toward_origin(s) : move(s, a), perturbed};
}

}  // namespace gridworld

GridWorld::GridWorld(GridConfig config) : config_(config) {
  config_.validate();
  reset();
}

GridState GridWorld::reset() {
  state_ = gridworld::start_state();
  steps_ = 0;
  return state_;
}

StepResult GridWorld::step(const GridAction& action, Rng& rng) {
  const auto tr = gridworld::sample_transition(config_, state_, action, rng);
  state_ = tr.next_state;
  ++steps_;
  StepResult out;
  out.next_state = state_;
  out.reward = gridworld::reward_at(state_.x, state_.y);
  out.perturbed = tr.perturbed;
  out.reached_goal = gridworld::in_goal_region(state_);
  out.truncated = !out.reached_goal && steps_ >= config_.horizon;
  out.done = out.reached_goal || out.truncated;
  return out;
}

}  // namespace rgail
