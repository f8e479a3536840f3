#include "rgail/rollout.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rgail {

Vector to_vector(const GridState& s) { return Vector{{s.x, s.y}}; }
Vector to_vector(const GridAction& a) { return Vector{{a.ax, a.ay}}; }
GridAction to_action(const Vector& v) { return {v(0), v(1)}; }

double Trajectory::true_return() const {
  double total = 0.0;
  for (double r : true_rewards) total += r;
  return total;
}

void Trajectory::check_consistent() const {
  const auto t = player_actions.size();
  if (states.size() != t + 1 || opponent_actions.size() != t ||
      executed_opponent.size() != t || rewards.size() != t ||
      true_rewards.size() != t) {
    throw std::logic_error("trajectory sequences have inconsistent lengths");
  }
}

Matrix RolloutBatch::states() const {
  Matrix out(total_steps, gridworld::kStateDim);
  int row = 0;
  for (const auto& tr : trajectories) {
    for (int t = 0; t < tr.length(); ++t, ++row) {
      out(row, 0) = tr.states[t].x;
      out(row, 1) = tr.states[t].y;
    }
  }
  return out;
}

Matrix RolloutBatch::next_states() const {
  Matrix out(total_steps, gridworld::kStateDim);
  int row = 0;
  for (const auto& tr : trajectories) {
    for (int t = 0; t < tr.length(); ++t, ++row) {
      out(row, 0) = tr.states[t + 1].x;
      out(row, 1) = tr.states[t + 1].y;
    }
  }
  return out;
}

Matrix RolloutBatch::executed_actions() const {
  Matrix out(total_steps, gridworld::kActionDim);
  int row = 0;
  for (const auto& tr : trajectories) {
    for (int t = 0; t < tr.length(); ++t, ++row) {
      const auto& a = tr.executed_action(t);
      out(row, 0) = a.ax;
      out(row, 1) = a.ay;
    }
  }
  return out;
}

Matrix RolloutBatch::pairs() const {
  Matrix out(total_steps, 2 * gridworld::kStateDim);
  out << states(), next_states();
  return out;
}

Vector RolloutBatch::rewards() const {
  Vector out(total_steps);
  int row = 0;
  for (const auto& tr : trajectories) {
    for (double r : tr.rewards) out(row++) = r;
  }
  return out;
}

double RolloutBatch::opponent_fraction() const {
  if (total_steps == 0) return 0.0;
  int n = 0;
  for (const auto& tr : trajectories) {
    for (bool b : tr.executed_opponent) n += b ? 1 : 0;
  }
  return static_cast<double>(n) / total_steps;
}

double RolloutBatch::mean_true_return() const {
  if (trajectories.empty()) return 0.0;
  double total = 0.0;
  for (const auto& tr : trajectories) total += tr.true_return();
  return total / static_cast<double>(trajectories.size());
}

DemoSet DemoSet::from_episodes(std::vector<std::vector<GridState>> episodes) {
  DemoSet d;
  d.episodes = std::move(episodes);
  Eigen::Index n = 0;
  for (const auto& ep : d.episodes) {
    if (ep.size() >= 2) n += static_cast<Eigen::Index>(ep.size()) - 1;
  }
  d.pairs.resize(n, 2 * gridworld::kStateDim);
  Eigen::Index row = 0;
  for (const auto& ep : d.episodes) {
    for (std::size_t t = 0; t + 1 < ep.size(); ++t, ++row) {
      d.pairs.row(row) << ep[t].x, ep[t].y, ep[t + 1].x, ep[t + 1].y;
    }
  }
  return d;
}

void save_demos(const DemoSet& demos, const DemoHeader& header,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  nlohmann::json head = {{"format_version", header.format_version},
                         {"env", header.env},
                         {"epsilon", header.epsilon},
                         {"seed", header.seed},
                         {"n_episodes", demos.episodes.size()}};
  out << head.dump() << '\n';
  for (const auto& ep : demos.episodes) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : ep) states.push_back({s.x, s.y});
    out << nlohmann::json{{"states", std::move(states)}}.dump() << '\n';
  }
}

DemoSet load_demos(const std::string& path, DemoHeader* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty demo file " + path);
  const auto head = nlohmann::json::parse(line);
  if (head.value("format_version", 0) != 1) {
    throw std::runtime_error("unsupported demo format version");
  }
  if (header != nullptr) {
    header->format_version = head.at("format_version").get<int>();
    header->env = head.at("env").get<std::string>();
    header->epsilon = head.at("epsilon").get<double>();
    header->seed = head.at("seed").get<std::uint64_t>();
  }
  std::vector<std::vector<GridState>> episodes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    std::vector<GridState> ep;
    for (const auto& s : rec.at("states")) {
      ep.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    }
    episodes.push_back(std::move(ep));
  }
  if (head.contains("n_episodes") &&
      head["n_episodes"].get<std::size_t>() != episodes.size()) {
    throw std::runtime_error("demo file is truncated: " + path);
  }
  return DemoSet::from_episodes(std::move(episodes));
}

namespace {

Rng derived_stream(std::uint64_t seed, std::uint32_t which) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), which};
  return Rng(seq);
}

}  // namespace

TrajectoryStreams::TrajectoryStreams(std::uint64_t seed)
    : player(derived_stream(seed, 1)),
      opponent(derived_stream(seed, 2)),
      mixing(derived_stream(seed, 3)),
      env(derived_stream(seed, 4)) {}

Trajectory rollout_episode(const GridConfig& env, const GaussianPolicy& player,
                           const GaussianPolicy& opponent, double alpha,
                           const RewardFn& reward_fn, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  TrajectoryStreams streams(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GridWorld world(env);
  Trajectory tr;
  tr.states.push_back(world.reset());
  while (true) {
    const GridState s = world.state();
    const Vector sv = to_vector(s);
    const GridAction a_pl = to_action(player.sample(sv, streams.player));
    const GridAction a_op = to_action(opponent.sample(sv, streams.opponent));
    const bool use_opponent = unif(streams.mixing) < 1.0 - alpha;
    const StepResult step =
        world.step(use_opponent ? a_op : a_pl, streams.env);
    tr.player_actions.push_back(a_pl);
    tr.opponent_actions.push_back(a_op);
    tr.executed_opponent.push_back(use_opponent);
    tr.states.push_back(step.next_state);
    tr.rewards.push_back(reward_fn ? reward_fn(s, step.next_state) : 0.0);
    tr.true_rewards.push_back(step.reward);
    if (step.done) {
      tr.done = step.reached_goal;
      break;
    }
  }
  return tr;
}

namespace {

void append(RolloutBatch& batch, Trajectory tr) {
  batch.total_steps += tr.length();
  batch.trajectories.push_back(std::move(tr));
}

}  // namespace

RolloutBatch collect_trajectories(const GridConfig& env,
                                  const GaussianPolicy& player,
                                  const GaussianPolicy& opponent, double alpha,
                                  const RewardFn& reward_fn, int n_traj,
                                  Rng& rng) {
  if (n_traj <= 0) throw std::invalid_argument("n_traj must be positive");
  RolloutBatch batch;
  for (int i = 0; i < n_traj; ++i) {
    append(batch, rollout_episode(env, player, opponent, alpha, reward_fn, rng()));
  }
  return batch;
}

RolloutBatch collect_steps(const GridConfig& env, const GaussianPolicy& player,
                           const GaussianPolicy& opponent, double alpha,
                           const RewardFn& reward_fn, int min_steps, Rng& rng) {
  if (min_steps <= 0) throw std::invalid_argument("min_steps must be positive");
  RolloutBatch batch;
  while (batch.total_steps < min_steps) {
    append(batch, rollout_episode(env, player, opponent, alpha, reward_fn, rng()));
  }
  return batch;
}

void assign_surrogate_rewards(RolloutBatch& batch, const Discriminator& d) {
  const Vector r = d.surrogate_rewards(batch.pairs());
  int row = 0;
  for (auto& tr : batch.trajectories) {
    for (auto& v : tr.rewards) v = r(row++);
  }
}

void assign_entropies(RolloutBatch& batch, const GaussianPolicy& player) {
  const double h = player.entropy();
  batch.entropies.clear();
  for (const auto& tr : batch.trajectories) {
    batch.entropies.emplace_back(tr.length(), h);
  }
}

DemoSet collect_demonstrations(const GridConfig& env,
                               const GaussianPolicy& expert, int n_episodes,
                               Rng& rng) {
  if (n_episodes <= 0) throw std::invalid_argument("n_episodes must be positive");
  std::vector<std::vector<GridState>> episodes;
  for (int i = 0; i < n_episodes; ++i) {
    Trajectory tr = rollout_episode(env, expert, expert, 1.0, {}, rng());
    episodes.push_back(std::move(tr.states));
  }
  return DemoSet::from_episodes(std::move(episodes));
}

Returns compute_returns(RolloutBatch& batch, const GaussianPolicy& player,
                        double gamma, EntropySign sign) {
  if (batch.trajectories.empty()) {
    throw std::invalid_argument("cannot compute returns of an empty batch");
  }
  if (batch.entropies.size() != batch.trajectories.size()) {
    assign_entropies(batch, player);
  }
  const double s = sign == EntropySign::kBonus ? 1.0 : -1.0;
  Returns out;
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& tr = batch.trajectories[i];
    const auto& h = batch.entropies[i];
    const int len = tr.length();
    Vector g(len), g_log(len);
    double acc = 0.0, acc_log = 0.0;
    for (int t = len - 1; t >= 0; --t) {
      acc = tr.rewards[t] + gamma * acc;
      acc_log = s * h[t] + gamma * acc_log;
      g(t) = acc;
      g_log(t) = acc_log;
    }
    out.reward.push_back(std::move(g));
    out.entropy.push_back(std::move(g_log));
  }
  return out;
}

Vector combined_targets(const Returns& returns, double lambda_ent) {
  Eigen::Index n = 0;
  for (const auto& g : returns.reward) n += g.size();
  Vector out(n);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < returns.reward.size(); ++i) {
    const auto len = returns.reward[i].size();
    out.segment(row, len) = returns.reward[i] + lambda_ent * returns.entropy[i];
    row += len;
  }
  return out;
}

}  // namespace rgail
