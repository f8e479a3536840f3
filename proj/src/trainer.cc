#include "rgail/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rgail {
namespace {

constexpr int kStateDim = gridworld::kStateDim;
constexpr int kActionDim = gridworld::kActionDim;

std::vector<Tensor*> mutable_params(GaussianPolicy& p) { return p.parameters(); }

Vector flat_grads(const GaussianPolicy& p) { return flatten_grads(p.parameters()); }

void scale_grads(const std::vector<Tensor*>& params, double c) {
  for (auto* t : params) t->grad() *= c;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

Matrix column(const Vector& v) { return Matrix(v); }

// GAE over per-step rewards; the value after the last stored step is taken
// as zero (no bootstrap at truncation).
void gae(const RolloutBatch& batch, const Vector& step_rewards,
         const Vector& values, double gamma, double lambda, Vector& advantages,
         Vector& targets) {
  advantages.resize(batch.total_steps);
  Eigen::Index offset = 0;
  for (const auto& tr : batch.trajectories) {
    const int len = tr.length();
    double acc = 0.0;
    for (int t = len - 1; t >= 0; --t) {
      const Eigen::Index i = offset + t;
      const double next_v = t + 1 < len ? values(i + 1) : 0.0;
      const double delta = step_rewards(i) + gamma * next_v - values(i);
      acc = delta + gamma * lambda * acc;
      advantages(i) = acc;
    }
    offset += len;
  }
  targets = advantages + values;
}

void normalize(Vector& v) {
  if (v.size() < 2) return;
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  v = (v.array() - mean) / (sd + 1e-8);
}

struct PpoInputs {
  Matrix states;
  Matrix actions;
  Vector old_logp;
  Vector advantages;
  Vector value_targets;
};

struct PpoSettings {
  double alpha = 1.0;
  double clip = 0.2;
  int player_epochs = 5;
  int opponent_epochs = 5;
  int minibatch = 256;
  double entropy_coef = 0.0;
};

// Clipped surrogate of the mixture at the given rows, plus an optional
// player entropy bonus.
ad::Var clipped_objective(ad::Tape& tape, const MixturePolicy& mix,
                          const Matrix& states, const Matrix& actions,
                          const Vector& old_logp, const Vector& adv,
                          double clip, double entropy_coef, double* clip_frac,
                          double* approx_kl) {
  ad::Var s = tape.constant(states);
  ad::Var a = tape.constant(actions);
  ad::Var lp = mixture_log_density(tape, mix, s, a);
  ad::Var ratio = ad::exp(ad::sub(lp, tape.constant(column(old_logp))));
  ad::Var adv_v = tape.constant(column(adv));
  ad::Var surr1 = ad::mul(ratio, adv_v);
  ad::Var surr2 = ad::mul(ad::clamp(ratio, 1.0 - clip, 1.0 + clip), adv_v);
  ad::Var obj = ad::mean(ad::minimum(surr1, surr2));
  if (entropy_coef != 0.0) {
    obj = ad::add(obj, ad::scale(entropy(tape, *mix.player), entropy_coef));
  }
  if (clip_frac != nullptr) {
    const auto& r = ratio.value().array();
    *clip_frac = ((r - 1.0).abs() > clip).cast<double>().mean();
  }
  if (approx_kl != nullptr) {
    *approx_kl = (column(old_logp) - lp.value()).mean();
  }
  return obj;
}

PpoDiagnostics run_ppo(GaussianPolicy& player, GaussianPolicy& opponent,
                       ValueFunction& value, AdamState& player_opt,
                       AdamState& opponent_opt, AdamState& value_opt,
                       const PpoInputs& in, const PpoSettings& cfg, Rng& rng) {
  PpoDiagnostics diag;
  const int n = static_cast<int>(in.states.rows());
  if (n == 0) throw std::invalid_argument("PPO needs a nonempty batch");
  const MixturePolicy mix{&player, &opponent, cfg.alpha};
  const bool separate_opponent = &opponent != &player;
  const auto player_params = mutable_params(player);
  const auto opponent_params = mutable_params(opponent);
  const auto value_params = value.parameters();
  const int epochs = std::max(cfg.player_epochs, cfg.opponent_epochs);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int mb = std::max(1, std::min(cfg.minibatch, n));
  double obj_sum = 0.0, vloss_sum = 0.0, kl_sum = 0.0, clip_sum = 0.0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool step_player = epoch < cfg.player_epochs;
    const bool step_opponent =
        separate_opponent && cfg.alpha < 1.0 && epoch < cfg.opponent_epochs;
    for (int start = 0; start < n; start += mb) {
      const std::vector<int> idx(order.begin() + start,
                                 order.begin() + std::min(n, start + mb));
      const Matrix s = gather_rows(in.states, idx);
      const Matrix a = gather_rows(in.actions, idx);

      zero_grads(player_params);
      if (separate_opponent) zero_grads(opponent_params);
      double clip_frac = 0.0, kl = 0.0;
      {
        ad::Tape tape;
        ad::Var obj = clipped_objective(
            tape, mix, s, a, gather(in.old_logp, idx), gather(in.advantages, idx),
            cfg.clip, cfg.entropy_coef, &clip_frac, &kl);
        const double value_now = obj.scalar();
        if (!std::isfinite(value_now)) {
          std::ostringstream msg;
          msg << "non-finite PPO objective at epoch " << epoch << ", rows "
              << start << ".." << start + static_cast<int>(idx.size())
              << ", player entropy " << player.entropy();
          throw std::runtime_error(msg.str());
        }
        tape.backward(obj);
        obj_sum += value_now;
      }
      if (step_player) {
        scale_grads(player_params, -1.0);  // ascent
        adam_step(player_params, player_opt);
        player.clamp_log_std();
      }
      if (step_opponent) {
        adam_step(opponent_params, opponent_opt);  // descent
        opponent.clamp_log_std();
      }

      zero_grads(value_params);
      {
        ad::Tape tape;
        ad::Var pred = value_predictions(tape, value, tape.constant(s));
        ad::Var loss = ad::mean(ad::square(
            ad::sub(pred, tape.constant(column(gather(in.value_targets, idx))))));
        if (!std::isfinite(loss.scalar())) {
          throw std::runtime_error("non-finite value loss in PPO update");
        }
        tape.backward(loss);
        vloss_sum += loss.scalar();
      }
      adam_step(value_params, value_opt);

      kl_sum += kl;
      clip_sum += clip_frac;
      ++diag.minibatches;
    }
  }
  if (diag.minibatches > 0) {
    diag.policy_objective = obj_sum / diag.minibatches;
    diag.value_loss = vloss_sum / diag.minibatches;
    diag.approx_kl = kl_sum / diag.minibatches;
    diag.clip_fraction = clip_sum / diag.minibatches;
  }
  return diag;
}

void write_csv_double(std::ostringstream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  if (total_steps <= 0) throw std::invalid_argument("total_steps must be positive");
  if (lambda_ent < 0.0) throw std::invalid_argument("lambda_ent must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (batch_steps <= 0 || minibatch_size <= 0 || ppo_epochs < 0 ||
      discriminator_minibatch <= 0) {
    throw std::invalid_argument("batch sizes must be positive");
  }
  if (!(ppo_clip > 0.0)) throw std::invalid_argument("ppo_clip must be positive");
  env.validate();
}

std::string metrics_csv_header() {
  return "iteration,env_steps,mean_episode_return_true,mean_surrogate_reward,"
         "mean_D_agent,mean_D_expert,player_entropy,alpha,seed";
}

std::string to_csv_row(const MetricsRow& r) {
  std::ostringstream out;
  out << r.iteration << ',' << r.env_steps << ',';
  write_csv_double(out, r.mean_episode_return_true);
  out << ',';
  write_csv_double(out, r.mean_surrogate_reward);
  out << ',';
  write_csv_double(out, r.mean_d_agent);
  out << ',';
  write_csv_double(out, r.mean_d_expert);
  out << ',';
  write_csv_double(out, r.player_entropy);
  out << ',';
  write_csv_double(out, r.alpha);
  out << ',' << r.seed;
  return out.str();
}

Rng iteration_rng(std::uint64_t seed, std::int64_t iteration,
                  std::uint32_t tag) {
  const auto it = static_cast<std::uint64_t>(iteration);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(it),
                    static_cast<std::uint32_t>(it >> 32), tag};
  return Rng(seq);
}

TrainState TrainState::init(const TrainConfig& config, const DemoSet& demos) {
  config.validate();
  Rng rng = iteration_rng(config.seed, -1, 7);
  TrainState s;
  s.player = GaussianPolicy::init(kStateDim, kActionDim, config.hidden,
                                  config.initial_log_std, rng);
  s.opponent = GaussianPolicy::init(kStateDim, kActionDim, config.hidden,
                                    config.initial_log_std, rng);
  s.value = ValueFunction::init(kStateDim, config.hidden, rng);
  s.discriminator = Discriminator::init(kStateDim, config.hidden, rng);
  if (demos.n_pairs() > 0) s.discriminator.fit_normalizer(demos.pairs);
  s.player_opt = AdamState::for_params(s.player.parameters(),
                                       {config.policy_lr, 0.9, 0.999, 1e-8});
  s.opponent_opt = AdamState::for_params(s.opponent.parameters(),
                                         {config.policy_lr, 0.9, 0.999, 1e-8});
  s.value_opt = AdamState::for_params(s.value.parameters(),
                                      {config.value_lr, 0.9, 0.999, 1e-8});
  s.discriminator_opt = AdamState::for_params(
      s.discriminator.parameters(), {config.discriminator_lr, 0.9, 0.999, 1e-8});
  return s;
}

void TrainState::push_metrics(const MetricsRow& row) {
  metrics.push_back(row);
  while (metrics.size() > kMetricsCapacity) metrics.pop_front();
}

Checkpoint policy_to_checkpoint(const GaussianPolicy& policy) {
  Checkpoint c;
  c.set_attribute("kind", "gaussian_policy");
  c.put_mlp("mean_net", policy.mean_net);
  c.put("log_std", policy.log_std.values());
  return c;
}

GaussianPolicy policy_from_checkpoint(const Checkpoint& ckpt) {
  GaussianPolicy p;
  p.mean_net = ckpt.get_mlp("mean_net");
  p.log_std = Tensor(ckpt.get("log_std"));
  if (p.log_std.shape()[0] != 1 || p.log_std.shape()[1] != p.mean_net.output_dim()) {
    throw std::runtime_error("policy checkpoint has inconsistent log_std");
  }
  return p;
}

void save_policy(const GaussianPolicy& policy, const std::string& path) {
  save_checkpoint(policy_to_checkpoint(policy), path);
}

GaussianPolicy load_policy(const std::string& path) {
  return policy_from_checkpoint(load_checkpoint(path));
}

namespace {

Checkpoint value_to_checkpoint(const ValueFunction& v) {
  Checkpoint c;
  c.set_attribute("kind", "value_function");
  c.put_mlp("net", v.net);
  return c;
}

Checkpoint discriminator_to_checkpoint(const Discriminator& d) {
  Checkpoint c;
  c.set_attribute("kind", "discriminator");
  c.put_mlp("net", d.net);
  c.put("input_mean", d.input_mean);
  c.put("input_std", d.input_std);
  return c;
}

Discriminator discriminator_from_checkpoint(const Checkpoint& c) {
  Discriminator d;
  d.net = c.get_mlp("net");
  d.input_mean = c.get("input_mean");
  d.input_std = c.get("input_std");
  return d;
}

Checkpoint optimizer_to_checkpoint(const TrainState& s) {
  Checkpoint c;
  c.set_attribute("kind", "optimizer_state");
  c.put_adam("player", s.player_opt);
  c.put_adam("opponent", s.opponent_opt);
  c.put_adam("value", s.value_opt);
  c.put_adam("discriminator", s.discriminator_opt);
  c.set_attribute("iteration", std::to_string(s.iteration));
  c.set_attribute("env_steps", std::to_string(s.env_steps));
  Matrix m(static_cast<Eigen::Index>(s.metrics.size()), 8);
  std::string seeds;
  for (std::size_t i = 0; i < s.metrics.size(); ++i) {
    const auto& r = s.metrics[i];
    m.row(i) << static_cast<double>(r.iteration), static_cast<double>(r.env_steps),
        r.mean_episode_return_true, r.mean_surrogate_reward, r.mean_d_agent,
        r.mean_d_expert, r.player_entropy, r.alpha;
    seeds += (i ? "," : "") + std::to_string(r.seed);
  }
  c.put("metrics", m);
  c.set_attribute("metrics_seeds", seeds);
  return c;
}

void optimizer_from_checkpoint(const Checkpoint& c, TrainState& s) {
  s.player_opt = c.get_adam("player");
  s.opponent_opt = c.get_adam("opponent");
  s.value_opt = c.get_adam("value");
  s.discriminator_opt = c.get_adam("discriminator");
  s.iteration = c.int_attribute("iteration");
  s.env_steps = c.int_attribute("env_steps");
  const Matrix& m = c.get("metrics");
  std::stringstream seeds(c.attribute("metrics_seeds"));
  s.metrics.clear();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    MetricsRow r;
    r.iteration = static_cast<std::int64_t>(m(i, 0));
    r.env_steps = static_cast<std::int64_t>(m(i, 1));
    r.mean_episode_return_true = m(i, 2);
    r.mean_surrogate_reward = m(i, 3);
    r.mean_d_agent = m(i, 4);
    r.mean_d_expert = m(i, 5);
    r.player_entropy = m(i, 6);
    r.alpha = m(i, 7);
    std::string tok;
    std::getline(seeds, tok, ',');
    r.seed = tok.empty() ? 0 : std::stoull(tok);
    s.metrics.push_back(r);
  }
}

void merge_into(Checkpoint& dst, const Checkpoint& src, const std::string& prefix) {
  for (const auto& [k, v] : src.arrays) dst.arrays[prefix + "." + k] = v;
  for (const auto& [k, v] : src.attributes) dst.attributes[prefix + "." + k] = v;
}

Checkpoint extract(const Checkpoint& src, const std::string& prefix) {
  Checkpoint out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : src.arrays) {
    if (k.rfind(p, 0) == 0) out.arrays[k.substr(p.size())] = v;
  }
  for (const auto& [k, v] : src.attributes) {
    if (k.rfind(p, 0) == 0) out.attributes[k.substr(p.size())] = v;
  }
  return out;
}

}  // namespace

Checkpoint TrainState::to_checkpoint() const {
  Checkpoint c;
  merge_into(c, policy_to_checkpoint(player), "player");
  merge_into(c, policy_to_checkpoint(opponent), "opponent");
  merge_into(c, value_to_checkpoint(value), "value");
  merge_into(c, discriminator_to_checkpoint(discriminator), "discriminator");
  merge_into(c, optimizer_to_checkpoint(*this), "optimizer");
  return c;
}

TrainState TrainState::from_checkpoint(const Checkpoint& c) {
  TrainState s;
  s.player = policy_from_checkpoint(extract(c, "player"));
  s.opponent = policy_from_checkpoint(extract(c, "opponent"));
  s.value = ValueFunction{extract(c, "value").get_mlp("net")};
  s.discriminator = discriminator_from_checkpoint(extract(c, "discriminator"));
  optimizer_from_checkpoint(extract(c, "optimizer"), s);
  return s;
}

void save_train_state(const TrainState& state, const TrainConfig& config,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_checkpoint(policy_to_checkpoint(state.player), (fs::path(dir) / "player.json").string());
  save_checkpoint(policy_to_checkpoint(state.opponent), (fs::path(dir) / "opponent.json").string());
  save_checkpoint(value_to_checkpoint(state.value), (fs::path(dir) / "value.json").string());
  save_checkpoint(discriminator_to_checkpoint(state.discriminator),
                  (fs::path(dir) / "discriminator.json").string());
  save_checkpoint(optimizer_to_checkpoint(state), (fs::path(dir) / "optimizer.json").string());
  char alpha_hex[64];
  std::snprintf(alpha_hex, sizeof(alpha_hex), "%a", config.alpha);
  nlohmann::json manifest = {{"format_version", kCheckpointFormatVersion},
                             {"player", "player.json"},
                             {"opponent", "opponent.json"},
                             {"value", "value.json"},
                             {"discriminator", "discriminator.json"},
                             {"optimizer", "optimizer.json"},
                             {"alpha", config.alpha},
                             {"alpha_hex", alpha_hex},
                             {"seed", config.seed},
                             {"iteration", state.iteration},
                             {"env_steps", state.env_steps}};
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

TrainState load_train_state(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest = nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string()));
  if (manifest.value("format_version", 0) != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported manifest version in " + dir);
  }
  auto file = [&](const char* key) {
    return (fs::path(dir) / manifest.at(key).get<std::string>()).string();
  };
  TrainState s;
  s.player = policy_from_checkpoint(load_checkpoint(file("player")));
  s.opponent = policy_from_checkpoint(load_checkpoint(file("opponent")));
  s.value = ValueFunction{load_checkpoint(file("value")).get_mlp("net")};
  s.discriminator = discriminator_from_checkpoint(load_checkpoint(file("discriminator")));
  optimizer_from_checkpoint(load_checkpoint(file("optimizer")), s);
  return s;
}

double discriminator_step(Discriminator& d, const Matrix& agent_pairs,
                          const Matrix& expert_pairs, AdamState& opt) {
  const auto params = d.parameters();
  zero_grads(params);
  ad::Tape tape;
  ad::Var loss = discriminator_loss(tape, d, agent_pairs, expert_pairs);
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw std::runtime_error("non-finite discriminator loss");
  tape.backward(loss);
  adam_step(params, opt);
  return value;
}

DiscriminatorDiagnostics update_discriminator(Discriminator& d,
                                              const RolloutBatch& batch,
                                              const DemoSet& demos,
                                              AdamState& opt, Rng& rng,
                                              int minibatch_size, int epochs) {
  if (batch.total_steps == 0 || demos.n_pairs() == 0) {
    throw std::invalid_argument("discriminator update needs agent and expert pairs");
  }
  if (minibatch_size <= 0) throw std::invalid_argument("minibatch must be positive");
  const Matrix agent = batch.pairs();
  const Matrix& expert = demos.pairs;
  const int na = static_cast<int>(agent.rows());
  const int ne = static_cast<int>(expert.rows());
  const int n = std::max(na, ne);
  DiscriminatorDiagnostics diag;
  double loss_sum = 0.0;
  for (int e = 0; e < epochs; ++e) {
    // Larger side: a permutation; smaller side: resampled with replacement.
    auto draw = [&](int size) {
      std::vector<int> idx(n);
      if (size == n) {
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
      } else {
        std::uniform_int_distribution<int> pick(0, size - 1);
        for (auto& i : idx) i = pick(rng);
      }
      return idx;
    };
    const auto ia = draw(na);
    const auto ie = draw(ne);
    for (int start = 0; start < n; start += minibatch_size) {
      const int stop = std::min(n, start + minibatch_size);
      const std::vector<int> sa(ia.begin() + start, ia.begin() + stop);
      const std::vector<int> se(ie.begin() + start, ie.begin() + stop);
      loss_sum += discriminator_step(d, gather_rows(agent, sa),
                                     gather_rows(expert, se), opt);
      ++diag.steps;
    }
  }
  diag.mean_loss = diag.steps ? loss_sum / diag.steps : 0.0;
  diag.mean_d_agent = d.discriminate(agent).mean();
  diag.mean_d_expert = d.discriminate(expert).mean();
  return diag;
}

PolicyGradients reference_policy_gradients(const RolloutBatch& batch,
                                           GaussianPolicy& player,
                                           GaussianPolicy& opponent,
                                           double alpha, const Returns& returns,
                                           double gamma, double lambda_ent) {
  if (returns.reward.size() != batch.trajectories.size() ||
      returns.entropy.size() != batch.trajectories.size()) {
    throw std::invalid_argument("returns do not match the batch");
  }
  Vector weights(batch.total_steps);
  Eigen::Index row = 0;
  const double n_traj = static_cast<double>(batch.trajectories.size());
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const int len = batch.trajectories[i].length();
    if (returns.reward[i].size() != len || returns.entropy[i].size() != len) {
      throw std::invalid_argument("returns do not match the batch");
    }
    double discount = 1.0;
    for (int t = 0; t < len; ++t, ++row) {
      weights(row) = discount *
                     (returns.reward[i](t) + lambda_ent * returns.entropy[i](t)) /
                     n_traj;
      discount *= gamma;
    }
  }
  const auto pp = player.parameters();
  const auto op = opponent.parameters();
  zero_grads(pp);
  zero_grads(op);
  ad::Tape tape;
  const MixturePolicy mix{&player, &opponent, alpha};
  ad::Var lp = mixture_log_density(tape, mix, tape.constant(batch.states()),
                                   tape.constant(batch.executed_actions()));
  tape.backward(ad::sum(ad::mul(lp, tape.constant(column(weights)))));
  PolicyGradients out{flat_grads(player), flat_grads(opponent)};
  zero_grads(pp);
  zero_grads(op);
  return out;
}

Vector compute_advantages(const RolloutBatch& batch, const Returns& returns,
                          const ValueFunction& value, const TrainConfig& config) {
  const Vector values = value.values(batch.states());
  const Vector targets = combined_targets(returns, config.lambda_ent);
  if (!config.use_gae) return targets - values;
  // Per-step reward whose discounted sum is G + lambda G^log.
  Vector step(batch.total_steps);
  Eigen::Index row = 0;
  const double sign = config.entropy_sign == EntropySign::kBonus ? 1.0 : -1.0;
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& tr = batch.trajectories[i];
    for (int t = 0; t < tr.length(); ++t, ++row) {
      step(row) = tr.rewards[t] + config.lambda_ent * sign * batch.entropies[i][t];
    }
  }
  Vector adv, unused;
  gae(batch, step, values, config.gamma, config.gae_lambda, adv, unused);
  return adv;
}

namespace {

PpoInputs build_inputs(TrainState& state, const RolloutBatch& batch,
                       const Returns& returns, const TrainConfig& config) {
  PpoInputs in;
  in.states = batch.states();
  in.actions = batch.executed_actions();
  in.old_logp = state.mixture(config.alpha).log_density(in.states, in.actions);
  in.advantages = compute_advantages(batch, returns, state.value, config);
  if (config.use_gae) {
    in.value_targets = in.advantages + state.value.values(in.states);
  } else {
    in.value_targets = combined_targets(returns, config.lambda_ent);
  }
  if (config.normalize_advantages) normalize(in.advantages);
  return in;
}

}  // namespace

PolicyGradients ppo_surrogate_gradients(TrainState& state,
                                        const RolloutBatch& batch,
                                        const Returns& returns,
                                        const TrainConfig& config) {
  const PpoInputs in = build_inputs(state, batch, returns, config);
  const auto pp = state.player.parameters();
  const auto op = state.opponent.parameters();
  zero_grads(pp);
  zero_grads(op);
  ad::Tape tape;
  ad::Var obj = clipped_objective(tape, state.mixture(config.alpha), in.states,
                                  in.actions, in.old_logp, in.advantages,
                                  config.ppo_clip, 0.0, nullptr, nullptr);
  tape.backward(obj);
  PolicyGradients out{flat_grads(state.player), flat_grads(state.opponent)};
  zero_grads(pp);
  zero_grads(op);
  return out;
}

PpoDiagnostics ppo_update(TrainState& state, const RolloutBatch& batch,
                          const Returns& returns, const TrainConfig& config,
                          Rng& rng) {
  const PpoInputs in = build_inputs(state, batch, returns, config);
  if (!in.advantages.allFinite() || !in.value_targets.allFinite()) {
    throw std::runtime_error("non-finite advantages or targets in PPO update");
  }
  PpoSettings cfg;
  cfg.alpha = config.alpha;
  cfg.clip = config.ppo_clip;
  cfg.player_epochs = config.effective_player_epochs();
  cfg.opponent_epochs = config.effective_opponent_epochs();
  cfg.minibatch = config.minibatch_size;
  return run_ppo(state.player, state.opponent, state.value, state.player_opt,
                 state.opponent_opt, state.value_opt, in, cfg, rng);
}

RobustGailfoTrainer::RobustGailfoTrainer(TrainConfig config, DemoSet demos)
    : config_(std::move(config)), demos_(std::move(demos)) {
  config_.validate();
  if (demos_.n_pairs() == 0) throw std::invalid_argument("demonstrations are empty");
  state_ = TrainState::init(config_, demos_);
}

RobustGailfoTrainer::RobustGailfoTrainer(TrainConfig config, DemoSet demos,
                                         TrainState resume)
    : config_(std::move(config)), demos_(std::move(demos)), state_(std::move(resume)) {
  config_.validate();
  if (demos_.n_pairs() == 0) throw std::invalid_argument("demonstrations are empty");
}

bool RobustGailfoTrainer::finished() const {
  if (config_.max_iterations >= 0 && state_.iteration >= config_.max_iterations) {
    return true;
  }
  return state_.env_steps >= config_.total_steps;
}

MetricsRow RobustGailfoTrainer::run_iteration() {
  Rng rng = iteration_rng(config_.seed, state_.iteration);
  // Rewards are left empty at collection time and assigned after the
  // discriminator update, which is when the algorithm reads them.
  RolloutBatch batch =
      collect_steps(config_.env, state_.player, state_.opponent, config_.alpha,
                    {}, config_.batch_steps, rng);
  const auto disc = update_discriminator(
      state_.discriminator, batch, demos_, state_.discriminator_opt, rng,
      config_.discriminator_minibatch, config_.discriminator_epochs);
  assign_surrogate_rewards(batch, state_.discriminator);
  assign_entropies(batch, state_.player);
  const Returns returns =
      compute_returns(batch, state_.player, config_.gamma, config_.entropy_sign);
  ppo_update(state_, batch, returns, config_, rng);

  ++state_.iteration;
  state_.env_steps += batch.total_steps;
  MetricsRow row;
  row.iteration = state_.iteration;
  row.env_steps = state_.env_steps;
  row.mean_episode_return_true = batch.mean_true_return();
  row.mean_surrogate_reward = batch.rewards().mean();
  row.mean_d_agent = disc.mean_d_agent;
  row.mean_d_expert = disc.mean_d_expert;
  row.player_entropy = state_.player.entropy();
  row.alpha = config_.alpha;
  row.seed = config_.seed;
  state_.push_metrics(row);
  return row;
}

void RobustGailfoTrainer::run(const MetricsSink& sink) {
  while (!finished()) {
    const MetricsRow row = run_iteration();
    if (sink) sink(row);
  }
}

TrainState train_robust_gailfo(const DemoSet& demos, const TrainConfig& config,
                               const MetricsSink& sink) {
  RobustGailfoTrainer trainer(config, demos);
  trainer.run(sink);
  return std::move(trainer.state());
}

GaussianPolicy train_expert_ppo(
    const GridConfig& env, const ExpertConfig& config,
    const std::function<void(const ExpertMetrics&)>& sink) {
  env.validate();
  if (config.total_steps < 0 || config.batch_steps <= 0) {
    throw std::invalid_argument("expert budget must be positive");
  }
  Rng init_rng = iteration_rng(config.seed, -1, 11);
  GaussianPolicy policy = GaussianPolicy::init(kStateDim, kActionDim, config.hidden,
                                               config.initial_log_std, init_rng);
  ValueFunction value = ValueFunction::init(kStateDim, config.hidden, init_rng);
  AdamState policy_opt = AdamState::for_params(policy.parameters(),
                                               {config.policy_lr, 0.9, 0.999, 1e-8});
  AdamState value_opt =
      AdamState::for_params(value.parameters(), {config.value_lr, 0.9, 0.999, 1e-8});

  std::int64_t steps = 0;
  for (std::int64_t it = 0; steps < config.total_steps; ++it) {
    Rng rng = iteration_rng(config.seed, it, 11);
    RolloutBatch batch = collect_steps(env, policy, policy, 1.0, config.reward_fn,
                                       config.batch_steps, rng);
    Vector step_rewards(batch.total_steps);
    Eigen::Index row = 0;
    int reached = 0;
    for (const auto& tr : batch.trajectories) {
      const auto& r = config.reward_fn ? tr.rewards : tr.true_rewards;
      for (double v : r) step_rewards(row++) = config.reward_scale * v;
      reached += tr.done ? 1 : 0;
    }
    PpoInputs in;
    in.states = batch.states();
    in.actions = batch.executed_actions();
    in.old_logp = policy.log_density(in.states, in.actions);
    gae(batch, step_rewards, value.values(in.states), config.gamma,
        config.gae_lambda, in.advantages, in.value_targets);
    normalize(in.advantages);
    PpoSettings cfg;
    cfg.alpha = 1.0;
    cfg.clip = config.ppo_clip;
    cfg.player_epochs = config.ppo_epochs;
    cfg.opponent_epochs = 0;
    cfg.minibatch = config.minibatch_size;
    cfg.entropy_coef = config.entropy_coef;
    AdamState unused_opt;
    run_ppo(policy, policy, value, policy_opt, unused_opt, value_opt, in, cfg, rng);
    steps += batch.total_steps;
    if (sink) {
      sink(ExpertMetrics{it + 1, steps, batch.mean_true_return(),
                         static_cast<double>(reached) / batch.trajectories.size(),
                         policy.entropy()});
    }
  }
  return policy;
}

}  // namespace rgail
