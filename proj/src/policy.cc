#include "rgail/policy.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rgail {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_actions(const Matrix& states, const Matrix& actions, int dim) {
  if (actions.rows() != states.rows() || actions.cols() != dim) {
    throw std::invalid_argument("action batch does not match the policy");
  }
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double neg_log_sigmoid(double z) {
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

GaussianPolicy GaussianPolicy::init(int state_dim, int action_dim,
                                    const std::vector<int>& hidden,
                                    double initial_log_std,
                                    std::mt19937_64& rng) {
  GaussianPolicy p;
  p.mean_net = MlpParams::init(state_dim, hidden, action_dim, rng);
  p.log_std = Tensor(Matrix::Constant(1, action_dim, initial_log_std));
  return p;
}

Matrix GaussianPolicy::mean(const Matrix& states) const {
  return forward(mean_net, states);
}

Vector GaussianPolicy::mean(const Vector& state) const {
  return forward(mean_net, Matrix(state.transpose())).row(0).transpose();
}

Vector GaussianPolicy::sample(const Vector& state, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector a = mean(state);
  for (int d = 0; d < action_dim(); ++d) {
    a(d) += std::exp(log_std.values()(0, d)) * normal(rng);
  }
  return a;
}

Vector GaussianPolicy::log_density(const Matrix& states,
                                   const Matrix& actions) const {
  check_actions(states, actions, action_dim());
  const Matrix mu = mean(states);
  const Eigen::RowVectorXd inv_std = (-log_std.values().row(0)).array().exp();
  const Matrix z = (actions - mu).array().rowwise() * inv_std.array();
  const double norm =
      log_std.values().sum() + action_dim() * kHalfLog2Pi;
  return (-0.5 * z.rowwise().squaredNorm()).array() - norm;
}

double GaussianPolicy::log_density(const Vector& state,
                                   const Vector& action) const {
  return log_density(Matrix(state.transpose()), Matrix(action.transpose()))(0);
}

double GaussianPolicy::entropy() const {
  return log_std.values().sum() + action_dim() * (0.5 + kHalfLog2Pi);
}

void GaussianPolicy::clamp_log_std() {
  log_std.values() = log_std.values().cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);
}

std::vector<Tensor*> GaussianPolicy::parameters() {
  auto out = mean_net.tensors();
  out.push_back(&log_std);
  return out;
}

std::vector<const Tensor*> GaussianPolicy::parameters() const {
  auto out = mean_net.tensors();
  out.push_back(&log_std);
  return out;
}

ad::Var log_density(ad::Tape& tape, GaussianPolicy& policy, ad::Var states,
                    ad::Var actions) {
  check_actions(states.value(), actions.value(), policy.action_dim());
  ad::Var mu = forward(tape, policy.mean_net, states);
  ad::Var log_std = tape.parameter(policy.log_std);
  ad::Var z = ad::mul(ad::sub(actions, mu), ad::exp(ad::neg(log_std)));
  ad::Var quad = ad::scale(ad::row_sum(ad::square(z)), -0.5);
  return ad::add_scalar(ad::sub(quad, ad::sum(log_std)),
                        -policy.action_dim() * kHalfLog2Pi);
}

ad::Var entropy(ad::Tape& tape, GaussianPolicy& policy) {
  return ad::add_scalar(ad::sum(tape.parameter(policy.log_std)),
                        policy.action_dim() * (0.5 + kHalfLog2Pi));
}

void MixturePolicy::validate() const {
  if (player == nullptr || opponent == nullptr) {
    throw std::invalid_argument("mixture needs both components");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("mixture alpha must lie in (0, 1]");
  }
  if (player->action_dim() != opponent->action_dim() ||
      player->state_dim() != opponent->state_dim()) {
    throw std::invalid_argument("mixture components disagree on dimensions");
  }
}

Vector MixturePolicy::log_density(const Matrix& states,
                                  const Matrix& actions) const {
  validate();
  const Vector lp = player->log_density(states, actions);
  if (alpha == 1.0) return lp;
  const Vector lo = opponent->log_density(states, actions);
  const double la = std::log(alpha);
  const double lb = std::log1p(-alpha);
  Vector out(lp.size());
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const double x = la + lp(i);
    const double z = lb + lo(i);
    const double m = std::max(x, z);
    out(i) = m + std::log(std::exp(x - m) + std::exp(z - m));
  }
  return out;
}

double MixturePolicy::log_density(const Vector& state,
                                  const Vector& action) const {
  return log_density(Matrix(state.transpose()), Matrix(action.transpose()))(0);
}

ad::Var mixture_log_density(ad::Tape& tape, const MixturePolicy& mix,
                            ad::Var states, ad::Var actions) {
  mix.validate();
  ad::Var lp = log_density(tape, *mix.player, states, actions);
  if (mix.alpha == 1.0) return ad::log_mix(lp, lp, 1.0);
  ad::Var lo = log_density(tape, *mix.opponent, states, actions);
  return ad::log_mix(lp, lo, mix.alpha);
}

Discriminator Discriminator::init(int state_dim, const std::vector<int>& hidden,
                                  std::mt19937_64& rng) {
  Discriminator d;
  d.net = MlpParams::init(2 * state_dim, hidden, 1, rng);
  d.input_mean = Matrix::Zero(1, 2 * state_dim);
  d.input_std = Matrix::Ones(1, 2 * state_dim);
  return d;
}

void Discriminator::fit_normalizer(const Matrix& pairs) {
  if (pairs.rows() == 0 || pairs.cols() != pair_dim()) {
    throw std::invalid_argument("normalizer needs a nonempty pair batch");
  }
  input_mean = pairs.colwise().mean();
  const Matrix centered = pairs.rowwise() - input_mean.row(0);
  input_std = (centered.array().square().colwise().sum() /
               static_cast<double>(pairs.rows()))
                  .sqrt()
                  .max(1e-3)
                  .matrix();
}

Matrix Discriminator::normalize(const Matrix& pairs) const {
  if (pairs.cols() != pair_dim()) {
    throw std::invalid_argument("pair width does not match the discriminator");
  }
  return ((pairs.rowwise() - input_mean.row(0)).array().rowwise() /
          input_std.row(0).array())
      .matrix();
}

Vector Discriminator::logits(const Matrix& pairs) const {
  return forward(net, normalize(pairs)).col(0).cwiseMax(-kMaxLogit).cwiseMin(kMaxLogit);
}

Vector Discriminator::discriminate(const Matrix& pairs) const {
  return logits(pairs).unaryExpr(&sigmoid);
}

double Discriminator::discriminate(const Vector& s, const Vector& next) const {
  Matrix pair(1, s.size() + next.size());
  pair << s.transpose(), next.transpose();
  return discriminate(pair)(0);
}

Vector Discriminator::surrogate_rewards(const Matrix& pairs) const {
  return logits(pairs).unaryExpr(&neg_log_sigmoid);
}

double Discriminator::surrogate_reward(const Vector& s,
                                       const Vector& next) const {
  Matrix pair(1, s.size() + next.size());
  pair << s.transpose(), next.transpose();
  return surrogate_rewards(pair)(0);
}

ad::Var discriminator_logits(ad::Tape& tape, Discriminator& d,
                             const Matrix& pairs) {
  return forward(tape, d.net, tape.constant(d.normalize(pairs)));
}

ad::Var discriminator_loss(ad::Tape& tape, Discriminator& d,
                           const Matrix& agent_pairs,
                           const Matrix& expert_pairs) {
  if (agent_pairs.rows() == 0 || expert_pairs.rows() == 0) {
    throw std::invalid_argument("discriminator loss needs both sources");
  }
  ad::Var agent = ad::mean(ad::log_sigmoid(discriminator_logits(tape, d, agent_pairs)));
  ad::Var expert = ad::mean(
      ad::log_sigmoid(ad::neg(discriminator_logits(tape, d, expert_pairs))));
  return ad::neg(ad::add(agent, expert));
}

ValueFunction ValueFunction::init(int state_dim, const std::vector<int>& hidden,
                                  std::mt19937_64& rng) {
  return ValueFunction{MlpParams::init(state_dim, hidden, 1, rng)};
}

Vector ValueFunction::values(const Matrix& states) const {
  return forward(net, states).col(0);
}

ad::Var value_predictions(ad::Tape& tape, ValueFunction& v, ad::Var states) {
  return forward(tape, v.net, states);
}

}  // namespace rgail
