#ifndef RGAIL_POLICY_H_
#define RGAIL_POLICY_H_

#include <random>
#include <vector>

#include "rgail/autodiff.h"
#include "rgail/mlp.h"
#include "rgail/tensor.h"

namespace rgail {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;
inline constexpr double kMaxLogit = 20.0;

// Diagonal Gaussian with a state-dependent mean and a free,
// state-independent log standard deviation.
struct GaussianPolicy {
  MlpParams mean_net;
  Tensor log_std;  // 1 x action_dim

  static GaussianPolicy init(int state_dim, int action_dim,
                             const std::vector<int>& hidden,
                             double initial_log_std, std::mt19937_64& rng);

  int state_dim() const { return mean_net.input_dim(); }
  int action_dim() const { return static_cast<int>(log_std.shape()[1]); }

  Matrix mean(const Matrix& states) const;
  Vector mean(const Vector& state) const;
  Vector sample(const Vector& state, std::mt19937_64& rng) const;
  // Batched density without a tape; returns one entry per row.
  Vector log_density(const Matrix& states, const Matrix& actions) const;
  double log_density(const Vector& state, const Vector& action) const;
  // sum_d (0.5 + 0.5 ln 2 pi + log_std_d); the same for every state.
  double entropy() const;

  void clamp_log_std();
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
};

ad::Var log_density(ad::Tape& tape, GaussianPolicy& policy, ad::Var states,
                    ad::Var actions);
ad::Var entropy(ad::Tape& tape, GaussianPolicy& policy);

// pi_mix = alpha pi_player + (1 - alpha) pi_opponent. Non-owning.
struct MixturePolicy {
  GaussianPolicy* player = nullptr;
  GaussianPolicy* opponent = nullptr;
  double alpha = 1.0;

  void validate() const;
  Vector log_density(const Matrix& states, const Matrix& actions) const;
  double log_density(const Vector& state, const Vector& action) const;
};

// Differentiable with respect to both components' parameters.
ad::Var mixture_log_density(ad::Tape& tape, const MixturePolicy& mix,
                            ad::Var states, ad::Var actions);

// Classifier over concatenated (s, s') pairs. Inputs are standardized with
// statistics fitted on the expert demonstrations.
struct Discriminator {
  MlpParams net;
  Matrix input_mean;  // 1 x pair_dim
  Matrix input_std;   // 1 x pair_dim

  static Discriminator init(int state_dim, const std::vector<int>& hidden,
                            std::mt19937_64& rng);

  int pair_dim() const { return net.input_dim(); }
  void fit_normalizer(const Matrix& pairs);
  Matrix normalize(const Matrix& pairs) const;

  // Logits clamped to [-kMaxLogit, kMaxLogit].
  Vector logits(const Matrix& pairs) const;
  Vector discriminate(const Matrix& pairs) const;
  double discriminate(const Vector& s, const Vector& next) const;
  // -log D, always strictly positive.
  Vector surrogate_rewards(const Matrix& pairs) const;
  double surrogate_reward(const Vector& s, const Vector& next) const;

  std::vector<Tensor*> parameters() { return net.tensors(); }
};

// Unclamped logits for training, batch x 1.
ad::Var discriminator_logits(ad::Tape& tape, Discriminator& d,
                             const Matrix& pairs);
// Binary cross-entropy with agent pairs labelled 1 and expert pairs 0:
//   -(mean log D(agent) + mean log(1 - D(expert))).
ad::Var discriminator_loss(ad::Tape& tape, Discriminator& d,
                           const Matrix& agent_pairs,
                           const Matrix& expert_pairs);

double sigmoid(double z);
// -log sigmoid(z), computed without overflow.
double neg_log_sigmoid(double z);

struct ValueFunction {
  MlpParams net;

  static ValueFunction init(int state_dim, const std::vector<int>& hidden,
                            std::mt19937_64& rng);
  Vector values(const Matrix& states) const;
  std::vector<Tensor*> parameters() { return net.tensors(); }
};

ad::Var value_predictions(ad::Tape& tape, ValueFunction& v, ad::Var states);

}  // namespace rgail

#endif  // RGAIL_POLICY_H_
