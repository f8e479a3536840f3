#ifndef RGAIL_TESTS_POLICY_GRADIENT_ORACLE_H_
#define RGAIL_TESTS_POLICY_GRADIENT_ORACLE_H_

#include <cmath>

#include "rgail/rollout.h"
#include "rgail/trainer.h"

namespace rgail::testing {

inline Vector score_function(GaussianPolicy& p, const Vector& s, const Vector& a) {
  zero_grads(p.parameters());
  ad::Tape tape;
  tape.backward(ad::sum(log_density(tape, p, tape.constant(Matrix(s.transpose())),
                                    tape.constant(Matrix(a.transpose())))));
  Vector g = flatten_grads(static_cast<const GaussianPolicy&>(p).parameters());
  zero_grads(p.parameters());
  return g;
}

// Per-sample loop: direct discounted sums for the returns and the mixture
// responsibilities applied to each component's own score function.
inline PolicyGradients brute_force_policy_gradients(const RolloutBatch& batch,
                                                    GaussianPolicy& pl,
                                                    GaussianPolicy& op,
                                                    double alpha, double gamma,
                                                    double lambda, double sign) {
  PolicyGradients out{
      Vector::Zero(flatten_values(static_cast<const GaussianPolicy&>(pl).parameters()).size()),
      Vector::Zero(flatten_values(static_cast<const GaussianPolicy&>(op).parameters()).size())};
  const double h = pl.entropy();
  const double n = static_cast<double>(batch.trajectories.size());
  for (const auto& tr : batch.trajectories) {
    const int len = tr.length();
    for (int t = 0; t < len; ++t) {
      double g = 0.0, glog = 0.0;
      for (int k = t; k < len; ++k) {
        g += std::pow(gamma, k - t) * tr.rewards[k];
        glog += std::pow(gamma, k - t) * sign * h;
      }
      const double w = std::pow(gamma, t) * (g + lambda * glog) / n;
      const Vector s = to_vector(tr.states[t]);
      const Vector a = to_vector(tr.executed_action(t));
      const double pp = std::exp(pl.log_density(s, a));
      const double po = std::exp(op.log_density(s, a));
      const double mix = alpha * pp + (1.0 - alpha) * po;
      out.theta += w * (alpha * pp / mix) * score_function(pl, s, a);
      if (alpha < 1.0) {
        out.phi += w * ((1.0 - alpha) * po / mix) * score_function(op, s, a);
      }
    }
  }
  return out;
}

// max |a - b| relative to max(1, max |b|).
inline double scaled_max_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace rgail::testing

#endif  // RGAIL_TESTS_POLICY_GRADIENT_ORACLE_H_
