#include "rgail/policy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rgail/autodiff.h"
#include "test_util.h"

namespace rgail {
namespace {

using testing::gradient_error;
using testing::numeric_gradient;

constexpr double kLn2Pi = 1.8378770664093453;

GaussianPolicy make_policy(std::uint64_t seed, double log_std = 0.0) {
  std::mt19937_64 rng(seed);
  GaussianPolicy p = GaussianPolicy::init(2, 2, {8, 8}, log_std, rng);
  // Non-zero biases so the mean is not trivially zero.
  for (auto* t : p.mean_net.tensors()) t->values() += 0.2 * Matrix::Random(t->shape()[0], t->shape()[1]);
  return p;
}

Vector concat_grads(const std::vector<Tensor*>& ts) {
  std::vector<const Tensor*> c(ts.begin(), ts.end());
  return flatten_grads(c);
}

TEST(GaussianPolicy, LogDensityAtMeanWithUnitStd) {
  const GaussianPolicy p = make_policy(1, 0.0);
  const Vector s{{0.3, -0.4}};
  EXPECT_NEAR(p.log_density(s, p.mean(s)), -kLn2Pi, 1e-12);
  EXPECT_NEAR(-kLn2Pi, -1.837877, 1e-6);
}

TEST(GaussianPolicy, ShiftingBySigmaCostsOneHalf) {
  GaussianPolicy p = make_policy(2, 0.0);
  p.log_std.values() << 0.3, -0.7;
  const Vector s{{0.1, 0.9}};
  Vector a = p.mean(s);
  const double base = p.log_density(s, a);
  a(1) += std::exp(-0.7);
  EXPECT_NEAR(base - p.log_density(s, a), 0.5, 1e-12);
}

TEST(GaussianPolicy, BatchedAndTapedDensitiesAgree) {
  GaussianPolicy p = make_policy(3, -0.3);
  const Matrix states = Matrix::Random(6, 2);
  const Matrix actions = Matrix::Random(6, 2);
  const Vector batched = p.log_density(states, actions);
  ad::Tape tape;
  const Matrix taped = log_density(tape, p, tape.constant(states), tape.constant(actions)).value();
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(batched(i), p.log_density(Vector(states.row(i).transpose()),
                                          Vector(actions.row(i).transpose())), 1e-12);
    EXPECT_NEAR(batched(i), taped(i, 0), 1e-12);
  }
}

TEST(GaussianPolicy, EntropyClosedForm) {
  GaussianPolicy p = make_policy(4, 0.0);
  EXPECT_NEAR(p.entropy(), 2.837877, 1e-6);
  const double before = p.entropy();
  p.log_std.values().array() += std::log(2.0);
  EXPECT_NEAR(p.entropy() - before, 2.0 * std::log(2.0), 1e-12);
  ad::Tape tape;
  EXPECT_NEAR(entropy(tape, p).scalar(), p.entropy(), 1e-12);
}

TEST(GaussianPolicy, SamplesMatchMeanAndStd) {
  GaussianPolicy p = make_policy(5, 0.0);
  p.log_std.values() << -0.5, 0.4;
  const Vector s{{0.2, 0.6}};
  const Vector mu = p.mean(s);
  std::mt19937_64 rng(77);
  const int n = 100000;
  Vector sum = Vector::Zero(2), sum_sq = Vector::Zero(2);
  double neg_log = 0.0, neg_log_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector a = p.sample(s, rng);
    sum += a;
    sum_sq += a.cwiseProduct(a);
    const double l = -p.log_density(s, a);
    neg_log += l;
    neg_log_sq += l * l;
  }
  for (int d = 0; d < 2; ++d) {
    const double sigma = std::exp(p.log_std.values()(0, d));
    const double mean = sum(d) / n;
    const double sd = std::sqrt(sum_sq(d) / n - mean * mean);
    EXPECT_NEAR(mean, mu(d), 4.0 * sigma / std::sqrt(n));
    EXPECT_NEAR(sd, sigma, 4.0 * sigma / std::sqrt(2.0 * n));
  }
  const double h = neg_log / n;
  const double h_se = std::sqrt((neg_log_sq / n - h * h) / n);
  EXPECT_NEAR(h, p.entropy(), 4.0 * h_se);
}

TEST(GaussianPolicy, TinyStdIsDeterministicAndSeedReproducible) {
  GaussianPolicy p = make_policy(6, std::log(1e-12));
  const Vector s{{0.5, 0.5}};
  std::mt19937_64 rng(3);
  EXPECT_LT((p.sample(s, rng) - p.mean(s)).cwiseAbs().maxCoeff(), 1e-10);
  GaussianPolicy q = make_policy(6, 0.0);
  std::mt19937_64 a(3), b(3);
  EXPECT_EQ(q.sample(s, a), q.sample(s, b));
}

TEST(GaussianPolicy, ClampLogStd) {
  GaussianPolicy p = make_policy(7);
  p.log_std.values() << -9.0, 4.0;
  p.clamp_log_std();
  EXPECT_EQ(p.log_std.values()(0, 0), kMinLogStd);
  EXPECT_EQ(p.log_std.values()(0, 1), kMaxLogStd);
}

TEST(GaussianPolicy, LogDensityGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianPolicy p = make_policy(100 + trial, -0.2);
    p.log_std.values().setRandom();
    const Matrix states = Matrix::Random(5, 2);
    const Matrix actions = Matrix::Random(5, 2);
    auto loss = [&](ad::Tape& t) {
      return ad::sum(log_density(t, p, t.constant(states), t.constant(actions)));
    };
    zero_grads(p.parameters());
    ad::Tape tape;
    tape.backward(loss(tape));
    const Vector numeric = numeric_gradient(
        [&] {
          ad::Tape t;
          return loss(t).scalar();
        },
        p.parameters());
    EXPECT_LT(gradient_error(concat_grads(p.parameters()), numeric), 1e-5);
  }
}

TEST(Mixture, HalfMixOfPointTwoAndPointFour) {
  ad::Tape tape;
  const ad::Var m = ad::log_mix(tape.constant(std::log(0.2)), tape.constant(std::log(0.4)), 0.5);
  EXPECT_NEAR(m.scalar(), std::log(0.3), 1e-15);
  EXPECT_NEAR(m.scalar(), -1.203973, 1e-6);
}

TEST(Mixture, MatchesDirectArithmetic) {
  GaussianPolicy pl = make_policy(9, -0.1), op = make_policy(10, 0.2);
  const MixturePolicy mix{&pl, &op, 0.7};
  const Vector s{{0.4, -0.2}}, a{{0.1, 0.3}};
  const double direct = std::log(0.7 * std::exp(pl.log_density(s, a)) +
                                 0.3 * std::exp(op.log_density(s, a)));
  EXPECT_NEAR(mix.log_density(s, a), direct, 1e-12);
}

TEST(Mixture, AlphaOneEqualsPlayerExactly) {
  GaussianPolicy pl = make_policy(11), op = make_policy(12);
  const Matrix states = Matrix::Random(8, 2), actions = Matrix::Random(8, 2);
  const MixturePolicy mix{&pl, &op, 1.0};
  EXPECT_EQ(mix.log_density(states, actions), pl.log_density(states, actions));
  ad::Tape tape;
  const Matrix taped =
      mixture_log_density(tape, mix, tape.constant(states), tape.constant(actions)).value();
  for (int i = 0; i < 8; ++i) EXPECT_EQ(taped(i, 0), pl.log_density(states, actions)(i));
}

TEST(Mixture, IdenticalComponentsEqualEither) {
  GaussianPolicy pl = make_policy(13);
  GaussianPolicy op = pl;
  const Matrix states = Matrix::Random(8, 2), actions = Matrix::Random(8, 2);
  const MixturePolicy mix{&pl, &op, 0.35};
  EXPECT_LT((mix.log_density(states, actions) - pl.log_density(states, actions)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(Mixture, OpponentGradientVanishesAtAlphaOne) {
  GaussianPolicy pl = make_policy(14), op = make_policy(15);
  const Matrix states = Matrix::Random(8, 2), actions = Matrix::Random(8, 2);
  zero_grads(op.parameters());
  zero_grads(pl.parameters());
  ad::Tape tape;
  tape.backward(ad::sum(mixture_log_density(tape, MixturePolicy{&pl, &op, 1.0},
                                            tape.constant(states), tape.constant(actions))));
  EXPECT_TRUE((concat_grads(op.parameters()).array() == 0.0).all());
  EXPECT_GT(concat_grads(pl.parameters()).norm(), 0.0);
}

TEST(Mixture, GradientMatchesFiniteDifferences) {
  for (int trial = 0; trial < 10; ++trial) {
    GaussianPolicy pl = make_policy(200 + trial, -0.3), op = make_policy(300 + trial, 0.1);
    const double alpha = 0.5 + 0.05 * trial;
    const Matrix states = Matrix::Random(5, 2), actions = Matrix::Random(5, 2);
    auto loss = [&](ad::Tape& t) {
      return ad::sum(mixture_log_density(t, MixturePolicy{&pl, &op, alpha},
                                         t.constant(states), t.constant(actions)));
    };
    std::vector<Tensor*> all = pl.parameters();
    for (auto* t : op.parameters()) all.push_back(t);
    zero_grads(all);
    ad::Tape tape;
    tape.backward(loss(tape));
    const Vector numeric = numeric_gradient(
        [&] {
          ad::Tape t;
          return loss(t).scalar();
        },
        all);
    EXPECT_LT(gradient_error(concat_grads(all), numeric), 1e-5);
  }
}

TEST(Mixture, IntegratesToOne) {
  GaussianPolicy pl = make_policy(16, -0.4), op = make_policy(17, 0.1);
  const MixturePolicy mix{&pl, &op, 0.6};
  const Vector s{{0.3, 0.3}};
  // Midpoint rule on a grid wide enough to hold both components.
  const double lo = -9.0, hi = 9.0;
  const int n = 360;
  const double h = (hi - lo) / n;
  Matrix states(n * n, 2), actions(n * n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      states.row(i * n + j) = s.transpose();
      actions(i * n + j, 0) = lo + (i + 0.5) * h;
      actions(i * n + j, 1) = lo + (j + 0.5) * h;
    }
  }
  const double mass = mix.log_density(states, actions).array().exp().sum() * h * h;
  EXPECT_NEAR(mass, 1.0, 1e-2);
}

TEST(Mixture, RejectsBadAlpha) {
  GaussianPolicy pl = make_policy(18), op = make_policy(19);
  EXPECT_THROW((MixturePolicy{&pl, &op, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((MixturePolicy{&pl, &op, 1.2}.validate()), std::invalid_argument);
}

Discriminator make_discriminator(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Discriminator d = Discriminator::init(2, {8, 8}, rng);
  d.fit_normalizer(Matrix::Random(20, 4));
  return d;
}

TEST(Discriminator, ZeroLogitGivesOneHalfAndLnTwoReward) {
  Discriminator d = make_discriminator(1);
  for (auto* t : d.parameters()) t->values().setZero();
  const Vector s{{0.2, 0.3}}, n{{0.25, 0.28}};
  EXPECT_EQ(d.discriminate(s, n), 0.5);
  EXPECT_NEAR(d.surrogate_reward(s, n), std::log(2.0), 1e-15);
  EXPECT_NEAR(std::log(2.0), 0.693147, 1e-6);
}

TEST(Discriminator, RewardOfInverseEIsOne) {
  const double p = std::exp(-1.0);
  EXPECT_NEAR(neg_log_sigmoid(std::log(p / (1.0 - p))), 1.0, 1e-12);
}

TEST(Discriminator, ProbabilityMonotoneAndStrictlyInside) {
  double prev = 0.0;
  for (double z = -30.0; z <= 30.0; z += 0.5) {
    const double p = sigmoid(z);
    EXPECT_GE(p, prev);
    prev = p;
  }
  Discriminator d = make_discriminator(2);
  d.net.layers.back().bias.values()(0, 0) = 1e6;
  const Vector probs = d.discriminate(Matrix::Random(5, 4));
  EXPECT_TRUE((probs.array() < 1.0).all());
  EXPECT_TRUE((d.surrogate_rewards(Matrix::Random(5, 4)).array() > 0.0).all());
  d.net.layers.back().bias.values()(0, 0) = -1e6;
  EXPECT_TRUE((d.discriminate(Matrix::Random(5, 4)).array() > 0.0).all());
  EXPECT_TRUE(std::isfinite(d.surrogate_rewards(Matrix::Random(5, 4)).maxCoeff()));
}

TEST(Discriminator, RewardPositiveAndDecreasingInProbability) {
  double prev = std::numeric_limits<double>::infinity();
  for (double z = -20.0; z <= 20.0; z += 0.25) {
    const double r = neg_log_sigmoid(z);
    EXPECT_GT(r, 0.0);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Discriminator, MatchesSigmoidOfForward) {
  Discriminator d = make_discriminator(3);
  const Matrix pairs = Matrix::Random(10, 4);
  const Matrix z = forward(d.net, (pairs.rowwise() - d.input_mean.row(0)).array().rowwise() /
                                      d.input_std.row(0).array());
  const Vector probs = d.discriminate(pairs);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(probs(i), 1.0 / (1.0 + std::exp(-z(i, 0))), 1e-12);
}

TEST(Discriminator, NormalizerStdIsFloored) {
  Discriminator d = make_discriminator(4);
  Matrix pairs = Matrix::Random(10, 4);
  pairs.col(2).setConstant(0.7);
  d.fit_normalizer(pairs);
  EXPECT_EQ(d.input_std(0, 2), 1e-3);
  EXPECT_NEAR(d.input_mean(0, 2), 0.7, 1e-15);
}

TEST(Discriminator, LossGradientMatchesFiniteDifferences) {
  for (int trial = 0; trial < 10; ++trial) {
    Discriminator d = make_discriminator(400 + trial);
    const Matrix agent = Matrix::Random(6, 4), expert = Matrix::Random(5, 4);
    auto loss = [&](ad::Tape& t) { return discriminator_loss(t, d, agent, expert); };
    zero_grads(d.parameters());
    ad::Tape tape;
    tape.backward(loss(tape));
    const Vector numeric = numeric_gradient(
        [&] {
          ad::Tape t;
          return loss(t).scalar();
        },
        d.parameters());
    EXPECT_LT(gradient_error(concat_grads(d.parameters()), numeric), 1e-5);
  }
}

TEST(Discriminator, LossIsBinaryCrossEntropy) {
  Discriminator d = make_discriminator(5);
  const Matrix agent = Matrix::Random(6, 4), expert = Matrix::Random(5, 4);
  const Vector za = d.logits(agent), ze = d.logits(expert);
  double expected = 0.0;
  for (int i = 0; i < 6; ++i) expected += neg_log_sigmoid(za(i)) / 6.0;
  for (int i = 0; i < 5; ++i) expected += neg_log_sigmoid(-ze(i)) / 5.0;
  ad::Tape tape;
  EXPECT_NEAR(discriminator_loss(tape, d, agent, expert).scalar(), expected, 1e-12);
}

TEST(ValueFunction, RegressionGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  ValueFunction v = ValueFunction::init(2, {8, 8}, rng);
  const Matrix states = Matrix::Random(9, 2);
  const Matrix targets = Matrix::Random(9, 1);
  auto loss = [&](ad::Tape& t) {
    return ad::mean(ad::square(value_predictions(t, v, t.constant(states)) - t.constant(targets)));
  };
  zero_grads(v.parameters());
  ad::Tape tape;
  tape.backward(loss(tape));
  const Vector numeric = numeric_gradient(
      [&] {
        ad::Tape t;
        return loss(t).scalar();
      },
      v.parameters());
  EXPECT_LT(gradient_error(concat_grads(v.parameters()), numeric), 1e-5);
  EXPECT_EQ(v.values(states).size(), 9);
}

}  // namespace
}  // namespace rgail
