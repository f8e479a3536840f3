#include "rgail/autodiff.h"

#include <gtest/gtest.h>

#include <random>

#include "test_util.h"

namespace rgail::ad {
namespace {

using testing::gradient_error;
using testing::numeric_gradient;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

using Op = std::function<Var(Tape&, std::vector<Var>&)>;

// Checks an op against central differences. The loss contracts the op
// output with fixed random weights so every output entry matters.
void check_op(const Op& op, std::vector<Tensor> inputs, std::mt19937_64& rng,
              double tol = 1e-6) {
  std::vector<Tensor*> ptrs;
  for (auto& t : inputs) ptrs.push_back(&t);

  Matrix weights;
  auto loss = [&](Tape& tape) {
    std::vector<Var> vars;
    for (auto* t : ptrs) vars.push_back(tape.parameter(*t));
    Var out = op(tape, vars);
    if (weights.size() == 0) weights = random_matrix(out.rows(), out.cols(), rng);
    return sum(mul(out, tape.constant(weights)));
  };

  for (auto* t : ptrs) t->zero_grad();
  Tape tape;
  tape.backward(loss(tape));
  Vector analytic(0);
  for (auto* t : ptrs) {
    Vector g = Eigen::Map<const Vector>(t->grad().data(), t->size());
    Vector joined(analytic.size() + g.size());
    joined << analytic, g;
    analytic = joined;
  }
  const Vector numeric = numeric_gradient(
      [&] {
        Tape t;
        return loss(t).scalar();
      },
      ptrs);
  EXPECT_LT(gradient_error(analytic, numeric), tol);
}

class OpGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{42};
  Tensor rand(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
    return Tensor(random_matrix(r, c, rng, lo, hi));
  }
};

TEST_F(OpGradient, Matmul) {
  check_op([](Tape&, auto& v) { return matmul(v[0], v[1]); }, {rand(3, 4), rand(4, 2)}, rng);
}

TEST_F(OpGradient, AddSubMulWithBroadcasting) {
  for (auto shape : {std::pair<int, int>{3, 4}, {1, 4}, {3, 1}, {1, 1}}) {
    check_op([](Tape&, auto& v) { return add(v[0], v[1]); },
             {rand(3, 4), rand(shape.first, shape.second)}, rng);
    check_op([](Tape&, auto& v) { return sub(v[0], v[1]); },
             {rand(3, 4), rand(shape.first, shape.second)}, rng);
    check_op([](Tape&, auto& v) { return mul(v[0], v[1]); },
             {rand(3, 4), rand(shape.first, shape.second)}, rng);
  }
}

TEST_F(OpGradient, UnaryMaps) {
  check_op([](Tape&, auto& v) { return neg(v[0]); }, {rand(2, 3)}, rng);
  check_op([](Tape&, auto& v) { return scale(v[0], -2.5); }, {rand(2, 3)}, rng);
  check_op([](Tape&, auto& v) { return add_scalar(v[0], 0.7); }, {rand(2, 3)}, rng);
  check_op([](Tape&, auto& v) { return tanh(v[0]); }, {rand(2, 3, -2, 2)}, rng);
  check_op([](Tape&, auto& v) { return exp(v[0]); }, {rand(2, 3)}, rng);
  check_op([](Tape&, auto& v) { return log(v[0]); }, {rand(2, 3, 0.2, 3.0)}, rng);
  check_op([](Tape&, auto& v) { return square(v[0]); }, {rand(2, 3)}, rng);
  check_op([](Tape&, auto& v) { return sigmoid(v[0]); }, {rand(2, 3, -4, 4)}, rng);
  check_op([](Tape&, auto& v) { return log_sigmoid(v[0]); }, {rand(2, 3, -6, 6)}, rng);
}

TEST_F(OpGradient, ClampAwayFromKinks) {
  // Values kept clear of the bounds so the finite difference is smooth.
  Tensor x(Matrix{{-2.0, -0.3, 0.1, 0.4, 2.0}});
  check_op([](Tape&, auto& v) { return clamp(v[0], -1.0, 1.0); }, {x}, rng);
}

TEST_F(OpGradient, MinimumAwayFromTies) {
  Tensor a(Matrix{{0.1, 0.9, -0.4}});
  Tensor b(Matrix{{0.5, 0.2, -0.1}});
  check_op([](Tape&, auto& v) { return minimum(v[0], v[1]); }, {a, b}, rng);
}

TEST_F(OpGradient, LogMix) {
  for (double alpha : {0.3, 0.9, 0.999}) {
    check_op([alpha](Tape&, auto& v) { return log_mix(v[0], v[1], alpha); },
             {rand(4, 1, -5, 1), rand(4, 1, -5, 1)}, rng);
  }
}

TEST_F(OpGradient, Reductions) {
  check_op([](Tape&, auto& v) { return sum(v[0]); }, {rand(3, 2)}, rng);
  check_op([](Tape&, auto& v) { return mean(v[0]); }, {rand(3, 2)}, rng);
  check_op([](Tape&, auto& v) { return row_sum(v[0]); }, {rand(3, 2)}, rng);
  check_op([](Tape&, auto& v) { return broadcast_rows(v[0], 4); }, {rand(1, 3)}, rng);
}

TEST_F(OpGradient, ComposedExpression) {
  check_op(
      [](Tape& t, auto& v) {
        Var h = tanh(add(matmul(v[0], v[1]), v[2]));
        return log_sigmoid(scale(row_sum(mul(h, h)), 0.5) - t.constant(0.3));
      },
      {rand(5, 3), rand(3, 4), rand(1, 4)}, rng);
}

TEST(Tape, LogMixAtAlphaOneIsExactAndStopsGradient) {
  Tensor a(Matrix{{-1.2, 0.4}});
  Tensor b(Matrix{{0.3, -2.0}});
  Tape tape;
  Var va = tape.parameter(a), vb = tape.parameter(b);
  Var m = log_mix(va, vb, 1.0);
  EXPECT_EQ(m.value(), a.values());
  tape.backward(sum(m));
  EXPECT_TRUE((b.grad().array() == 0.0).all());
  EXPECT_TRUE((a.grad().array() == 1.0).all());
}

TEST(Tape, LogMixIsStableForFarApartInputs) {
  Tape tape;
  Var m = log_mix(tape.constant(Matrix{{-800.0}}), tape.constant(Matrix{{-1.0}}), 0.5);
  EXPECT_NEAR(m.scalar(), std::log(0.5) - 1.0, 1e-12);
}

TEST(Tape, SumOfParametersHasUnitGradient) {
  Tensor w(Matrix::Random(3, 4));
  Tape tape;
  tape.backward(sum(tape.parameter(w)));
  EXPECT_TRUE((w.grad().array() == 1.0).all());
}

TEST(Tape, UnusedParameterHasZeroGradient) {
  Tensor used(Matrix::Random(2, 2)), unused(Matrix::Random(2, 2));
  unused.zero_grad();
  Tape tape;
  tape.parameter(unused);
  tape.backward(sum(square(tape.parameter(used))));
  EXPECT_TRUE((unused.grad().array() == 0.0).all());
}

TEST(Tape, NonScalarRootThrows) {
  Tensor w(Matrix::Random(2, 2));
  Tape tape;
  EXPECT_THROW(tape.backward(tape.parameter(w)), std::invalid_argument);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape tape;
  Var a = tape.constant(Matrix::Zero(2, 3));
  Var b = tape.constant(Matrix::Zero(2, 2));
  EXPECT_THROW(matmul(a, tape.constant(Matrix::Zero(2, 3))), std::invalid_argument);
  EXPECT_THROW(add(a, b), std::invalid_argument);
}

TEST(Tape, GradientsAccumulateAcrossBackwardCalls) {
  Tensor w(Matrix{{2.0}});
  w.zero_grad();
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(square(tape.parameter(w)));
  }
  EXPECT_DOUBLE_EQ(w.grad()(0, 0), 8.0);
}

}  // namespace
}  // namespace rgail::ad
