#include "rgail/autodiff.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rgail::ad {
namespace {

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw std::logic_error("Var is not on a tape");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("Vars on different tapes");
  return tape_of(a);
}

bool broadcastable(const Matrix& b, Eigen::Index rows, Eigen::Index cols) {
  return (b.rows() == rows || b.rows() == 1) &&
         (b.cols() == cols || b.cols() == 1);
}

Matrix expand(const Matrix& b, Eigen::Index rows, Eigen::Index cols) {
  if (b.rows() == rows && b.cols() == cols) return b;
  return b.replicate(rows / b.rows(), cols / b.cols());
}

// Sums g down to the shape of an operand that was broadcast.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

void check_binary(const Matrix& a, const Matrix& b, const char* op) {
  if (!broadcastable(b, a.rows(), a.cols())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

// Elementwise unary op given f(x) and f'(x) expressed through (x, y).
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& t = tape_of(a);
  Matrix y = f(a.value());
  return t.record(std::move(y), t.requires_grad(a),
                  [a, df](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& x = tape.value(a);
                    tape.accumulate(a, g.cwiseProduct(df(x)));
                  });
}

double stable_log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const Matrix& Var::value() const { return tape_of(*this).value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::logic_error("Var::scalar on a non-scalar");
  return v(0, 0);
}

Var Tape::record(Matrix value, bool requires_grad, Backprop backprop) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad,
                        requires_grad ? std::move(backprop) : Backprop(),
                        nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return record(std::move(value), false, {}); }

Var Tape::constant(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

Var Tape::parameter(Tensor& tensor) {
  Var v = record(tensor.values(), true, {});
  nodes_[v.id_].bound = &tensor;
  return v;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape_ != this) throw std::logic_error("root is not on this tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar root");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[root.id_].grad = Matrix::Ones(1, 1);
  for (int i = root.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backprop) n.backprop(*this, n.grad, n.value);
    if (n.bound != nullptr) n.bound->grad() += n.grad;
  }
}

const Matrix& Tape::grad(Var v) const {
  static const Matrix kEmpty;
  const Node& n = nodes_[v.id_];
  return n.grad.size() == 0 ? kEmpty : n.grad;
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  Matrix y = a.value() * b.value();
  return t.record(std::move(y), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                    if (tape.requires_grad(a)) {
                      tape.accumulate(a, g * tape.value(b).transpose());
                    }
                    if (tape.requires_grad(b)) {
                      tape.accumulate(b, tape.value(a).transpose() * g);
                    }
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_binary(a.value(), b.value(), "add");
  Matrix y = a.value() + expand(b.value(), a.rows(), a.cols());
  return t.record(std::move(y), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(a, g);
                    if (tape.requires_grad(b)) {
                      const Matrix& bv = tape.value(b);
                      tape.accumulate(b, reduce_to(g, bv.rows(), bv.cols()));
                    }
                  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_binary(a.value(), b.value(), "sub");
  Matrix y = a.value() - expand(b.value(), a.rows(), a.cols());
  return t.record(std::move(y), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(a, g);
                    if (tape.requires_grad(b)) {
                      const Matrix& bv = tape.value(b);
                      tape.accumulate(b, -reduce_to(g, bv.rows(), bv.cols()));
                    }
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_binary(a.value(), b.value(), "mul");
  Matrix y = a.value().cwiseProduct(expand(b.value(), a.rows(), a.cols()));
  return t.record(
      std::move(y), t.requires_grad(a) || t.requires_grad(b),
      [a, b](Tape& tape, const Matrix& g, const Matrix&) {
        const Matrix& av = tape.value(a);
        const Matrix& bv = tape.value(b);
        if (tape.requires_grad(a)) {
          tape.accumulate(a, g.cwiseProduct(expand(bv, av.rows(), av.cols())));
        }
        if (tape.requires_grad(b)) {
          tape.accumulate(b, reduce_to(g.cwiseProduct(av), bv.rows(), bv.cols()));
        }
      });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  return t.record(a.value() * c, t.requires_grad(a),
                  [a, c](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(a, g * c);
                  });
}

Var add_scalar(Var a, double c) {
  Tape& t = tape_of(a);
  Matrix y = a.value().array() + c;
  return t.record(std::move(y), t.requires_grad(a),
                  [a](Tape& tape, const Matrix& g, const Matrix&) { tape.accumulate(a, g); });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Matrix y = a.value().array().tanh();
  return t.record(std::move(y), t.requires_grad(a),
                  [a](Tape& tape, const Matrix& g, const Matrix& out) {
                    tape.accumulate(
                        a, (g.array() * (1.0 - out.array().square())).matrix());
                  });
}

Var exp(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp(); },
      [](const Matrix& x) -> Matrix { return x.array().exp(); });
}

Var log(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log(); },
      [](const Matrix& x) -> Matrix { return x.array().inverse(); });
}

Var square(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().square(); },
      [](const Matrix& x) -> Matrix { return 2.0 * x.array(); });
}

Var sigmoid(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.unaryExpr(&stable_sigmoid); },
      [](const Matrix& x) -> Matrix {
        const Matrix s = x.unaryExpr(&stable_sigmoid);
        return s.array() * (1.0 - s.array());
      });
}

Var log_sigmoid(Var a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix { return x.unaryExpr(&stable_log_sigmoid); },
      // d/dz log sigmoid(z) = sigmoid(-z)
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double z) { return stable_sigmoid(-z); });
      });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a,
      [lo, hi](const Matrix& x) -> Matrix {
        return x.cwiseMax(lo).cwiseMin(hi);
      },
      [lo, hi](const Matrix& x) -> Matrix {
        return x.unaryExpr(
            [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
      });
}

Var minimum(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("minimum: shape mismatch");
  }
  Matrix y = a.value().cwiseMin(b.value());
  return t.record(std::move(y), t.requires_grad(a) || t.requires_grad(b),
                  [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& av = tape.value(a);
                    const Matrix& bv = tape.value(b);
                    const Matrix take_a =
                        (av.array() <= bv.array()).cast<double>().matrix();
                    tape.accumulate(a, g.cwiseProduct(take_a));
                    if (tape.requires_grad(b)) {
                      tape.accumulate(
                          b, g.cwiseProduct(
                                 (1.0 - take_a.array()).matrix()));
                    }
                  });
}

Var log_mix(Var a, Var b, double alpha) {
  Tape& t = tape_of(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("log_mix: shape mismatch");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("log_mix: alpha must lie in (0, 1]");
  }
  if (alpha == 1.0) {
    return t.record(a.value(), t.requires_grad(a),
                    [a](Tape& tape, const Matrix& g, const Matrix&) { tape.accumulate(a, g); });
  }
  const double la = std::log(alpha);
  const double lb = std::log1p(-alpha);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix y(av.rows(), av.cols());
  // Weight of the first component in the mixture, reused by backprop.
  Matrix wa(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.size(); ++i) {
    const double x = la + av.data()[i];
    const double z = lb + bv.data()[i];
    const double m = std::max(x, z);
    const double ex = std::exp(x - m);
    const double ez = std::exp(z - m);
    y.data()[i] = m + std::log(ex + ez);
    wa.data()[i] = ex / (ex + ez);
  }
  return t.record(std::move(y), t.requires_grad(a) || t.requires_grad(b),
                  [a, b, wa = std::move(wa)](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(a, g.cwiseProduct(wa));
                    if (tape.requires_grad(b)) {
                      tape.accumulate(
                          b, g.cwiseProduct((1.0 - wa.array()).matrix()));
                    }
                  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  return t.record(Matrix::Constant(1, 1, a.value().sum()), t.requires_grad(a),
                  [a](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& av = tape.value(a);
                    tape.accumulate(a, Matrix::Constant(av.rows(), av.cols(),
                                                        g(0, 0)));
                  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  Matrix y = a.value().rowwise().sum();
  return t.record(std::move(y), t.requires_grad(a),
                  [a](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& av = tape.value(a);
                    tape.accumulate(a, g.replicate(1, av.cols()));
                  });
}

Var broadcast_rows(Var a, Eigen::Index rows) {
  Tape& t = tape_of(a);
  if (a.rows() != 1) throw std::invalid_argument("broadcast_rows needs 1 x n");
  Matrix y = a.value().replicate(rows, 1);
  return t.record(std::move(y), t.requires_grad(a),
                  [a](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(a, g.colwise().sum());
                  });
}

}  // namespace rgail::ad
