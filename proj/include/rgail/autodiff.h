#ifndef RGAIL_AUTODIFF_H_
#define RGAIL_AUTODIFF_H_

// Tape-based reverse-mode differentiation over rank-2 matrices. A tape is
// built fresh for every loss evaluation and discarded afterwards.
//
// Binary elementwise ops broadcast the second operand when it is 1 x 1,
// 1 x cols or rows x 1; gradients are summed back to the operand shape.

#include <functional>
#include <vector>

#include "rgail/tensor.h"

namespace rgail::ad {

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Convenience for 1 x 1 nodes.
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  // Leaf bound to a parameter tensor; backward() accumulates into
  // tensor.grad(). The tensor must outlive the tape.
  Var parameter(Tensor& tensor);

  // Reverse sweep from a 1 x 1 root. Throws std::invalid_argument for a
  // non-scalar root.
  void backward(Var root);

  // Gradient of the last backward() root with respect to any node.
  const Matrix& grad(Var v) const;
  const Matrix& value(Var v) const { return nodes_[v.id_].value; }

  // Records a node. backprop receives the node's output gradient and output
  // value and must add into parents via accumulate().
  using Backprop =
      std::function<void(Tape&, const Matrix& grad, const Matrix& out)>;
  Var record(Matrix value, bool requires_grad, Backprop backprop);
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  void accumulate(Var v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backprop backprop;
    Tensor* bound = nullptr;
  };
  std::vector<Node> nodes_;
};

// Arithmetic.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

// Elementwise maps.
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sigmoid(Var a);
// log(sigmoid(a)), stable for large |a|.
Var log_sigmoid(Var a);
// Gradient is passed only where lo < a < hi.
Var clamp(Var a, double lo, double hi);
// Elementwise minimum; ties route the gradient to a.
Var minimum(Var a, Var b);

// log(alpha e^a + (1 - alpha) e^b), elementwise and stable. alpha = 1
// returns a exactly and sends no gradient to b.
Var log_mix(Var a, Var b, double alpha);

// Reductions.
Var sum(Var a);       // 1 x 1
Var mean(Var a);      // 1 x 1
Var row_sum(Var a);   // rows x 1
// Repeats a 1 x cols row to rows x cols.
Var broadcast_rows(Var a, Eigen::Index rows);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace rgail::ad

#endif  // RGAIL_AUTODIFF_H_
