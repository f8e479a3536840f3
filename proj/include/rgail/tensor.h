#ifndef RGAIL_TENSOR_H_
#define RGAIL_TENSOR_H_

#include <Eigen/Dense>

#include <array>

namespace rgail {

// Row-major so that the flat value array matches the checkpoint layout.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Rank-2 array of doubles with an optional gradient buffer of the same
// shape. Vectors are stored as 1 x n rows.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Eigen::Index rows, Eigen::Index cols)
      : values_(Matrix::Zero(rows, cols)) {}
  explicit Tensor(Matrix values) : values_(std::move(values)) {}

  std::array<Eigen::Index, 2> shape() const {
    return {values_.rows(), values_.cols()};
  }
  Eigen::Index size() const { return values_.size(); }

  Matrix& values() { return values_; }
  const Matrix& values() const { return values_; }

  bool has_grad() const { return grad_.size() == values_.size(); }
  // Allocates a zero gradient on first use.
  Matrix& grad() {
    if (!has_grad()) grad_ = Matrix::Zero(values_.rows(), values_.cols());
    return grad_;
  }
  const Matrix& grad() const { return grad_; }
  void zero_grad() { grad().setZero(); }
  void drop_grad() { grad_.resize(0, 0); }

 private:
  Matrix values_;
  Matrix grad_;
};

}  // namespace rgail

#endif  // RGAIL_TENSOR_H_
