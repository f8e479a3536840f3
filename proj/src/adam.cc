#include "rgail/adam.h"

#include <cmath>
#include <stdexcept>

namespace rgail {

AdamState AdamState::for_params(const std::vector<Tensor*>& params,
                                AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto* p : params) {
    s.first_moment.push_back(Matrix::Zero(p->shape()[0], p->shape()[1]));
    s.second_moment.push_back(Matrix::Zero(p->shape()[0], p->shape()[1]));
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw std::invalid_argument("Adam state tracks a different parameter list");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (m.rows() != p.shape()[0] || m.cols() != p.shape()[1]) {
      throw std::invalid_argument("Adam moment shape mismatch");
    }
    if (!p.has_grad()) p.grad();
    const Matrix& g = p.grad();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p.values().array() -= c.learning_rate * (m.array() / bc1) /
                          ((v.array() / bc2).sqrt() + c.epsilon);
  }
}

}  // namespace rgail
