#ifndef RGAIL_ADAM_H_
#define RGAIL_ADAM_H_

#include <cstdint>
#include <vector>

#include "rgail/tensor.h"

namespace rgail {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators for a fixed list of parameter tensors.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const std::vector<Tensor*>& params,
                              AdamConfig config);
};

// One bias-corrected Adam descent step using the gradients stored on each
// tensor. Tensors without a gradient are treated as having zero gradient.
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

}  // namespace rgail

#endif  // RGAIL_ADAM_H_
