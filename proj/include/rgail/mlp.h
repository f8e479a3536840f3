#ifndef RGAIL_MLP_H_
#define RGAIL_MLP_H_

#include <random>
#include <string>
#include <vector>

#include "rgail/autodiff.h"
#include "rgail/tensor.h"

namespace rgail {

enum class Activation { kTanh, kIdentity };

struct DenseLayer {
  Tensor weight;  // fan_in x fan_out
  Tensor bias;    // 1 x fan_out
};

// Affine layers with a tanh between consecutive layers; the last layer is
// linear.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation hidden_activation = Activation::kTanh;

  // Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
  static MlpParams init(int input_dim, const std::vector<int>& hidden,
                        int output_dim, std::mt19937_64& rng);

  int input_dim() const;
  int output_dim() const;
  // Throws std::invalid_argument if consecutive layers do not chain.
  void validate() const;

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
};

// Forward pass recorded on a tape; input is batch x input_dim.
ad::Var forward(ad::Tape& tape, MlpParams& params, ad::Var input);

// Tape-free forward pass for inference.
Matrix forward(const MlpParams& params, const Matrix& input);

// Flattening helpers, layer by layer (weight then bias, row-major).
Vector flatten_values(const std::vector<const Tensor*>& tensors);
Vector flatten_grads(const std::vector<const Tensor*>& tensors);
void zero_grads(const std::vector<Tensor*>& tensors);

}  // namespace rgail

#endif  // RGAIL_MLP_H_
