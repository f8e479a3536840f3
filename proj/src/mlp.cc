#include "rgail/mlp.h"

#include <cmath>
#include <stdexcept>

namespace rgail {

MlpParams MlpParams::init(int input_dim, const std::vector<int>& hidden,
                          int output_dim, std::mt19937_64& rng) {
  MlpParams p;
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] <= 0 || dims[l + 1] <= 0) {
      throw std::invalid_argument("layer widths must be positive");
    }
    const double bound = std::sqrt(1.0 / dims[l]);
    std::uniform_real_distribution<double> unif(-bound, bound);
    DenseLayer layer{Tensor(dims[l], dims[l + 1]), Tensor(1, dims[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.values().data()[i] = unif(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

int MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.shape()[0]);
}

int MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.shape()[1]);
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto w = layers[l].weight.shape();
    const auto b = layers[l].bias.shape();
    if (b[0] != 1 || b[1] != w[1]) {
      throw std::invalid_argument("bias shape does not match layer width");
    }
    if (l > 0 && layers[l - 1].weight.shape()[1] != w[0]) {
      throw std::invalid_argument("layer dimensions do not chain");
    }
  }
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

ad::Var forward(ad::Tape& tape, MlpParams& params, ad::Var input) {
  if (input.cols() != params.input_dim()) {
    throw std::invalid_argument("MLP input width " +
                                std::to_string(input.cols()) + " != " +
                                std::to_string(params.input_dim()));
  }
  ad::Var h = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    h = ad::add(ad::matmul(h, tape.parameter(layer.weight)),
                tape.parameter(layer.bias));
    const bool last = l + 1 == params.layers.size();
    if (!last && params.hidden_activation == Activation::kTanh) {
      h = ad::tanh(h);
    }
  }
  return h;
}

Matrix forward(const MlpParams& params, const Matrix& input) {
  if (input.cols() != params.input_dim()) {
    throw std::invalid_argument("MLP input width " +
                                std::to_string(input.cols()) + " != " +
                                std::to_string(params.input_dim()));
  }
  Matrix h = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = h * layer.weight.values();
    z.rowwise() += layer.bias.values().row(0);
    const bool last = l + 1 == params.layers.size();
    if (!last && params.hidden_activation == Activation::kTanh) {
      z = z.array().tanh();
    }
    h = std::move(z);
  }
  return h;
}

Vector flatten_values(const std::vector<const Tensor*>& tensors) {
  Eigen::Index n = 0;
  for (const auto* t : tensors) n += t->size();
  Vector out(n);
  Eigen::Index k = 0;
  for (const auto* t : tensors) {
    out.segment(k, t->size()) =
        Eigen::Map<const Vector>(t->values().data(), t->size());
    k += t->size();
  }
  return out;
}

Vector flatten_grads(const std::vector<const Tensor*>& tensors) {
  Eigen::Index n = 0;
  for (const auto* t : tensors) n += t->size();
  Vector out = Vector::Zero(n);
  Eigen::Index k = 0;
  for (const auto* t : tensors) {
    if (t->has_grad()) {
      out.segment(k, t->size()) =
          Eigen::Map<const Vector>(t->grad().data(), t->size());
    }
    k += t->size();
  }
  return out;
}

void zero_grads(const std::vector<Tensor*>& tensors) {
  for (auto* t : tensors) t->zero_grad();
}

}  // namespace rgail
