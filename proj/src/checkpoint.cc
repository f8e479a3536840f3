#include "rgail/checkpoint.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rgail {

const Matrix& Checkpoint::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw std::out_of_range("checkpoint has no array " + name);
  return it->second;
}

const std::string& Checkpoint::attribute(const std::string& key) const {
  auto it = attributes.find(key);
  if (it == attributes.end()) {
    throw std::out_of_range("checkpoint has no attribute " + key);
  }
  return it->second;
}

std::int64_t Checkpoint::int_attribute(const std::string& key) const {
  return std::stoll(attribute(key));
}

void Checkpoint::set_double(const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  attributes[key] = buf;
}

double Checkpoint::double_attribute(const std::string& key) const {
  return std::strtod(attribute(key).c_str(), nullptr);
}

void Checkpoint::put_mlp(const std::string& prefix, const MlpParams& mlp) {
  set_attribute(prefix + "/n_layers", std::to_string(mlp.layers.size()));
  set_attribute(prefix + "/activation",
                mlp.hidden_activation == Activation::kTanh ? "tanh" : "identity");
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const std::string base = prefix + "/layer" + std::to_string(l);
    put(base + "/weight", mlp.layers[l].weight.values());
    put(base + "/bias", mlp.layers[l].bias.values());
  }
}

MlpParams Checkpoint::get_mlp(const std::string& prefix) const {
  MlpParams mlp;
  const auto n = int_attribute(prefix + "/n_layers");
  mlp.hidden_activation = attribute(prefix + "/activation") == "tanh"
                              ? Activation::kTanh
                              : Activation::kIdentity;
  for (std::int64_t l = 0; l < n; ++l) {
    const std::string base = prefix + "/layer" + std::to_string(l);
    mlp.layers.push_back(
        DenseLayer{Tensor(get(base + "/weight")), Tensor(get(base + "/bias"))});
  }
  mlp.validate();
  return mlp;
}

void Checkpoint::put_adam(const std::string& prefix, const AdamState& adam) {
  set_attribute(prefix + "/step", std::to_string(adam.step));
  set_attribute(prefix + "/n", std::to_string(adam.first_moment.size()));
  set_double(prefix + "/lr", adam.config.learning_rate);
  set_double(prefix + "/beta1", adam.config.beta1);
  set_double(prefix + "/beta2", adam.config.beta2);
  set_double(prefix + "/eps", adam.config.epsilon);
  for (std::size_t i = 0; i < adam.first_moment.size(); ++i) {
    put(prefix + "/m" + std::to_string(i), adam.first_moment[i]);
    put(prefix + "/v" + std::to_string(i), adam.second_moment[i]);
  }
}

AdamState Checkpoint::get_adam(const std::string& prefix) const {
  AdamState adam;
  adam.step = int_attribute(prefix + "/step");
  adam.config.learning_rate = double_attribute(prefix + "/lr");
  adam.config.beta1 = double_attribute(prefix + "/beta1");
  adam.config.beta2 = double_attribute(prefix + "/beta2");
  adam.config.epsilon = double_attribute(prefix + "/eps");
  const auto n = int_attribute(prefix + "/n");
  for (std::int64_t i = 0; i < n; ++i) {
    adam.first_moment.push_back(get(prefix + "/m" + std::to_string(i)));
    adam.second_moment.push_back(get(prefix + "/v" + std::to_string(i)));
  }
  return adam;
}

std::string to_json(const Checkpoint& ckpt) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["attributes"] = ckpt.attributes;
  json arrays = json::array();
  for (const auto& [name, m] : ckpt.arrays) {
    arrays.push_back({{"name", name},
                      {"shape", {m.rows(), m.cols()}},
                      {"values", std::vector<double>(m.data(), m.data() + m.size())}});
  }
  doc["arrays"] = std::move(arrays);
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (doc.value("format_version", 0) != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version");
  }
  Checkpoint ckpt;
  ckpt.attributes =
      doc.at("attributes").get<std::map<std::string, std::string>>();
  for (const auto& a : doc.at("arrays")) {
    const auto shape = a.at("shape").get<std::vector<Eigen::Index>>();
    const auto values = a.at("values").get<std::vector<double>>();
    if (shape.size() != 2 ||
        static_cast<Eigen::Index>(values.size()) != shape[0] * shape[1]) {
      throw std::runtime_error("checkpoint array has inconsistent shape");
    }
    ckpt.arrays[a.at("name").get<std::string>()] =
        Eigen::Map<const Matrix>(values.data(), shape[0], shape[1]);
  }
  return ckpt;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file(path, to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_file(path));
}

}  // namespace rgail
