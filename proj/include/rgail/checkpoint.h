#ifndef RGAIL_CHECKPOINT_H_
#define RGAIL_CHECKPOINT_H_

// Named-array checkpoint file. Stored as JSON:
//   {"format_version": 1,
//    "attributes": {"key": "value", ...},
//    "arrays": [{"name": ..., "shape": [rows, cols], "values": [...]}, ...]}
// Values are row-major and written with round-trip precision, so a
// save/load cycle reproduces every double bit for bit.

#include <cstdint>
#include <map>
#include <string>

#include "rgail/adam.h"
#include "rgail/mlp.h"
#include "rgail/tensor.h"

namespace rgail {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  std::map<std::string, Matrix> arrays;
  std::map<std::string, std::string> attributes;

  void put(const std::string& name, const Matrix& m) { arrays[name] = m; }
  // Throws std::out_of_range when missing.
  const Matrix& get(const std::string& name) const;
  bool contains(const std::string& name) const { return arrays.count(name) > 0; }

  void set_attribute(const std::string& key, const std::string& value) {
    attributes[key] = value;
  }
  const std::string& attribute(const std::string& key) const;
  std::int64_t int_attribute(const std::string& key) const;
  // Doubles are stored as hex-float text to keep every bit.
  void set_double(const std::string& key, double v);
  double double_attribute(const std::string& key) const;

  void put_mlp(const std::string& prefix, const MlpParams& mlp);
  MlpParams get_mlp(const std::string& prefix) const;

  void put_adam(const std::string& prefix, const AdamState& adam);
  AdamState get_adam(const std::string& prefix) const;
};

std::string to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace rgail

#endif  // RGAIL_CHECKPOINT_H_
