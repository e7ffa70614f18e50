#pragma once

#include <map>
#include <string>
#include <vector>

#include "stepsrl/model.hpp"

namespace stepsrl {

// Bit-exact checkpoint container:
//   magic "STEP", u32 version=1,
//   per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims,
//               little-endian f32 row-major data,
//   trailing u32 tensor count.
// The run config rides along as a tensor named "__config" whose values are
// the bytes of a UTF-8 JSON blob.
struct CheckpointTensor {
  std::vector<int> shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::map<std::string, CheckpointTensor> tensors;
  std::string config_json;
};

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const std::string& config_json);

Checkpoint load_checkpoint(const std::string& path);

// Restores tensors into params; a shape mismatch raises a ConfigError
// listing expected vs found shapes for every mismatched tensor.
void restore_params(ModelParams<float>& params, const Checkpoint& ckpt);

}  // namespace stepsrl
