#pragma once

// Checkpoint container: little-endian binary with layout
//   "UVEW" | u32 version=1 | u32 meta_len | meta (UTF-8, usually JSON) |
//   u32 tensor_count | per tensor: u16 name_len | name | u8 rank |
//   u32 dims[rank] | f32 payload (row-major).
// Round-trips are bit-exact.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uve {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;
};

struct Checkpoint {
  std::string meta;
  std::vector<CheckpointTensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Size in bytes the serialized checkpoint will occupy.
uint64_t checkpoint_byte_size(const Checkpoint& ckpt);

}  // namespace uve
