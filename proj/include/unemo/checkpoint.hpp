#pragma once

#include <string>
#include <vector>

#include "unemo/model.hpp"
#include "unemo/param_store.hpp"

namespace unemo {

enum class Dtype : std::uint8_t { F64 = 0, F32 = 1 };

struct CheckpointTensor {
  std::string name;
  Dtype dtype = Dtype::F64;
  Matrix f64;             // used when dtype == F64
  Eigen::MatrixXf f32;    // used when dtype == F32
};

struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t config_digest = 0;
  std::int32_t d_model = 0, z_dim = 0, s_dim = 0, feature_dim = 0,
               vocab_size = 0;
  std::vector<CheckpointTensor> tensors;
};

// FNV-1a over the serialized configuration, stored in the header so a
// checkpoint can be matched against the config that produced it.
std::uint64_t config_digest(const std::string& serialized);

Checkpoint make_checkpoint(const ParamStore& params, const ModelDims& dims,
                           std::uint64_t digest);

// Copies tensor values into an already-registered store; dimension or name
// mismatches throw.
void restore_params(const Checkpoint& ckpt, ParamStore& params);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace unemo
