#pragma once

#include <string>
#include <vector>

#include "model/config.hpp"
#include "model/params.hpp"

namespace tscnet::train {

// "TSCN0001", then per tensor: u32 name length, name bytes, u32 rank, u32 dims,
// float32 values; all little-endian; then the CRC32 of everything before it.
std::string serialize_checkpoint(const model::ParamStore<float>& params);
void save_checkpoint(const std::string& path, const model::ParamStore<float>& params);

struct CheckpointRecord {
  std::string name;
  core::Dims dims;
  std::vector<float> values;
};

// Throws DataError on bad magic, truncation or CRC mismatch.
std::vector<CheckpointRecord> parse_checkpoint(const std::string& bytes);

// Checks the records against the parameter specs of `cfg` and throws DataError
// listing every missing, unexpected and mis-shaped name.
template <typename T>
model::ParamStore<T> load_checkpoint(const std::string& path, const model::ModelConfig& cfg);
template <typename T>
model::ParamStore<T> params_from_bytes(const std::string& bytes, const model::ModelConfig& cfg);

}  // namespace tscnet::train
