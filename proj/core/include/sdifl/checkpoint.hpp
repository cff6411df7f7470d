#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sdifl/nn/tensor.hpp"

namespace sdifl {

// Directory checkpoint:
//   manifest.json  {format, version, seed, config_hash, tensors: [{name,
//                   shape, dtype, offset, count}], meta: {...}}
//   weights.bin    raw little-endian float32, tensors in manifest order
struct StoredTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string meta_json = "{}";  // free-form metadata object, serialized
  std::vector<std::string> order;
  std::map<std::string, StoredTensor> tensors;
};

template <class T>
void add_tensors(Checkpoint& ckpt, const std::vector<const nn::Parameter<T>*>& params,
                 const std::string& prefix = "");

// Copies stored values into `params` (matched by prefix + name). Throws
// SchemaError on missing tensors or shape mismatches.
template <class T>
void restore_tensors(const Checkpoint& ckpt, const std::vector<nn::Parameter<T>*>& params,
                     const std::string& prefix = "");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace sdifl
