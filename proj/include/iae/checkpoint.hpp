#pragma once

// Tensor checkpoint format (version 1), a single JSON document:
//
//   {
//     "format": "iae-tensors",
//     "version": 1,
//     "tensors": {
//       "<name>": { "shape": [rows, cols], "values": [row-major doubles] },
//       ...
//     }
//   }
//
// Doubles are written in shortest round-trip form, so save -> load is
// bit-exact. Non-finite values are rejected on save.

#include <filesystem>
#include <map>
#include <string>

#include "iae/tensor.hpp"
#include "json.hpp"

namespace iae {

inline constexpr int kCheckpointVersion = 1;

using TensorMap = std::map<std::string, Tensor>;

nlohmann::json tensors_to_json(const TensorMap& tensors);
TensorMap tensors_from_json(const nlohmann::json& doc);

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_tensors(const std::filesystem::path& path);

}  // namespace iae
