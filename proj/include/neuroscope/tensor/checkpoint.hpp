#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/tensor/tensor.hpp"

namespace neuroscope {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Writes `<stem>.json` (manifest: names, shapes, byte offsets) and `<stem>.bin`
// (little-endian float64 values in manifest order). `manifest_path` must end
// in ".json".
void save_checkpoint(const std::filesystem::path& manifest_path,
                     std::span<const NamedTensor> params);

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& manifest_path);

// Copies values from `loaded` into `targets` matching by name and shape.
void assign_checkpoint(std::span<const NamedTensor> loaded, std::span<NamedTensor> targets);

}  // namespace neuroscope
