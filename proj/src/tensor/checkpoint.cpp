#include "neuroscope/tensor/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace neuroscope {
namespace {

constexpr const char* kFormat = "neuroscope-checkpoint";

void put_le64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& manifest_path,
                     std::span<const NamedTensor> params) {
  if (manifest_path.extension() != ".json") {
    throw std::invalid_argument("checkpoint manifest must end in .json: " + manifest_path.string());
  }
  auto blob_path = manifest_path;
  blob_path.replace_extension(".bin");

  std::string blob;
  Json entries = Json::array();
  std::size_t offset = 0;
  for (const auto& p : params) {
    entries.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"offset", offset},
                       {"count", p.tensor.numel()}});
    for (double v : p.tensor.data()) put_le64(blob, v);
    offset += 8 * p.tensor.numel();
  }
  Json manifest = {{"format", kFormat},
                   {"version", 1},
                   {"dtype", "float64-le"},
                   {"blob", blob_path.filename().string()},
                   {"total_bytes", offset},
                   {"params", entries}};
  write_text_file(blob_path, blob);
  write_json_file(manifest_path, manifest);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& manifest_path) {
  const Json manifest = read_json_file(manifest_path);
  if (manifest.value("format", "") != kFormat) {
    throw std::runtime_error("not a checkpoint manifest: " + manifest_path.string());
  }
  const auto blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  const std::string blob = read_text_file(blob_path);
  if (blob.size() != manifest.at("total_bytes").get<std::size_t>()) {
    throw std::runtime_error("checkpoint blob size mismatch in " + blob_path.string());
  }
  std::vector<NamedTensor> out;
  for (const auto& e : manifest.at("params")) {
    Shape shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = e.at("count").get<std::size_t>();
    if (shape_numel(shape) != count || offset + 8 * count > blob.size()) {
      throw std::runtime_error("corrupt checkpoint entry " + e.at("name").get<std::string>());
    }
    std::vector<double> values(count);
    const auto* base = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (std::size_t i = 0; i < count; ++i) values[i] = get_le64(base + 8 * i);
    out.push_back({e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

void assign_checkpoint(std::span<const NamedTensor> loaded, std::span<NamedTensor> targets) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& p : loaded) by_name[p.name] = &p.tensor;
  for (auto& t : targets) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint lacks parameter " + t.name);
    if (it->second->shape() != t.tensor.shape()) {
      throw ShapeError("checkpoint parameter " + t.name + " has shape " +
                       shape_str(it->second->shape()) + ", model expects " +
                       shape_str(t.tensor.shape()));
    }
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), t.tensor.data().begin());
  }
}

}  // namespace neuroscope
