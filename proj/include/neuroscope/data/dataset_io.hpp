#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "neuroscope/data/image.hpp"
#include "neuroscope/data/phantom.hpp"

namespace neuroscope {

// Validation failure while reading a dataset; the message names the file.
class DatasetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Binary P5; values in [0,1] are stored as round(v * maxval), maxval 65535
// (16-bit, big-endian) or 255.
void write_pgm(const std::filesystem::path& path, const ImageGray& img, int maxval = 65535);
void write_pgm8(const std::filesystem::path& path, int width, int height,
                const std::vector<std::uint8_t>& values);
// Pixels come back as k / maxval; spacing is left at 1.
ImageGray read_pgm(const std::filesystem::path& path);

// Binary P4, rows padded to whole bytes, 1 = set.
void write_pbm(const std::filesystem::path& path, const RoiMask& m);
RoiMask read_pbm(const std::filesystem::path& path);

// <dir>/images/<id>.pgm, <dir>/masks/<id>.pbm (optional),
// <dir>/meta/<id>.json, <dir>/manifest.json
void save_dataset(const PhantomDataset& ds, const std::filesystem::path& dir);
PhantomDataset load_dataset(const std::filesystem::path& dir);

}  // namespace neuroscope
