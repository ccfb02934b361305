#include "neuroscope/data/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "neuroscope/common/json_util.hpp"

namespace neuroscope {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const fs::path& path) {
  std::string tok;
  while (true) {
    int c = in.peek();
    if (c == EOF) throw DatasetError(path.string() + ": truncated header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
  }
  while (in.peek() != EOF && !std::isspace(in.peek())) tok.push_back(static_cast<char>(in.get()));
  return tok;
}

int header_int(std::istream& in, const fs::path& path) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DatasetError(path.string() + ": bad header value '" + tok + "'");
  }
}

}  // namespace

void write_pgm(const fs::path& path, const ImageGray& img, int maxval) {
  if (maxval != 65535 && maxval != 255) throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  std::ofstream out = open_out(path);
  out << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  std::string buf;
  buf.reserve(img.pixels.size() * 2);
  for (double v : img.pixels) {
    const long k = std::lround(std::clamp(v, 0.0, 1.0) * maxval);
    if (maxval > 255) buf.push_back(static_cast<char>((k >> 8) & 0xff));
    buf.push_back(static_cast<char>(k & 0xff));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_pgm8(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("write_pgm8: value count does not match dimensions");
  std::ofstream out = open_out(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
}

ImageGray read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  if (header_token(in, path) != "P5") throw DatasetError(path.string() + ": not a binary PGM (P5)");
  const int w = header_int(in, path), h = header_int(in, path), maxval = header_int(in, path);
  if (maxval > 65535) throw DatasetError(path.string() + ": maxval above 65535");
  in.get();  // single whitespace before the raster
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw DatasetError(path.string() + ": truncated raster");
  ImageGray img(w, h, 1.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned k = bytes_per == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    img.pixels[i] = static_cast<double>(k) / maxval;
  }
  return img;
}

void write_pbm(const fs::path& path, const RoiMask& m) {
  std::ofstream out = open_out(path);
  out << "P4\n" << m.width << ' ' << m.height << '\n';
  const int row_bytes = (m.width + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < m.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) row[x / 8] |= static_cast<unsigned char>(0x80 >> (x % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

RoiMask read_pbm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  if (header_token(in, path) != "P4") throw DatasetError(path.string() + ": not a binary PBM (P4)");
  const int w = header_int(in, path), h = header_int(in, path);
  in.get();
  const int row_bytes = (w + 7) / 8;
  std::vector<unsigned char> raw(static_cast<std::size_t>(row_bytes) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw DatasetError(path.string() + ": truncated raster");
  RoiMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.at(x, y) = (raw[static_cast<std::size_t>(y) * row_bytes + x / 8] >> (7 - x % 8)) & 1;
  return m;
}

void save_dataset(const PhantomDataset& ds, const fs::path& dir) {
  Json ids = Json::array();
  for (const auto& s : ds.samples) {
    s.image.validate();
    write_pgm(dir / "images" / (s.id + ".pgm"), s.image);
    if (s.mask) write_pbm(dir / "masks" / (s.id + ".pbm"), *s.mask);
    write_json_file(dir / "meta" / (s.id + ".json"),
                    Json{{"label", label_name(s.label)}, {"spacing_mm", s.image.spacing_mm}});
    ids.push_back(s.id);
  }
  Json manifest{{"format", "neuroscope-dataset"}, {"version", 1}, {"ids", ids}};
  manifest["generator"] = ds.params ? ds.params->to_json() : Json(nullptr);
  write_json_file(dir / "manifest.json", manifest);
}

PhantomDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DatasetError("missing " + manifest_path.string());
  Json manifest;
  try {
    manifest = read_json_file(manifest_path);
  } catch (const std::exception& e) {
    throw DatasetError(manifest_path.string() + ": " + e.what());
  }
  PhantomDataset ds;
  if (manifest.contains("generator") && !manifest["generator"].is_null())
    ds.params = PhantomParams::from_json(manifest["generator"]);
  for (const auto& idj : manifest.at("ids")) {
    Sample s;
    s.id = idj.get<std::string>();
    const fs::path meta_path = dir / "meta" / (s.id + ".json");
    if (!fs::exists(meta_path)) throw DatasetError("missing sidecar " + meta_path.string());
    Json meta;
    try {
      meta = read_json_file(meta_path);
      s.label = label_from_name(meta.at("label").get<std::string>());
    } catch (const std::exception& e) {
      throw DatasetError(meta_path.string() + ": " + e.what());
    }
    s.image = read_pgm(dir / "images" / (s.id + ".pgm"));
    s.image.spacing_mm = meta.value("spacing_mm", 1.0);
    try {
      s.image.validate();
    } catch (const std::exception& e) {
      throw DatasetError((dir / "images" / (s.id + ".pgm")).string() + ": " + e.what());
    }
    const fs::path mask_path = dir / "masks" / (s.id + ".pbm");
    if (fs::exists(mask_path)) {
      RoiMask m = read_pbm(mask_path);
      if (m.width != s.image.width || m.height != s.image.height) {
        throw DatasetError(mask_path.string() + ": mask is " + std::to_string(m.width) + "x" +
                           std::to_string(m.height) + " but image is " + std::to_string(s.image.width) +
                           "x" + std::to_string(s.image.height));
      }
      s.mask = std::move(m);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace neuroscope
