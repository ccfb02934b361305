#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace neuroscope {

using Json = nlohmann::json;

Json read_json_file(const std::filesystem::path& path);

// Writes with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Fixed-point rendering, e.g. format_fixed(4.449, 1) == "4.4".
std::string format_fixed(double value, int decimals);

}  // namespace neuroscope
