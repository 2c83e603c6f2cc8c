#pragma once

#include <filesystem>

#include "json.hpp"

namespace ndram {

nlohmann::json read_json_file(const std::filesystem::path& path);

// pretty-printed, atomic (temp file + rename)
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace ndram
