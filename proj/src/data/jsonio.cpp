#include "ndram/jsonio.hpp"

#include <fstream>
#include <stdexcept>

#include "ndram/data/volume_io.hpp"

namespace ndram {

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open JSON file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries the byte position of the parse failure
        throw std::runtime_error("JSON parse error in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    data::atomic_write_bytes(path, j.dump(2) + "\n");
}

}  // namespace ndram
