#include "ndram/data/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "volume file IO assumes a little-endian host");

namespace ndram::data {

namespace {

constexpr char kMagic[4] = {'N', 'D', 'V', '1'};
constexpr uint32_t kMaxDim = 4096;

}  // namespace

void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_volume(const Volume3D& vol, const std::filesystem::path& path) {
    if (vol.voxel_count() != static_cast<int64_t>(vol.voxels.size()))
        throw std::invalid_argument("write_volume: voxel buffer does not match dims");
    std::string bytes;
    bytes.reserve(16 + vol.voxels.size() * 4);
    bytes.append(kMagic, 4);
    for (int k = 0; k < 3; ++k) {
        uint32_t d = static_cast<uint32_t>(vol.dims[k]);
        bytes.append(reinterpret_cast<const char*>(&d), 4);
    }
    bytes.append(reinterpret_cast<const char*>(vol.voxels.data()), vol.voxels.size() * 4);
    atomic_write_bytes(path, bytes);
}

Volume3D read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open volume file: " + path.string());

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a volume file (bad magic): " + path.string());

    uint32_t dims[3];
    if (!in.read(reinterpret_cast<char*>(dims), 12))
        throw std::runtime_error("truncated volume header: " + path.string());
    uint64_t count = 1;
    for (uint32_t d : dims) {
        if (d == 0 || d > kMaxDim)
            throw std::runtime_error("volume dimension out of range (" + std::to_string(d) + "): " +
                                     path.string());
        count *= d;
    }
    if (count > (1ull << 31))
        throw std::runtime_error("volume voxel count overflows supported size: " + path.string());

    Volume3D vol;
    vol.dims = {static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
    vol.voxels.resize(count);
    if (!in.read(reinterpret_cast<char*>(vol.voxels.data()), static_cast<std::streamsize>(count * 4)))
        throw std::runtime_error("truncated volume payload: " + path.string());
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("trailing bytes after volume payload: " + path.string());

    for (float v : vol.voxels)
        if (!std::isfinite(v))
            throw std::runtime_error("volume contains non-finite voxels: " + path.string());
    return vol;
}

}  // namespace ndram::data
