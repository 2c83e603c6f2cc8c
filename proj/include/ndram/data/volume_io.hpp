#pragma once

#include <filesystem>

#include "ndram/data/volume.hpp"

namespace ndram::data {

// Volume file format "NDV1", little-endian:
//   magic   4 bytes  'N' 'D' 'V' '1'
//   dims    3 x u32
//   voxels  dims[0]*dims[1]*dims[2] x f32, row-major (last index fastest)
// Round-trips are bit-exact.

void write_volume(const Volume3D& vol, const std::filesystem::path& path);
Volume3D read_volume(const std::filesystem::path& path);

// Writes to a sibling temp file and renames into place, so failures never
// leave a partial artifact behind.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ndram::data
