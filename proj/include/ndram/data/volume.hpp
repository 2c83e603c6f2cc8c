#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ndram::data {

// Dense scalar field over a voxel grid, row-major with the last index fastest.
// Voxels are stored as f32 to match the on-disk format; intensities are kept
// in [0,1] once a volume has entered a dataset.
struct Volume3D {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<float> voxels;
    std::string subject_id;
    std::string scan_id;

    int64_t voxel_count() const {
        return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
    }
    float at(int i0, int i1, int i2) const {
        return voxels[(static_cast<size_t>(i0) * dims[1] + i1) * dims[2] + i2];
    }
    float& at(int i0, int i1, int i2) {
        return voxels[(static_cast<size_t>(i0) * dims[1] + i1) * dims[2] + i2];
    }
};

Volume3D make_volume(std::array<int, 3> dims, float fill = 0.0f);

// Normalized agent coordinates: each component of l lives in [-1,1], with -1
// at index 0 and +1 at index dims_k - 1. Out-of-range components clamp.
std::array<int, 3> loc_to_voxel(const std::array<double, 3>& loc, const std::array<int, 3>& dims);

struct GlimpseRecord {
    std::vector<float> cube;          // side^3 voxels, row-major
    int side = 0;
    std::array<double, 3> loc{};      // location used for extraction, in [-1,1]
    std::array<int, 3> start{};       // inclusive voxel corner of the cube
    int step_index = 0;
};

// Fixed-size cube centered at loc_to_voxel(loc); the start corner clamps so
// the full cube stays inside the volume (no padding, no truncation).
GlimpseRecord extract_glimpse(const Volume3D& vol, const std::array<double, 3>& loc, int side,
                              int step_index = 0);

// Min-max rescale to [0,1]; volumes already inside [0,1] are left untouched,
// constant volumes map to all zeros.
void normalize_intensities(Volume3D& vol);

}  // namespace ndram::data
