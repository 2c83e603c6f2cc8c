#include "ndram/data/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ndram::data {

Volume3D make_volume(std::array<int, 3> dims, float fill) {
    for (int d : dims)
        if (d <= 0) throw std::invalid_argument("make_volume: dims must be positive");
    Volume3D v;
    v.dims = dims;
    v.voxels.assign(static_cast<size_t>(v.voxel_count()), fill);
    return v;
}

std::array<int, 3> loc_to_voxel(const std::array<double, 3>& loc, const std::array<int, 3>& dims) {
    std::array<int, 3> out{};
    for (int k = 0; k < 3; ++k) {
        double l = std::clamp(loc[k], -1.0, 1.0);
        out[k] = static_cast<int>(std::llround((l + 1.0) * 0.5 * (dims[k] - 1)));
    }
    return out;
}

GlimpseRecord extract_glimpse(const Volume3D& vol, const std::array<double, 3>& loc, int side,
                              int step_index) {
    if (side <= 0) throw std::invalid_argument("extract_glimpse: side must be positive");
    for (int k = 0; k < 3; ++k)
        if (side > vol.dims[k])
            throw std::invalid_argument("extract_glimpse: glimpse side " + std::to_string(side) +
                                        " exceeds volume dim " + std::to_string(vol.dims[k]));

    std::array<int, 3> center = loc_to_voxel(loc, vol.dims);
    GlimpseRecord rec;
    rec.side = side;
    rec.step_index = step_index;
    for (int k = 0; k < 3; ++k) {
        rec.loc[k] = std::clamp(loc[k], -1.0, 1.0);
        rec.start[k] = std::clamp(center[k] - side / 2, 0, vol.dims[k] - side);
    }

    rec.cube.resize(static_cast<size_t>(side) * side * side);
    size_t w = 0;
    for (int i0 = rec.start[0]; i0 < rec.start[0] + side; ++i0)
        for (int i1 = rec.start[1]; i1 < rec.start[1] + side; ++i1) {
            const float* row = &vol.voxels[(static_cast<size_t>(i0) * vol.dims[1] + i1) * vol.dims[2] +
                                           rec.start[2]];
            for (int i2 = 0; i2 < side; ++i2) rec.cube[w++] = row[i2];
        }
    return rec;
}

void normalize_intensities(Volume3D& vol) {
    if (vol.voxels.empty()) return;
    float lo = vol.voxels[0], hi = vol.voxels[0];
    for (float v : vol.voxels) {
        if (!std::isfinite(v)) throw std::invalid_argument("normalize_intensities: non-finite voxel");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo >= 0.0f && hi <= 1.0f) return;
    float range = hi - lo;
    if (range <= 0.0f) {
        std::fill(vol.voxels.begin(), vol.voxels.end(), 0.0f);
        return;
    }
    for (float& v : vol.voxels) v = (v - lo) / range;
}

}  // namespace ndram::data
