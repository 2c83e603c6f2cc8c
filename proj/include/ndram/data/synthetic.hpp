#pragma once

#include <cstdint>

#include "ndram/data/dataset.hpp"

namespace ndram::data {

// Volumetric benchmark with a planted class signal. Both classes share the
// same background noise and distractor distribution; the only class evidence
// is the radius of one bright sphere at a per-subject jittered center. The
// context record can hint WHERE that sphere sits (its octant) but carries no
// information about the class itself.
struct SyntheticConfig {
    int volume_side = 64;
    int glimpse_side = 16;

    std::array<double, 3> latent_center{0.0, 0.0, 0.0};  // normalized coords
    double center_jitter = 0.5;                          // uniform per-subject, per axis

    double signal_radius_class0 = 6.0;  // voxels
    double signal_radius_class1 = 3.8;
    double signal_intensity = 0.5;
    double edge_width = 1.5;  // soft sphere boundary, voxels

    int distractor_count = 5;
    double distractor_radius_lo = 2.0;
    double distractor_radius_hi = 4.0;
    double distractor_intensity = 0.22;

    double noise_base = 0.12;
    double noise_sigma = 0.04;

    double context_hint_strength = 1.0;  // P(hint field encodes the octant)
    double context_missing_rate = 0.0;

    uint64_t seed = 1;

    void validate() const;
};

// the categorical field carrying the octant hint
inline constexpr int kHintField = kEthnicity;

struct SubjectProfile {
    std::array<int, 3> signal_center_voxel{};
    int octant = 0;  // bit k set when center >= volume midpoint along axis k
    ContextRecord context;
    int label = 0;
};

SubjectProfile make_subject_profile(const SyntheticConfig& cfg, int class_label,
                                    uint64_t subject_seed);

LabeledCase render_scan(const SyntheticConfig& cfg, const SubjectProfile& profile,
                        uint64_t scan_seed, std::string subject_id, std::string scan_id);

// One-scan subject; bit-deterministic in (cfg, class_label, case_seed).
LabeledCase generate_case(const SyntheticConfig& cfg, int class_label, uint64_t case_seed);

// n_subjects per class per split, scans_per_subject scans each; splits are
// exactly class-balanced. Subject ids are unique across the whole dataset.
struct GeneratePlan {
    int train_cases = 200;
    int val_cases = 40;
    int test_cases = 40;
    int scans_per_subject = 1;
};

std::vector<LabeledCase> generate_dataset(const SyntheticConfig& cfg, const GeneratePlan& plan);

}  // namespace ndram::data
