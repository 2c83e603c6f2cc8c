#include "ndram/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ndram/rng.hpp"

namespace ndram::data {

void SyntheticConfig::validate() const {
    if (volume_side < 8) throw std::invalid_argument("synthetic: volume_side must be >= 8");
    if (glimpse_side < 2 || glimpse_side > volume_side)
        throw std::invalid_argument("synthetic: glimpse_side must be in [2, volume_side]");
    if (context_hint_strength < 0.0 || context_hint_strength > 1.0)
        throw std::invalid_argument("synthetic: context_hint_strength must be in [0,1]");
    if (context_missing_rate < 0.0 || context_missing_rate >= 1.0)
        throw std::invalid_argument("synthetic: context_missing_rate must be in [0,1)");
    if (signal_radius_class1 >= signal_radius_class0)
        throw std::invalid_argument("synthetic: class-1 radius must be smaller than class-0");
    double max_r = std::max(signal_radius_class0, distractor_radius_hi) + edge_width + 1.0;
    if (2.0 * max_r >= volume_side)
        throw std::invalid_argument("synthetic: signal geometry does not fit inside the volume");
    if (center_jitter < 0.0 || center_jitter > 1.0)
        throw std::invalid_argument("synthetic: center_jitter must be in [0,1]");
}

namespace {

// additive soft sphere: full intensity inside, linear ramp of width edge
void render_sphere(Volume3D& vol, const std::array<double, 3>& center, double radius,
                   double intensity, double edge) {
    int s = vol.dims[0];
    double reach = radius + edge;
    int lo0 = std::max(0, static_cast<int>(std::floor(center[0] - reach)));
    int hi0 = std::min(s - 1, static_cast<int>(std::ceil(center[0] + reach)));
    int lo1 = std::max(0, static_cast<int>(std::floor(center[1] - reach)));
    int hi1 = std::min(s - 1, static_cast<int>(std::ceil(center[1] + reach)));
    int lo2 = std::max(0, static_cast<int>(std::floor(center[2] - reach)));
    int hi2 = std::min(s - 1, static_cast<int>(std::ceil(center[2] + reach)));
    for (int i0 = lo0; i0 <= hi0; ++i0)
        for (int i1 = lo1; i1 <= hi1; ++i1)
            for (int i2 = lo2; i2 <= hi2; ++i2) {
                double d0 = i0 - center[0], d1 = i1 - center[1], d2 = i2 - center[2];
                double dist = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
                double w = std::clamp((radius - dist) / edge + 0.5, 0.0, 1.0);
                if (w > 0.0) vol.at(i0, i1, i2) += static_cast<float>(intensity * w);
            }
}

}  // namespace

SubjectProfile make_subject_profile(const SyntheticConfig& cfg, int class_label,
                                    uint64_t subject_seed) {
    if (class_label != 0 && class_label != 1)
        throw std::invalid_argument("make_subject_profile: class label must be 0 or 1");
    cfg.validate();
    Rng rng(derive_seed(subject_seed, {0x5u}));

    SubjectProfile prof;
    prof.label = class_label;

    // signal center: latent center + per-subject jitter, clamped so the
    // largest sphere stays inside the volume
    int s = cfg.volume_side;
    double half = (s - 1) / 2.0;
    int margin = static_cast<int>(std::ceil(cfg.signal_radius_class0 + cfg.edge_width)) + 1;
    for (int k = 0; k < 3; ++k) {
        double norm = cfg.latent_center[k] + rng.uniform(-cfg.center_jitter, cfg.center_jitter);
        int vox = static_cast<int>(std::llround((std::clamp(norm, -1.0, 1.0) + 1.0) * half));
        prof.signal_center_voxel[k] = std::clamp(vox, margin, s - 1 - margin);
    }
    int mid = s / 2;
    prof.octant = 0;
    for (int k = 0; k < 3; ++k)
        if (prof.signal_center_voxel[k] >= mid) prof.octant |= 1 << k;

    // context fields: marginally independent of the class label by
    // construction (the label is never consulted here)
    ContextRecord& ctx = prof.context;
    ctx.values[kAge] = std::clamp(rng.normal(72.0, 8.0), 55.0, 92.0);
    ctx.values[kGender] = static_cast<double>(rng.uniform_int(0, 1));
    ctx.values[kEducation] = std::clamp(rng.normal(15.0, 3.0), 6.0, 22.0);
    ctx.values[kCdrsb] = std::clamp(rng.normal(2.5, 1.8), 0.0, 10.0);
    ctx.values[kAdas11] = std::clamp(rng.normal(12.0, 6.0), 0.0, 40.0);
    ctx.values[kAdas13] = std::clamp(rng.normal(18.0, 8.0), 0.0, 55.0);
    ctx.values[kRavlt] = std::clamp(rng.normal(35.0, 10.0), 0.0, 75.0);
    ctx.values[kApoe4] = static_cast<double>(rng.uniform_int(0, 2));
    ctx.values[kRace] = static_cast<double>(rng.uniform_int(0, 5));

    // the hint: octant code with probability hint_strength, noise otherwise
    if (rng.uniform() < cfg.context_hint_strength)
        ctx.values[kHintField] = static_cast<double>(prof.octant);
    else
        ctx.values[kHintField] = static_cast<double>(rng.uniform_int(0, 7));

    if (cfg.context_missing_rate > 0.0) {
        for (int f = 0; f < kNumContextFields; ++f)
            if (rng.uniform() < cfg.context_missing_rate) ctx.values[f].reset();
        if (ctx.present_count() == 0) ctx.values[kAge] = 72.0;
    }
    return prof;
}

LabeledCase render_scan(const SyntheticConfig& cfg, const SubjectProfile& profile,
                        uint64_t scan_seed, std::string subject_id, std::string scan_id) {
    Rng rng(derive_seed(scan_seed, {0x7u}));
    int s = cfg.volume_side;

    LabeledCase c;
    c.volume = make_volume({s, s, s});
    c.volume.subject_id = subject_id;
    c.volume.scan_id = scan_id;
    c.context = profile.context;
    c.label = profile.label;
    c.subject_id = std::move(subject_id);
    c.case_id = std::move(scan_id);
    c.signal_center = profile.signal_center_voxel;

    for (float& v : c.volume.voxels)
        v = static_cast<float>(cfg.noise_base + cfg.noise_sigma * rng.normal());

    // distractors: drawn the same way for both classes
    double dmargin = cfg.distractor_radius_hi + cfg.edge_width + 1.0;
    for (int i = 0; i < cfg.distractor_count; ++i) {
        std::array<double, 3> ctr;
        for (int k = 0; k < 3; ++k) ctr[k] = rng.uniform(dmargin, s - 1 - dmargin);
        double radius = rng.uniform(cfg.distractor_radius_lo, cfg.distractor_radius_hi);
        render_sphere(c.volume, ctr, radius, cfg.distractor_intensity, cfg.edge_width);
    }

    double radius = profile.label == 0 ? cfg.signal_radius_class0 : cfg.signal_radius_class1;
    std::array<double, 3> ctr{static_cast<double>(profile.signal_center_voxel[0]),
                              static_cast<double>(profile.signal_center_voxel[1]),
                              static_cast<double>(profile.signal_center_voxel[2])};
    render_sphere(c.volume, ctr, radius, cfg.signal_intensity, cfg.edge_width);

    for (float& v : c.volume.voxels) v = std::clamp(v, 0.0f, 1.0f);
    return c;
}

LabeledCase generate_case(const SyntheticConfig& cfg, int class_label, uint64_t case_seed) {
    SubjectProfile prof = make_subject_profile(cfg, class_label, case_seed);
    return render_scan(cfg, prof, derive_seed(case_seed, {0x11u}), "subject", "case");
}

std::vector<LabeledCase> generate_dataset(const SyntheticConfig& cfg, const GeneratePlan& plan) {
    cfg.validate();
    if (plan.scans_per_subject < 1)
        throw std::invalid_argument("generate_dataset: scans_per_subject must be >= 1");
    struct SplitPlan {
        const char* name;
        int cases;
    };
    const SplitPlan splits[3] = {{"train", plan.train_cases},
                                 {"val", plan.val_cases},
                                 {"test", plan.test_cases}};
    for (const auto& sp : splits) {
        if (sp.cases < 0) throw std::invalid_argument("generate_dataset: negative case count");
        if (sp.cases % (2 * plan.scans_per_subject) != 0)
            throw std::invalid_argument(std::string("generate_dataset: ") + sp.name +
                                        " case count must be divisible by 2*scans_per_subject");
    }

    std::vector<LabeledCase> cases;
    int subject_index = 0;
    char buf[64];
    for (const auto& sp : splits) {
        int subjects_per_class = sp.cases / (2 * plan.scans_per_subject);
        for (int label = 0; label < 2; ++label) {
            for (int i = 0; i < subjects_per_class; ++i, ++subject_index) {
                uint64_t subj_seed = derive_seed(cfg.seed, {0xe1e0ull, static_cast<uint64_t>(subject_index)});
                SubjectProfile prof = make_subject_profile(cfg, label, subj_seed);
                std::snprintf(buf, sizeof buf, "s%04d", subject_index);
                std::string subject_id(buf);
                for (int scan = 0; scan < plan.scans_per_subject; ++scan) {
                    uint64_t scan_seed = derive_seed(
                        cfg.seed, {0x5ca9ull, static_cast<uint64_t>(subject_index),
                                   static_cast<uint64_t>(scan)});
                    std::snprintf(buf, sizeof buf, "%s_r%02d", subject_id.c_str(), scan);
                    LabeledCase c = render_scan(cfg, prof, scan_seed, subject_id, buf);
                    c.split = sp.name;
                    cases.push_back(std::move(c));
                }
            }
        }
    }
    return cases;
}

}  // namespace ndram::data
