#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "ndram/data/synthetic.hpp"
#include "ndram/rng.hpp"

using namespace ndram;
using namespace ndram::data;

namespace {

SyntheticConfig small_cfg() {
    SyntheticConfig cfg;
    cfg.volume_side = 24;
    cfg.glimpse_side = 8;
    cfg.signal_radius_class0 = 3.5;
    cfg.signal_radius_class1 = 2.2;
    cfg.distractor_radius_lo = 1.5;
    cfg.distractor_radius_hi = 2.5;
    cfg.distractor_count = 2;
    cfg.seed = 99;
    return cfg;
}

int octant_of(const std::array<int, 3>& v, int side) {
    int o = 0;
    for (int k = 0; k < 3; ++k)
        if (v[k] >= side / 2) o |= 1 << k;
    return o;
}

}  // namespace

TEST_CASE("generate_case: identical (cfg, class, seed) is bit-identical") {
    auto cfg = small_cfg();
    LabeledCase a = generate_case(cfg, 1, 1234);
    LabeledCase b = generate_case(cfg, 1, 1234);
    CHECK(a.volume.voxels == b.volume.voxels);
    CHECK(a.signal_center == b.signal_center);
    for (int f = 0; f < kNumContextFields; ++f) CHECK(a.context.values[f] == b.context.values[f]);

    LabeledCase c = generate_case(cfg, 1, 1235);
    CHECK(a.volume.voxels != c.volume.voxels);
}

TEST_CASE("generate_case: voxels clamped to [0,1] and signal fits inside") {
    auto cfg = small_cfg();
    for (uint64_t s = 0; s < 10; ++s) {
        LabeledCase c = generate_case(cfg, static_cast<int>(s % 2), s);
        for (float v : c.volume.voxels) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        REQUIRE(c.signal_center.has_value());
        int margin = static_cast<int>(std::ceil(cfg.signal_radius_class0 + cfg.edge_width));
        for (int k = 0; k < 3; ++k) {
            CHECK((*c.signal_center)[k] >= margin);
            CHECK((*c.signal_center)[k] <= cfg.volume_side - 1 - margin);
        }
    }
}

TEST_CASE("generate_case: planted sphere is brighter at its center for both classes") {
    auto cfg = small_cfg();
    for (int label = 0; label < 2; ++label) {
        LabeledCase c = generate_case(cfg, label, 7 + label);
        auto ctr = *c.signal_center;
        float at_center = c.volume.at(ctr[0], ctr[1], ctr[2]);
        CHECK(at_center > cfg.noise_base + cfg.signal_intensity * 0.5);
    }
}

TEST_CASE("hint field encodes the signal octant when strength is 1") {
    auto cfg = small_cfg();
    cfg.context_hint_strength = 1.0;
    for (uint64_t s = 0; s < 50; ++s) {
        LabeledCase c = generate_case(cfg, static_cast<int>(s % 2), 1000 + s);
        int oct = octant_of(*c.signal_center, cfg.volume_side);
        CHECK(static_cast<int>(*c.context.values[kHintField]) == oct);
    }
}

TEST_CASE("hint strength 0: chi-square independence of hint field vs octant") {
    auto cfg = small_cfg();
    cfg.context_hint_strength = 0.0;
    cfg.seed = 314;

    // 8x8 contingency table over 1000 cases
    int table[8][8] = {};
    int row_sum[8] = {}, col_sum[8] = {};
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        LabeledCase c = generate_case(cfg, i % 2, derive_seed(cfg.seed, {static_cast<uint64_t>(i)}));
        int oct = octant_of(*c.signal_center, cfg.volume_side);
        int hint = static_cast<int>(*c.context.values[kHintField]);
        table[oct][hint]++;
        row_sum[oct]++;
        col_sum[hint]++;
    }
    double chi2 = 0.0;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            double expected = static_cast<double>(row_sum[r]) * col_sum[c] / n;
            if (expected > 0) {
                double d = table[r][c] - expected;
                chi2 += d * d / expected;
            }
        }
    // dof = 49; critical value at p = 0.01 is 74.919 (chi2.ppf(0.99, 49)),
    // so failing to reject independence means chi2 below the critical value
    CHECK(chi2 < 74.919);
}

TEST_CASE("no context field is marginally predictive of the class label") {
    auto cfg = small_cfg();
    cfg.seed = 17;
    const int n = 1000;
    std::vector<int> labels;
    std::vector<ContextRecord> recs;
    recs.reserve(n);
    for (int i = 0; i < n; ++i) {
        int label = i % 2;
        // context comes from the subject profile; skip volume rendering
        SubjectProfile prof =
            make_subject_profile(cfg, label, derive_seed(cfg.seed, {static_cast<uint64_t>(i), 3u}));
        recs.push_back(prof.context);
        labels.push_back(label);
    }

    // per-field Pearson correlation with the label; categorical fields enter
    // through their integer codes
    for (int f = 0; f < kNumContextFields; ++f) {
        double mx = 0, my = 0;
        for (int i = 0; i < n; ++i) {
            mx += *recs[i].values[f];
            my += labels[i];
        }
        mx /= n;
        my /= n;
        double sxy = 0, sxx = 0, syy = 0;
        for (int i = 0; i < n; ++i) {
            double dx = *recs[i].values[f] - mx;
            double dy = labels[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        double r = sxy / std::sqrt(sxx * syy);
        INFO("field ", context_schema()[f].name, " corr ", r);
        CHECK(std::abs(r) < 0.05);
    }
}

TEST_CASE("generate_dataset: exact class balance and split structure") {
    auto cfg = small_cfg();
    GeneratePlan plan;
    plan.train_cases = 20;
    plan.val_cases = 4;
    plan.test_cases = 4;
    auto cases = generate_dataset(cfg, plan);
    CHECK(cases.size() == 28u);

    std::map<std::string, std::array<int, 2>> by_split;
    for (const auto& c : cases) by_split[c.split][c.label]++;
    CHECK(by_split["train"][0] == 10);
    CHECK(by_split["train"][1] == 10);
    CHECK(by_split["val"][0] == 2);
    CHECK(by_split["val"][1] == 2);
    CHECK(by_split["test"][0] == 2);
    CHECK(by_split["test"][1] == 2);

    // subject ids unique per case at one scan per subject
    std::set<std::string> subjects;
    for (const auto& c : cases) subjects.insert(c.subject_id);
    CHECK(subjects.size() == cases.size());

    // same plan and seed reproduce bit-identical volumes
    auto again = generate_dataset(cfg, plan);
    for (size_t i = 0; i < cases.size(); ++i) {
        CHECK(cases[i].case_id == again[i].case_id);
        CHECK(cases[i].volume.voxels == again[i].volume.voxels);
    }
}

TEST_CASE("generate_dataset: multiple scans share subject profile, differ in noise") {
    auto cfg = small_cfg();
    GeneratePlan plan;
    plan.train_cases = 8;
    plan.val_cases = 4;
    plan.test_cases = 4;
    plan.scans_per_subject = 2;
    auto cases = generate_dataset(cfg, plan);
    CHECK(cases.size() == 16u);

    std::map<std::string, std::vector<const LabeledCase*>> by_subject;
    for (const auto& c : cases) by_subject[c.subject_id].push_back(&c);
    CHECK(by_subject.size() == 8u);
    for (auto& [subj, scans] : by_subject) {
        REQUIRE(scans.size() == 2u);
        CHECK(scans[0]->signal_center == scans[1]->signal_center);
        CHECK(scans[0]->label == scans[1]->label);
        CHECK(scans[0]->split == scans[1]->split);
        CHECK(scans[0]->volume.voxels != scans[1]->volume.voxels);
    }
}
