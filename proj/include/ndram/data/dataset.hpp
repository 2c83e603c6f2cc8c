#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ndram/data/context.hpp"
#include "ndram/data/volume.hpp"

namespace ndram::data {

struct LabeledCase {
    Volume3D volume;
    ContextRecord context;
    int label = 0;  // binary
    std::string subject_id;
    std::string case_id;
    std::string split;  // "train" | "val" | "test" | ""
    // planted signal center, voxel coords; benchmark ground truth
    std::optional<std::array<int, 3>> signal_center;
};

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

// Subject-level split: every scan of a subject lands in the same partition,
// assignment is a seeded shuffle. With stratify_by_label, each class's
// subjects are partitioned separately so splits stay class-balanced.
void split_dataset(std::vector<LabeledCase>& cases, const SplitRatios& ratios, uint64_t seed,
                   bool stratify_by_label = false);

std::vector<const LabeledCase*> cases_in_split(const std::vector<LabeledCase>& cases,
                                               const std::string& split);

// On-disk dataset: volumes/<case_id>.ndv + manifest.json + context_bank.json
// (bank = training-split context records, the donor pool for imputation).
void save_dataset(const std::filesystem::path& dir, const std::vector<LabeledCase>& cases,
                  const nlohmann::json& meta);

struct LoadOptions {
    std::string split_filter;   // empty = all
    bool blank_volumes = false; // zero every voxel after load
};

std::vector<LabeledCase> load_dataset(const std::filesystem::path& manifest_path,
                                      const LoadOptions& opts = {});

std::vector<ContextRecord> load_context_bank(const std::filesystem::path& path);

}  // namespace ndram::data
