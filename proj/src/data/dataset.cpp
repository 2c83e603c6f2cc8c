#include "ndram/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ndram/data/volume_io.hpp"
#include "ndram/jsonio.hpp"
#include "ndram/rng.hpp"

namespace ndram::data {

namespace {

// subjects in order of first appearance, to keep shuffles seed-deterministic
std::vector<std::string> subject_order(const std::vector<LabeledCase>& cases) {
    std::vector<std::string> order;
    std::unordered_map<std::string, bool> seen;
    for (const auto& c : cases)
        if (!seen.count(c.subject_id)) {
            seen[c.subject_id] = true;
            order.push_back(c.subject_id);
        }
    return order;
}

void assign_splits(std::vector<std::string>& subjects, const SplitRatios& ratios, Rng& rng,
                   std::unordered_map<std::string, std::string>& out) {
    // Fisher-Yates with the shared stream
    for (size_t i = subjects.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(subjects[i - 1], subjects[j]);
    }
    auto n = static_cast<double>(subjects.size());
    int n_train = static_cast<int>(std::llround(ratios.train * n));
    int n_val = static_cast<int>(std::llround((ratios.train + ratios.val) * n)) - n_train;
    int n_test = static_cast<int>(subjects.size()) - n_train - n_val;

    if ((ratios.train > 0 && n_train == 0) || (ratios.val > 0 && n_val == 0) ||
        (ratios.test > 0 && n_test <= 0))
        throw std::invalid_argument("split_dataset: a nonzero ratio received no subjects");

    for (size_t i = 0; i < subjects.size(); ++i) {
        const char* split = i < static_cast<size_t>(n_train)            ? "train"
                            : i < static_cast<size_t>(n_train + n_val) ? "val"
                                                                        : "test";
        out[subjects[i]] = split;
    }
}

}  // namespace

void split_dataset(std::vector<LabeledCase>& cases, const SplitRatios& ratios, uint64_t seed,
                   bool stratify_by_label) {
    double total = ratios.train + ratios.val + ratios.test;
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must sum to 1, got " + std::to_string(total));

    int nonzero = (ratios.train > 0) + (ratios.val > 0) + (ratios.test > 0);
    auto subjects = subject_order(cases);
    if (static_cast<int>(subjects.size()) < nonzero)
        throw std::invalid_argument("split_dataset: fewer subjects (" +
                                    std::to_string(subjects.size()) + ") than splits (" +
                                    std::to_string(nonzero) + ")");

    std::unordered_map<std::string, std::string> assignment;
    Rng rng(derive_seed(seed, {0x59171ull}));
    if (stratify_by_label) {
        std::unordered_map<std::string, int> subject_label;
        for (const auto& c : cases) subject_label[c.subject_id] = c.label;
        for (int label = 0; label < 2; ++label) {
            std::vector<std::string> group;
            for (const auto& s : subjects)
                if (subject_label[s] == label) group.push_back(s);
            if (!group.empty()) assign_splits(group, ratios, rng, assignment);
        }
    } else {
        assign_splits(subjects, ratios, rng, assignment);
    }

    for (auto& c : cases) c.split = assignment.at(c.subject_id);
}

std::vector<const LabeledCase*> cases_in_split(const std::vector<LabeledCase>& cases,
                                               const std::string& split) {
    std::vector<const LabeledCase*> out;
    for (const auto& c : cases)
        if (split.empty() || c.split == split) out.push_back(&c);
    return out;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<LabeledCase>& cases,
                  const nlohmann::json& meta) {
    std::filesystem::create_directories(dir / "volumes");

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["meta"] = meta;
    nlohmann::json case_list = nlohmann::json::array();
    nlohmann::json bank = nlohmann::json::array();

    for (const auto& c : cases) {
        std::string rel = "volumes/" + c.case_id + ".ndv";
        write_volume(c.volume, dir / rel);
        nlohmann::json jc;
        jc["case_id"] = c.case_id;
        jc["subject_id"] = c.subject_id;
        jc["label"] = c.label;
        jc["split"] = c.split;
        jc["volume_path"] = rel;
        jc["context"] = c.context.to_json();
        if (c.signal_center)
            jc["signal_center"] = *c.signal_center;
        case_list.push_back(std::move(jc));
        if (c.split == "train") bank.push_back(c.context.to_json());
    }
    manifest["cases"] = std::move(case_list);
    write_json_file(dir / "manifest.json", manifest);
    write_json_file(dir / "context_bank.json", bank);
}

std::vector<LabeledCase> load_dataset(const std::filesystem::path& manifest_path,
                                      const LoadOptions& opts) {
    nlohmann::json manifest = read_json_file(manifest_path);
    if (!manifest.contains("cases") || !manifest["cases"].is_array())
        throw std::runtime_error("manifest has no case list: " + manifest_path.string());
    std::filesystem::path base_dir = manifest_path.parent_path();

    std::vector<LabeledCase> out;
    for (const auto& jc : manifest["cases"]) {
        std::string split = jc.value("split", "");
        if (!opts.split_filter.empty() && split != opts.split_filter) continue;
        LabeledCase c;
        c.case_id = jc.at("case_id").get<std::string>();
        c.subject_id = jc.at("subject_id").get<std::string>();
        c.label = jc.at("label").get<int>();
        if (c.label != 0 && c.label != 1)
            throw std::runtime_error("manifest label must be 0 or 1 for case " + c.case_id);
        c.split = split;
        c.context = ContextRecord::from_json(jc.at("context"));
        if (jc.contains("signal_center") && !jc["signal_center"].is_null()) {
            auto sc = jc["signal_center"].get<std::vector<int>>();
            if (sc.size() == 3) c.signal_center = std::array<int, 3>{sc[0], sc[1], sc[2]};
        }
        c.volume = read_volume(base_dir / jc.at("volume_path").get<std::string>());
        c.volume.subject_id = c.subject_id;
        c.volume.scan_id = c.case_id;
        normalize_intensities(c.volume);
        if (opts.blank_volumes)
            std::fill(c.volume.voxels.begin(), c.volume.voxels.end(), 0.0f);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ContextRecord> load_context_bank(const std::filesystem::path& path) {
    nlohmann::json j = read_json_file(path);
    if (!j.is_array()) throw std::runtime_error("context bank must be a JSON array: " + path.string());
    std::vector<ContextRecord> bank;
    for (const auto& rec : j) bank.push_back(ContextRecord::from_json(rec));
    return bank;
}

}  // namespace ndram::data
