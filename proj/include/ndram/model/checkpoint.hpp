#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "ndram/ad/ops.hpp"
#include "ndram/ad/param_store.hpp"
#include "ndram/model/baseline.hpp"
#include "ndram/model/model.hpp"

namespace ndram::model {

// Versioned binary container: a JSON metadata blob plus named f64 tensors and
// batch-norm running stats. Round trips are bit-exact.
struct Checkpoint {
    nlohmann::json meta;  // model_kind, config, encoder stats, context bank, ...

    struct NamedTensor {
        std::string name;
        ad::ParamGroup group;
        ad::Shape shape;
        std::vector<double> data;
    };
    std::vector<NamedTensor> tensors;

    struct NamedBnState {
        std::string name;
        ad::BatchNormState state;
    };
    std::vector<NamedBnState> bn_states;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// ---- model <-> checkpoint ----

Checkpoint snapshot_model(const NeuroDram& m, const std::vector<data::ContextRecord>& bank);
std::unique_ptr<NeuroDram> restore_model(const Checkpoint& ckpt);

Checkpoint snapshot_baseline(const BaselineCnn& m, const std::vector<data::ContextRecord>& bank);
std::unique_ptr<BaselineCnn> restore_baseline(const Checkpoint& ckpt);

std::string checkpoint_kind(const Checkpoint& ckpt);  // "neurodram" | "baseline-cnn"
std::vector<data::ContextRecord> checkpoint_bank(const Checkpoint& ckpt);

}  // namespace ndram::model
