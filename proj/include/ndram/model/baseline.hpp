#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "ndram/ad/graph.hpp"
#include "ndram/ad/ops.hpp"
#include "ndram/ad/param_store.hpp"
#include "ndram/data/dataset.hpp"
#include "ndram/rng.hpp"

namespace ndram::model {

// Full-volume comparison model: four conv/batch-norm/max-pool blocks over the
// whole image, two fully connected layers with dropout, sigmoid output. All
// parameters sit in the supervised group; L2 decay is configured on its
// optimizer, not here.
struct BaselineSpec {
    std::vector<int> channels{8, 16, 32, 64};
    std::vector<int> pools{4, 2, 2, 2};
    int kernel = 3;
    int fc_hidden = 128;
    double dropout = 0.4;
    uint64_t init_seed = 1;

    nlohmann::json to_json() const;
    static BaselineSpec from_json(const nlohmann::json& j);
};

class BaselineCnn {
public:
    // volume_side fixes the flatten dimension; indivisible pooling is
    // rejected here, at construction
    BaselineCnn(const BaselineSpec& spec, int volume_side);

    const BaselineSpec& spec() const { return spec_; }
    int volume_side() const { return volume_side_; }
    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const { return params_; }
    std::vector<ad::BatchNormState>& bn_states() { return bn_states_; }

    // volumes [B,1,S,S,S] -> logits [B]; dropout_rng enables train-time
    // dropout (pass nullptr for evaluation)
    ad::Tensor logits(ad::Graph& g, const ad::Tensor& volumes, ad::BnMode bn, Rng* dropout_rng);

    // convenience: deterministic probability for one case
    double predict(const data::LabeledCase& c);

    static ad::Tensor volume_batch(std::span<const data::LabeledCase* const> cases);

private:
    BaselineSpec spec_;
    int volume_side_;
    int flat_dim_ = 0;
    ad::ParamStore params_;
    std::vector<ad::BatchNormState> bn_states_;
};

}  // namespace ndram::model
