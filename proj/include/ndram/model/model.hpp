#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ndram/ad/graph.hpp"
#include "ndram/ad/ops.hpp"
#include "ndram/ad/param_store.hpp"
#include "ndram/data/context.hpp"
#include "ndram/data/dataset.hpp"
#include "ndram/rng.hpp"

namespace ndram::model {

struct TrunkSpec {
    std::vector<int> channels{8, 16, 32, 64};
    std::vector<int> pools{2, 2, 2, 2};
    int kernel = 3;
};

struct ModelConfig {
    int glimpse_side = 16;
    int num_steps = 6;
    int hidden_dim = 128;
    double policy_sigma = 0.15;
    TrunkSpec trunk;
    uint64_t init_seed = 1;
    // test hook: lets the isolation suite demonstrate that removing the
    // marker breaks pathway separation
    bool disable_gradient_stop = false;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// One per-step location choice. The raw sample keeps its log-density under
// N(mean, sigma^2 I); extraction uses the clamped location.
struct LocationDecision {
    std::array<double, 3> mean{};
    std::array<double, 3> sampled{};
    std::array<double, 3> executed{};
    double log_prob = 0.0;  // 0 by convention in deterministic mode
    double sigma = 0.0;
};

struct Episode {
    std::string case_id;
    int label = 0;
    std::vector<LocationDecision> decisions;
    std::vector<data::GlimpseRecord> glimpses;
    double prediction = 0.5;
    double reward = 0.0;  // filled in by training
};

// recurrent state: lower LSTM feeds classification, upper feeds location
struct AgentState {
    ad::Tensor h_class, c_class;
    ad::Tensor h_loc, c_loc;
    int step = 0;
};

enum class RolloutMode {
    Train,       // sampled locations, train-mode batch norm (needs batch >= 2)
    Eval,        // deterministic locations, inference batch norm
    SampledEval, // sampled locations, inference batch norm
};

struct BatchRollout {
    std::vector<Episode> episodes;
    ad::Tensor logits;  // [B]
    ad::Tensor probs;   // [B]
    // per step, [B] log-densities attached to the live graph (sampled modes)
    std::vector<ad::Tensor> step_log_probs;
};

// The recurrent attention agent: a glimpse network fusing what/where
// representations, two stacked LSTM cells, a location policy head, a
// context-driven initial state, and a sigmoid classifier. Classification and
// location pathways are kept structurally separate: the upper LSTM reads the
// lower one's state through a gradient-stop marker.
class NeuroDram {
public:
    NeuroDram(const ModelConfig& cfg, data::ContextEncoder encoder);

    const ModelConfig& config() const { return cfg_; }
    const data::ContextEncoder& encoder() const { return encoder_; }
    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const { return params_; }
    std::vector<ad::BatchNormState>& bn_states() { return bn_states_; }

    int trunk_feature_dim() const { return trunk_flat_dim_; }
    // parameters prefixed "glimpse." (conv trunk + what/where projections)
    int64_t glimpse_param_count() const;

    // ---- sub-networks (batched rank-2 tensors) ----
    ad::Tensor context_network(ad::Graph& g, const ad::Tensor& encoded_ctx);
    ad::Tensor glimpse_network(ad::Graph& g, const ad::Tensor& cubes, const ad::Tensor& locs,
                               ad::BnMode bn);
    AgentState initial_state(ad::Graph& g, const ad::Tensor& encoded_ctx);
    AgentState recurrent_step(ad::Graph& g, const ad::Tensor& fused, const AgentState& state);
    ad::Tensor location_mean(ad::Graph& g, const ad::Tensor& h_loc);
    // requires state.step == num_steps
    ad::Tensor classification_logit(ad::Graph& g, const AgentState& state);

    // ---- episodes ----
    BatchRollout rollout(ad::Graph& g, std::span<const data::LabeledCase* const> cases,
                         RolloutMode mode, std::span<const uint64_t> episode_seeds);
    Episode run_episode(const data::LabeledCase& c, RolloutMode mode, uint64_t seed = 0);

private:
    ModelConfig cfg_;
    data::ContextEncoder encoder_;
    ad::ParamStore params_;
    std::vector<ad::BatchNormState> bn_states_;
    int trunk_flat_dim_ = 0;

    void build_params();
};

}  // namespace ndram::model
