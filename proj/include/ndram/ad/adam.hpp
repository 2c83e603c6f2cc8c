#pragma once

#include <map>
#include <string>
#include <vector>

#include "ndram/ad/param_store.hpp"

namespace ndram::ad {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // per-epoch exponential schedule: lr = learning_rate * decay^epoch
    double lr_decay = 0.96;
    // classic L2 coupling: g += weight_decay * w before the moment update
    double weight_decay = 0.0;
};

// Moment accumulators for one parameter group, keyed by parameter name.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    int64_t step_count() const { return step_; }

    void set_epoch(int epoch);
    double effective_lr() const;

    friend void adam_step(ParamStore& params,
                          const std::map<std::string, std::vector<double>>& grads, AdamState& state,
                          ParamGroup group);

private:
    AdamConfig cfg_;
    int64_t step_ = 0;
    int epoch_ = 0;
    std::map<std::string, std::vector<double>> m_;
    std::map<std::string, std::vector<double>> v_;
};

// One bias-corrected update over every parameter in `group`, reading gradients
// from `grads` (missing entries are an error). Other groups are untouched.
void adam_step(ParamStore& params, const std::map<std::string, std::vector<double>>& grads,
               AdamState& state, ParamGroup group);

}  // namespace ndram::ad
