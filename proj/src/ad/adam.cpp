#include "ndram/ad/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ndram::ad {

void AdamState::set_epoch(int epoch) {
    if (epoch < 0) throw std::invalid_argument("AdamState: epoch must be non-negative");
    epoch_ = epoch;
}

double AdamState::effective_lr() const {
    return cfg_.learning_rate * std::pow(cfg_.lr_decay, static_cast<double>(epoch_));
}

void adam_step(ParamStore& params, const std::map<std::string, std::vector<double>>& grads,
               AdamState& state, ParamGroup group) {
    state.step_ += 1;
    const double t = static_cast<double>(state.step_);
    const AdamConfig& cfg = state.cfg_;
    const double lr = state.effective_lr();
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    for (const std::string& name : params.names(group)) {
        auto git = grads.find(name);
        if (git == grads.end())
            throw std::runtime_error("adam_step: missing gradient for parameter '" + name + "'");
        Tensor& p = params.get(name);
        auto w = p.values_mut();
        const std::vector<double>& g = git->second;
        if (g.size() != w.size())
            throw std::runtime_error("adam_step: gradient size mismatch for '" + name + "'");

        auto& m = state.m_[name];
        auto& v = state.v_[name];
        if (m.empty()) m.assign(w.size(), 0.0);
        if (v.empty()) v.assign(w.size(), 0.0);

        for (size_t i = 0; i < w.size(); ++i) {
            double gi = g[i] + cfg.weight_decay * w[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace ndram::ad
