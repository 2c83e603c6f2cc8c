#include "ndram/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ndram::model {

using ad::BnMode;
using ad::Graph;
using ad::ParamGroup;
using ad::Tensor;

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["glimpse_side"] = glimpse_side;
    j["num_steps"] = num_steps;
    j["hidden_dim"] = hidden_dim;
    j["policy_sigma"] = policy_sigma;
    j["trunk_channels"] = trunk.channels;
    j["trunk_pools"] = trunk.pools;
    j["trunk_kernel"] = trunk.kernel;
    j["init_seed"] = init_seed;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.glimpse_side = j.at("glimpse_side").get<int>();
    cfg.num_steps = j.at("num_steps").get<int>();
    cfg.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.policy_sigma = j.at("policy_sigma").get<double>();
    cfg.trunk.channels = j.at("trunk_channels").get<std::vector<int>>();
    cfg.trunk.pools = j.at("trunk_pools").get<std::vector<int>>();
    cfg.trunk.kernel = j.at("trunk_kernel").get<int>();
    cfg.init_seed = j.at("init_seed").get<uint64_t>();
    return cfg;
}

namespace {

Tensor init_uniform(ad::Shape shape, int fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    auto n = ad::shape_numel(shape);
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(data), true);
}

}  // namespace

NeuroDram::NeuroDram(const ModelConfig& cfg, data::ContextEncoder encoder)
    : cfg_(cfg), encoder_(std::move(encoder)) {
    if (cfg_.num_steps < 1) throw std::invalid_argument("model: num_steps must be >= 1");
    if (cfg_.hidden_dim < 1) throw std::invalid_argument("model: hidden_dim must be >= 1");
    if (cfg_.policy_sigma <= 0.0) throw std::invalid_argument("model: policy_sigma must be > 0");
    if (cfg_.trunk.channels.empty() || cfg_.trunk.channels.size() != cfg_.trunk.pools.size())
        throw std::invalid_argument("model: trunk channels/pools must be non-empty and same length");

    int side = cfg_.glimpse_side;
    for (size_t i = 0; i < cfg_.trunk.pools.size(); ++i) {
        int p = cfg_.trunk.pools[i];
        if (p < 1 || side % p != 0 || side / p < 1)
            throw std::invalid_argument(
                "model: glimpse side " + std::to_string(cfg_.glimpse_side) +
                " is not compatible with trunk pooling (stage " + std::to_string(i) + ")");
        side /= p;
    }
    trunk_flat_dim_ = cfg_.trunk.channels.back() * side * side * side;
    build_params();
}

void NeuroDram::build_params() {
    Rng rng(derive_seed(cfg_.init_seed, {0x90de1ull}));
    const int h = cfg_.hidden_dim;
    const int k = cfg_.trunk.kernel;

    int cin = 1;
    for (size_t b = 0; b < cfg_.trunk.channels.size(); ++b) {
        int cout = cfg_.trunk.channels[b];
        std::string prefix = "glimpse.block" + std::to_string(b);
        int fan = cin * k * k * k;
        params_.add(prefix + ".conv.weight", init_uniform({cout, cin, k, k, k}, fan, rng),
                    ParamGroup::Supervised);
        params_.add(prefix + ".conv.bias", init_uniform({cout}, fan, rng), ParamGroup::Supervised);
        params_.add(prefix + ".bn.gamma", Tensor::full({cout}, 1.0, true), ParamGroup::Supervised);
        params_.add(prefix + ".bn.beta", Tensor::zeros({cout}, true), ParamGroup::Supervised);
        bn_states_.emplace_back(cout);
        cin = cout;
    }

    params_.add("glimpse.what.weight", init_uniform({h, trunk_flat_dim_}, trunk_flat_dim_, rng),
                ParamGroup::Supervised);
    params_.add("glimpse.what.bias", init_uniform({h}, trunk_flat_dim_, rng), ParamGroup::Supervised);
    params_.add("glimpse.where.weight", init_uniform({h, 3}, 3, rng), ParamGroup::Supervised);
    params_.add("glimpse.where.bias", init_uniform({h}, 3, rng), ParamGroup::Supervised);

    params_.add("rnn.class.w_ih", init_uniform({4 * h, h}, h, rng), ParamGroup::Supervised);
    params_.add("rnn.class.w_hh", init_uniform({4 * h, h}, h, rng), ParamGroup::Supervised);
    params_.add("rnn.class.bias", init_uniform({4 * h}, h, rng), ParamGroup::Supervised);

    params_.add("classifier.weight", init_uniform({1, h}, h, rng), ParamGroup::Supervised);
    params_.add("classifier.bias", init_uniform({1}, h, rng), ParamGroup::Supervised);

    const int ctx_dim = encoder_.dim();
    params_.add("context.weight", init_uniform({h, ctx_dim}, ctx_dim, rng),
                ParamGroup::Reinforcement);
    params_.add("context.bias", init_uniform({h}, ctx_dim, rng), ParamGroup::Reinforcement);

    params_.add("rnn.loc.w_ih", init_uniform({4 * h, h}, h, rng), ParamGroup::Reinforcement);
    params_.add("rnn.loc.w_hh", init_uniform({4 * h, h}, h, rng), ParamGroup::Reinforcement);
    params_.add("rnn.loc.bias", init_uniform({4 * h}, h, rng), ParamGroup::Reinforcement);

    params_.add("location.weight", init_uniform({3, h}, h, rng), ParamGroup::Reinforcement);
    params_.add("location.bias", init_uniform({3}, h, rng), ParamGroup::Reinforcement);
}

int64_t NeuroDram::glimpse_param_count() const {
    int64_t n = 0;
    for (const auto& name : params_.names())
        if (name.rfind("glimpse.", 0) == 0) n += params_.get(name).numel();
    return n;
}

ad::Tensor NeuroDram::context_network(Graph& g, const Tensor& encoded_ctx) {
    return ad::tanh(g, ad::linear(g, encoded_ctx, params_.get("context.weight"),
                                  params_.get("context.bias")));
}

ad::Tensor NeuroDram::glimpse_network(Graph& g, const Tensor& cubes, const Tensor& locs,
                                      BnMode bn) {
    if (cubes.rank() != 5 || cubes.shape()[1] != 1 || cubes.shape()[2] != cfg_.glimpse_side)
        throw std::invalid_argument("glimpse_network: cubes must be [B,1,g,g,g] with g=" +
                                    std::to_string(cfg_.glimpse_side));
    Tensor x = cubes;
    for (size_t b = 0; b < cfg_.trunk.channels.size(); ++b) {
        std::string prefix = "glimpse.block" + std::to_string(b);
        x = ad::conv3d(g, x, params_.get(prefix + ".conv.weight"),
                       params_.get(prefix + ".conv.bias"), 1, cfg_.trunk.kernel / 2);
        x = ad::batchnorm3d(g, x, params_.get(prefix + ".bn.gamma"),
                            params_.get(prefix + ".bn.beta"), bn_states_[b], bn);
        x = ad::maxpool3d(g, x, cfg_.trunk.pools[b]);
    }
    int batch = cubes.shape()[0];
    Tensor flat = ad::reshape(g, x, {batch, trunk_flat_dim_});
    Tensor what = ad::linear(g, flat, params_.get("glimpse.what.weight"),
                             params_.get("glimpse.what.bias"));
    Tensor where = ad::linear(g, locs, params_.get("glimpse.where.weight"),
                              params_.get("glimpse.where.bias"));
    return ad::elementwise_mul(g, what, where);
}

AgentState NeuroDram::initial_state(Graph& g, const Tensor& encoded_ctx) {
    int batch = encoded_ctx.shape()[0];
    AgentState s;
    s.h_class = Tensor::zeros({batch, cfg_.hidden_dim});
    s.c_class = Tensor::zeros({batch, cfg_.hidden_dim});
    s.h_loc = context_network(g, encoded_ctx);
    s.c_loc = Tensor::zeros({batch, cfg_.hidden_dim});
    s.step = 0;
    return s;
}

AgentState NeuroDram::recurrent_step(Graph& g, const Tensor& fused, const AgentState& state) {
    ad::LstmWeights lower{params_.get("rnn.class.w_ih"), params_.get("rnn.class.w_hh"),
                          params_.get("rnn.class.bias")};
    ad::LstmWeights upper{params_.get("rnn.loc.w_ih"), params_.get("rnn.loc.w_hh"),
                          params_.get("rnn.loc.bias")};
    AgentState next;
    auto [h1, c1] = ad::lstm_cell(g, fused, state.h_class, state.c_class, lower);
    Tensor upper_in = cfg_.disable_gradient_stop ? h1 : ad::stop_gradient(g, h1);
    auto [h2, c2] = ad::lstm_cell(g, upper_in, state.h_loc, state.c_loc, upper);
    next.h_class = h1;
    next.c_class = c1;
    next.h_loc = h2;
    next.c_loc = c2;
    next.step = state.step + 1;
    return next;
}

ad::Tensor NeuroDram::location_mean(Graph& g, const Tensor& h_loc) {
    return ad::tanh(g, ad::linear(g, h_loc, params_.get("location.weight"),
                                  params_.get("location.bias")));
}

ad::Tensor NeuroDram::classification_logit(Graph& g, const AgentState& state) {
    if (state.step != cfg_.num_steps)
        throw std::logic_error("classification_logit: episode incomplete (step " +
                               std::to_string(state.step) + " of " +
                               std::to_string(cfg_.num_steps) + ")");
    int batch = state.h_class.shape()[0];
    Tensor out = ad::linear(g, state.h_class, params_.get("classifier.weight"),
                            params_.get("classifier.bias"));
    return ad::reshape(g, out, {batch});
}

BatchRollout NeuroDram::rollout(Graph& g, std::span<const data::LabeledCase* const> cases,
                                RolloutMode mode, std::span<const uint64_t> episode_seeds) {
    const int batch = static_cast<int>(cases.size());
    if (batch == 0) throw std::invalid_argument("rollout: empty case batch");
    const bool sampled = mode != RolloutMode::Eval;
    const BnMode bn = mode == RolloutMode::Train ? BnMode::Train : BnMode::Infer;
    if (sampled && episode_seeds.size() != cases.size())
        throw std::invalid_argument("rollout: need one episode seed per case in sampled modes");

    const int gs = cfg_.glimpse_side;
    const double sigma = cfg_.policy_sigma;

    std::vector<Rng> rngs;
    if (sampled) {
        rngs.reserve(batch);
        for (uint64_t s : episode_seeds) rngs.emplace_back(derive_seed(s, {0x10cull}));
    }

    // encoded context, one row per episode
    std::vector<double> ctx_data;
    ctx_data.reserve(static_cast<size_t>(batch) * encoder_.dim());
    for (const auto* c : cases) {
        auto v = encoder_.encode(c->context);
        ctx_data.insert(ctx_data.end(), v.begin(), v.end());
    }
    Tensor ctx = Tensor::from_data({batch, encoder_.dim()}, std::move(ctx_data));

    BatchRollout out;
    out.episodes.resize(batch);
    for (int b = 0; b < batch; ++b) {
        out.episodes[b].case_id = cases[b]->case_id;
        out.episodes[b].label = cases[b]->label;
    }

    AgentState state = initial_state(g, ctx);
    for (int t = 0; t < cfg_.num_steps; ++t) {
        Tensor mean = location_mean(g, state.h_loc);

        std::vector<double> raw(static_cast<size_t>(batch) * 3);
        std::vector<double> executed(static_cast<size_t>(batch) * 3);
        for (int b = 0; b < batch; ++b) {
            LocationDecision dec;
            dec.sigma = sampled ? sigma : 0.0;
            for (int k = 0; k < 3; ++k) {
                double mu = mean.values()[static_cast<size_t>(b) * 3 + k];
                double l = sampled ? mu + sigma * rngs[b].normal() : mu;
                dec.mean[k] = mu;
                dec.sampled[k] = l;
                dec.executed[k] = std::clamp(l, -1.0, 1.0);
                raw[static_cast<size_t>(b) * 3 + k] = l;
                executed[static_cast<size_t>(b) * 3 + k] = dec.executed[k];
            }
            out.episodes[b].decisions.push_back(dec);
        }

        if (sampled) {
            Tensor raw_t = Tensor::from_data({batch, 3}, raw);
            Tensor lp = ad::gaussian_log_prob(g, raw_t, mean, sigma);
            for (int b = 0; b < batch; ++b)
                out.episodes[b].decisions.back().log_prob = lp.values()[b];
            out.step_log_probs.push_back(lp);
        }

        // extract glimpses at the executed locations
        std::vector<double> cube_data(static_cast<size_t>(batch) * gs * gs * gs);
        for (int b = 0; b < batch; ++b) {
            const auto& dec = out.episodes[b].decisions.back();
            data::GlimpseRecord rec = data::extract_glimpse(cases[b]->volume, dec.executed, gs, t);
            for (size_t i = 0; i < rec.cube.size(); ++i)
                cube_data[static_cast<size_t>(b) * rec.cube.size() + i] = rec.cube[i];
            out.episodes[b].glimpses.push_back(std::move(rec));
        }
        Tensor cubes = Tensor::from_data({batch, 1, gs, gs, gs}, std::move(cube_data));
        Tensor locs = Tensor::from_data({batch, 3}, executed);

        Tensor fused = glimpse_network(g, cubes, locs, bn);
        state = recurrent_step(g, fused, state);
    }

    out.logits = classification_logit(g, state);
    out.probs = ad::sigmoid(g, out.logits);
    for (int b = 0; b < batch; ++b) out.episodes[b].prediction = out.probs.values()[b];
    return out;
}

Episode NeuroDram::run_episode(const data::LabeledCase& c, RolloutMode mode, uint64_t seed) {
    Graph g(mode == RolloutMode::Train);
    const data::LabeledCase* ptr = &c;
    uint64_t seeds[1] = {seed};
    BatchRollout r = rollout(g, std::span<const data::LabeledCase* const>(&ptr, 1), mode,
                             std::span<const uint64_t>(seeds, 1));
    return std::move(r.episodes[0]);
}

}  // namespace ndram::model
