#include "ndram/model/baseline.hpp"

#include <cmath>
#include <stdexcept>

namespace ndram::model {

using ad::BnMode;
using ad::Graph;
using ad::ParamGroup;
using ad::Tensor;

nlohmann::json BaselineSpec::to_json() const {
    nlohmann::json j;
    j["channels"] = channels;
    j["pools"] = pools;
    j["kernel"] = kernel;
    j["fc_hidden"] = fc_hidden;
    j["dropout"] = dropout;
    j["init_seed"] = init_seed;
    return j;
}

BaselineSpec BaselineSpec::from_json(const nlohmann::json& j) {
    BaselineSpec s;
    s.channels = j.at("channels").get<std::vector<int>>();
    s.pools = j.at("pools").get<std::vector<int>>();
    s.kernel = j.at("kernel").get<int>();
    s.fc_hidden = j.at("fc_hidden").get<int>();
    s.dropout = j.at("dropout").get<double>();
    s.init_seed = j.at("init_seed").get<uint64_t>();
    return s;
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

BaselineCnn::BaselineCnn(const BaselineSpec& spec, int volume_side)
    : spec_(spec), volume_side_(volume_side) {
    if (spec_.channels.empty() || spec_.channels.size() != spec_.pools.size())
        throw std::invalid_argument("baseline: channels/pools must be non-empty and same length");
    if (spec_.dropout < 0.0 || spec_.dropout >= 1.0)
        throw std::invalid_argument("baseline: dropout must be in [0,1)");

    int side = volume_side_;
    for (size_t b = 0; b < spec_.pools.size(); ++b) {
        int p = spec_.pools[b];
        if (p < 1 || side % p != 0 || side / p < 1)
            throw std::invalid_argument("baseline: volume side " + std::to_string(volume_side_) +
                                        " is not divisible by the pooling stack (stage " +
                                        std::to_string(b) + ")");
        side /= p;
    }
    flat_dim_ = spec_.channels.back() * side * side * side;

    Rng rng(derive_seed(spec_.init_seed, {0xbaceull}));
    const int k = spec_.kernel;
    int cin = 1;
    for (size_t b = 0; b < spec_.channels.size(); ++b) {
        int cout = spec_.channels[b];
        std::string prefix = "block" + std::to_string(b);
        int fan = cin * k * k * k;
        params_.add(prefix + ".conv.weight", init_uniform({cout, cin, k, k, k}, fan, rng),
                    ParamGroup::Supervised);
        params_.add(prefix + ".conv.bias", init_uniform({cout}, fan, rng), ParamGroup::Supervised);
        params_.add(prefix + ".bn.gamma", Tensor::full({cout}, 1.0, true), ParamGroup::Supervised);
        params_.add(prefix + ".bn.beta", Tensor::zeros({cout}, true), ParamGroup::Supervised);
        bn_states_.emplace_back(cout);
        cin = cout;
    }
    params_.add("fc1.weight", init_uniform({spec_.fc_hidden, flat_dim_}, flat_dim_, rng),
                ParamGroup::Supervised);
    params_.add("fc1.bias", init_uniform({spec_.fc_hidden}, flat_dim_, rng), ParamGroup::Supervised);
    params_.add("fc2.weight", init_uniform({1, spec_.fc_hidden}, spec_.fc_hidden, rng),
                ParamGroup::Supervised);
    params_.add("fc2.bias", init_uniform({1}, spec_.fc_hidden, rng), ParamGroup::Supervised);
}

ad::Tensor BaselineCnn::logits(Graph& g, const Tensor& volumes, BnMode bn, Rng* dropout_rng) {
    if (volumes.rank() != 5 || volumes.shape()[1] != 1 || volumes.shape()[2] != volume_side_)
        throw std::invalid_argument("baseline: volumes must be [B,1,S,S,S] with S=" +
                                    std::to_string(volume_side_));
    Tensor x = volumes;
    for (size_t b = 0; b < spec_.channels.size(); ++b) {
        std::string prefix = "block" + std::to_string(b);
        x = ad::conv3d(g, x, params_.get(prefix + ".conv.weight"),
                       params_.get(prefix + ".conv.bias"), 1, spec_.kernel / 2);
        x = ad::batchnorm3d(g, x, params_.get(prefix + ".bn.gamma"),
                            params_.get(prefix + ".bn.beta"), bn_states_[b], bn);
        x = ad::maxpool3d(g, x, spec_.pools[b]);
    }
    int batch = volumes.shape()[0];
    Tensor flat = ad::reshape(g, x, {batch, flat_dim_});
    Tensor h = ad::tanh(g, ad::linear(g, flat, params_.get("fc1.weight"), params_.get("fc1.bias")));

    if (dropout_rng && spec_.dropout > 0.0) {
        // inverted dropout as an elementwise product with a constant mask
        double keep = 1.0 - spec_.dropout;
        std::vector<double> mask(static_cast<size_t>(batch) * spec_.fc_hidden);
        for (double& m : mask) m = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        h = ad::elementwise_mul(g, h, Tensor::from_data({batch, spec_.fc_hidden}, std::move(mask)));
    }

    Tensor out = ad::linear(g, h, params_.get("fc2.weight"), params_.get("fc2.bias"));
    return ad::reshape(g, out, {batch});
}

double BaselineCnn::predict(const data::LabeledCase& c) {
    Graph g(false);
    const data::LabeledCase* ptr = &c;
    Tensor vols = volume_batch(std::span<const data::LabeledCase* const>(&ptr, 1));
    Tensor z = logits(g, vols, BnMode::Infer, nullptr);
    Tensor p = ad::sigmoid(g, z);
    return p.values()[0];
}

ad::Tensor BaselineCnn::volume_batch(std::span<const data::LabeledCase* const> cases) {
    if (cases.empty()) throw std::invalid_argument("volume_batch: empty case list");
    int s = cases[0]->volume.dims[0];
    for (const auto* c : cases)
        if (c->volume.dims != std::array<int, 3>{s, s, s})
            throw std::invalid_argument("volume_batch: volumes must share cubic dims");
    std::vector<double> data;
    data.reserve(cases.size() * static_cast<size_t>(s) * s * s);
    for (const auto* c : cases)
        for (float v : c->volume.voxels) data.push_back(static_cast<double>(v));
    return Tensor::from_data({static_cast<int>(cases.size()), 1, s, s, s}, std::move(data));
}

}  // namespace ndram::model
