#include "ndram/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ndram/data/volume_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace ndram::model {

namespace {

constexpr char kMagic[4] = {'N', 'D', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& s, uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::string& s, uint64_t v) { s.append(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::string& s, const std::vector<double>& v) {
    s.append(reinterpret_cast<const char*>(v.data()), v.size() * 8);
}
void put_str(std::string& s, const std::string& v) {
    put_u32(s, static_cast<uint32_t>(v.size()));
    s.append(v);
}

struct Reader {
    std::string bytes;
    size_t pos = 0;
    std::string origin;

    void need(size_t n) const {
        if (pos + n > bytes.size())
            throw std::runtime_error("truncated checkpoint: " + origin);
    }
    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v;
        std::memcpy(&v, bytes.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string v = bytes.substr(pos, n);
        pos += n;
        return v;
    }
    std::vector<double> f64s(size_t n) {
        need(n * 8);
        std::vector<double> v(n);
        std::memcpy(v.data(), bytes.data() + pos, n * 8);
        pos += n * 8;
        return v;
    }
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::string s;
    s.append(kMagic, 4);
    put_u32(s, kVersion);
    put_str(s, ckpt.meta.dump());

    put_u32(s, static_cast<uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
        put_str(s, t.name);
        put_u32(s, t.group == ad::ParamGroup::Supervised ? 0u : 1u);
        put_u32(s, static_cast<uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(s, static_cast<uint32_t>(d));
        put_u64(s, t.data.size());
        put_f64s(s, t.data);
    }

    put_u32(s, static_cast<uint32_t>(ckpt.bn_states.size()));
    for (const auto& b : ckpt.bn_states) {
        put_str(s, b.name);
        put_u32(s, static_cast<uint32_t>(b.state.running_mean.size()));
        put_f64s(s, {b.state.momentum, b.state.eps});
        put_f64s(s, b.state.running_mean);
        put_f64s(s, b.state.running_var);
    }
    data::atomic_write_bytes(path, s);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    Reader r;
    r.origin = path.string();
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    r.need(8);
    if (std::memcmp(r.bytes.data(), kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path.string());
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " +
                                 path.string());

    Checkpoint ckpt;
    ckpt.meta = nlohmann::json::parse(r.str());

    uint32_t n_tensors = r.u32();
    for (uint32_t i = 0; i < n_tensors; ++i) {
        Checkpoint::NamedTensor t;
        t.name = r.str();
        t.group = r.u32() == 0 ? ad::ParamGroup::Supervised : ad::ParamGroup::Reinforcement;
        uint32_t ndim = r.u32();
        for (uint32_t d = 0; d < ndim; ++d) t.shape.push_back(static_cast<int>(r.u32()));
        uint64_t count = r.u64();
        if (count != static_cast<uint64_t>(ad::shape_numel(t.shape)))
            throw std::runtime_error("checkpoint tensor '" + t.name + "' has inconsistent size");
        t.data = r.f64s(count);
        ckpt.tensors.push_back(std::move(t));
    }

    uint32_t n_bn = r.u32();
    for (uint32_t i = 0; i < n_bn; ++i) {
        Checkpoint::NamedBnState b;
        b.name = r.str();
        uint32_t channels = r.u32();
        auto mo = r.f64s(2);
        b.state = ad::BatchNormState(static_cast<int>(channels));
        b.state.momentum = mo[0];
        b.state.eps = mo[1];
        b.state.running_mean = r.f64s(channels);
        b.state.running_var = r.f64s(channels);
        ckpt.bn_states.push_back(std::move(b));
    }
    return ckpt;
}

namespace {

void collect_params(const ad::ParamStore& params, Checkpoint& ckpt) {
    for (const auto& name : params.names()) {
        const ad::Tensor& t = params.get(name);
        Checkpoint::NamedTensor nt;
        nt.name = name;
        nt.group = params.group_of(name);
        nt.shape = t.shape();
        nt.data.assign(t.values().begin(), t.values().end());
        ckpt.tensors.push_back(std::move(nt));
    }
}

void restore_params(ad::ParamStore& params, const Checkpoint& ckpt) {
    for (const auto& t : ckpt.tensors) {
        ad::Tensor& dst = params.get(t.name);
        if (dst.shape() != t.shape)
            throw std::runtime_error("checkpoint tensor '" + t.name + "' shape mismatch");
        auto vals = dst.values_mut();
        std::copy(t.data.begin(), t.data.end(), vals.begin());
    }
    if (ckpt.tensors.size() != params.size())
        throw std::runtime_error("checkpoint parameter set does not match the model");
}

nlohmann::json bank_json(const std::vector<data::ContextRecord>& bank) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : bank) j.push_back(r.to_json());
    return j;
}

void collect_bn(const std::vector<ad::BatchNormState>& states, Checkpoint& ckpt) {
    for (size_t i = 0; i < states.size(); ++i)
        ckpt.bn_states.push_back({"bn" + std::to_string(i), states[i]});
}

void restore_bn(std::vector<ad::BatchNormState>& states, const Checkpoint& ckpt) {
    if (ckpt.bn_states.size() != states.size())
        throw std::runtime_error("checkpoint batch-norm state count does not match the model");
    for (size_t i = 0; i < states.size(); ++i) states[i] = ckpt.bn_states[i].state;
}

}  // namespace

Checkpoint snapshot_model(const NeuroDram& m, const std::vector<data::ContextRecord>& bank) {
    Checkpoint ckpt;
    ckpt.meta["model_kind"] = "neurodram";
    ckpt.meta["config"] = m.config().to_json();
    ckpt.meta["encoder"] = m.encoder().stats_json();
    ckpt.meta["context_bank"] = bank_json(bank);
    collect_params(m.params(), ckpt);
    collect_bn(const_cast<NeuroDram&>(m).bn_states(), ckpt);
    return ckpt;
}

std::unique_ptr<NeuroDram> restore_model(const Checkpoint& ckpt) {
    if (checkpoint_kind(ckpt) != "neurodram")
        throw std::runtime_error("checkpoint does not hold a neurodram model");
    ModelConfig cfg = ModelConfig::from_json(ckpt.meta.at("config"));
    auto enc = data::ContextEncoder::from_stats_json(ckpt.meta.at("encoder"));
    auto m = std::make_unique<NeuroDram>(cfg, std::move(enc));
    restore_params(m->params(), ckpt);
    restore_bn(m->bn_states(), ckpt);
    return m;
}

Checkpoint snapshot_baseline(const BaselineCnn& m, const std::vector<data::ContextRecord>& bank) {
    Checkpoint ckpt;
    ckpt.meta["model_kind"] = "baseline-cnn";
    ckpt.meta["config"] = m.spec().to_json();
    ckpt.meta["volume_side"] = m.volume_side();
    ckpt.meta["context_bank"] = bank_json(bank);
    collect_params(m.params(), ckpt);
    collect_bn(const_cast<BaselineCnn&>(m).bn_states(), ckpt);
    return ckpt;
}

std::unique_ptr<BaselineCnn> restore_baseline(const Checkpoint& ckpt) {
    if (checkpoint_kind(ckpt) != "baseline-cnn")
        throw std::runtime_error("checkpoint does not hold a baseline-cnn model");
    BaselineSpec spec = BaselineSpec::from_json(ckpt.meta.at("config"));
    auto m = std::make_unique<BaselineCnn>(spec, ckpt.meta.at("volume_side").get<int>());
    restore_params(m->params(), ckpt);
    restore_bn(m->bn_states(), ckpt);
    return m;
}

std::string checkpoint_kind(const Checkpoint& ckpt) {
    return ckpt.meta.value("model_kind", std::string("unknown"));
}

std::vector<data::ContextRecord> checkpoint_bank(const Checkpoint& ckpt) {
    std::vector<data::ContextRecord> bank;
    if (!ckpt.meta.contains("context_bank")) return bank;
    for (const auto& j : ckpt.meta.at("context_bank")) bank.push_back(data::ContextRecord::from_json(j));
    return bank;
}

}  // namespace ndram::model
