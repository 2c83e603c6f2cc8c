#include "ndram/ad/param_store.hpp"

#include <stdexcept>

namespace ndram::ad {

const char* to_string(ParamGroup g) {
    return g == ParamGroup::Supervised ? "supervised" : "reinforcement";
}

Tensor& ParamStore::add(const std::string& name, Tensor t, ParamGroup group) {
    if (!t.defined()) throw std::invalid_argument("ParamStore: undefined tensor for '" + name + "'");
    if (!t.requires_grad())
        throw std::invalid_argument("ParamStore: parameter '" + name + "' must require gradients");
    auto [it, inserted] = entries_.emplace(name, Entry{std::move(t), group});
    if (!inserted) throw std::invalid_argument("ParamStore: duplicate parameter name '" + name + "'");
    return it->second.tensor;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return it->second.tensor;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return it->second.tensor;
}

ParamGroup ParamStore::group_of(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
    return it->second.group;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::vector<std::string> ParamStore::names(ParamGroup group) const {
    std::vector<std::string> out;
    for (const auto& [name, e] : entries_)
        if (e.group == group) out.push_back(name);
    return out;
}

int64_t ParamStore::total_elements() const {
    int64_t n = 0;
    for (const auto& [_, e] : entries_) n += e.tensor.numel();
    return n;
}

std::map<std::string, std::vector<double>> ParamStore::collect_grads(ParamGroup group) const {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [name, e] : entries_) {
        if (e.group != group) continue;
        if (!e.tensor.has_grad())
            throw std::runtime_error("ParamStore: parameter '" + name + "' has no gradient");
        auto gr = e.tensor.grad();
        out.emplace(name, std::vector<double>(gr.begin(), gr.end()));
    }
    return out;
}

}  // namespace ndram::ad
