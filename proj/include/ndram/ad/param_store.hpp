#pragma once

#include <map>
#include <string>
#include <vector>

#include "ndram/ad/tensor.hpp"

namespace ndram::ad {

// Which optimizer a parameter belongs to. The supervised group is trained by
// the classification loss, the reinforcement group by the policy surrogate.
enum class ParamGroup { Supervised, Reinforcement };

const char* to_string(ParamGroup g);

class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t, ParamGroup group);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    ParamGroup group_of(const std::string& name) const;

    // names in lexicographic order, optionally restricted to one group
    std::vector<std::string> names() const;
    std::vector<std::string> names(ParamGroup group) const;

    size_t size() const { return entries_.size(); }
    int64_t total_elements() const;

    // Gradients currently held by the parameter tensors, keyed by name.
    // Throws if a parameter in the group has no gradient buffer.
    std::map<std::string, std::vector<double>> collect_grads(ParamGroup group) const;

private:
    struct Entry {
        Tensor tensor;
        ParamGroup group;
    };
    std::map<std::string, Entry> entries_;
};

}  // namespace ndram::ad
