#include "ndram/ad/graph.hpp"

#include <stdexcept>

namespace ndram::ad {

void Graph::record(std::vector<std::shared_ptr<TensorImpl>> inputs,
                   std::vector<std::shared_ptr<TensorImpl>> outputs,
                   std::function<void()> backward_fn, bool is_stop) {
    if (!recording_) return;
    if (is_stop) ++stop_markers_;
    nodes_.push_back(Node{std::move(inputs), std::move(outputs), std::move(backward_fn), is_stop});
}

void Graph::ensure_zero_grads() {
    std::unordered_set<TensorImpl*> seen;
    for (auto& node : nodes_) {
        for (auto& t : node.inputs) {
            if (seen.insert(t.get()).second) t->grad.assign(t->value.size(), 0.0);
        }
        for (auto& t : node.outputs) {
            if (seen.insert(t.get()).second) t->grad.assign(t->value.size(), 0.0);
        }
    }
}

void Graph::backward(const Tensor& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined loss tensor");
    if (loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (!recording_) throw std::logic_error("backward: graph was constructed non-recording");

    ensure_zero_grads();
    auto& li = *loss.impl();
    li.grad.assign(li.value.size(), 0.0);
    li.grad[0] = 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->backward) it->backward();
    }
}

std::vector<std::shared_ptr<TensorImpl>> Graph::reachable_leaves(const Tensor& from) const {
    std::unordered_set<TensorImpl*> frontier;
    frontier.insert(from.impl().get());
    std::vector<std::shared_ptr<TensorImpl>> leaves;
    std::unordered_set<TensorImpl*> leaf_seen;

    auto consider_leaf = [&](const std::shared_ptr<TensorImpl>& t) {
        if (t->requires_grad && leaf_seen.insert(t.get()).second) leaves.push_back(t);
    };
    consider_leaf(from.impl());

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        bool hit = false;
        for (auto& out : it->outputs) {
            if (frontier.count(out.get())) { hit = true; break; }
        }
        if (!hit || it->is_stop) continue;
        for (auto& in : it->inputs) {
            frontier.insert(in.get());
            consider_leaf(in);
        }
    }
    return leaves;
}

}  // namespace ndram::ad
