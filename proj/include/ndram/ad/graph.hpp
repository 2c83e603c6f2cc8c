#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "ndram/ad/tensor.hpp"

namespace ndram::ad {

// Define-by-run tape. Ops append nodes in execution order, so the record is
// topologically sorted by construction; backward() is a single reverse sweep.
// A non-recording graph runs forward math only and records nothing.
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const { return recording_; }
    size_t node_count() const { return nodes_.size(); }

    // Reverse-mode sweep from a scalar loss. Zeroes the gradient buffers of
    // every tensor the tape touches first, so repeated calls on one graph give
    // independent gradients and stopped/unreachable leaves read exactly 0.0.
    void backward(const Tensor& loss);

    // Leaf tensors (requires_grad) reachable from `from` by walking the tape
    // upstream without crossing a gradient-stop marker.
    std::vector<std::shared_ptr<TensorImpl>> reachable_leaves(const Tensor& from) const;

    // --- recording interface used by ops ---
    void record(std::vector<std::shared_ptr<TensorImpl>> inputs,
                std::vector<std::shared_ptr<TensorImpl>> outputs,
                std::function<void()> backward_fn, bool is_stop = false);

    size_t stop_marker_count() const { return stop_markers_; }

private:
    struct Node {
        std::vector<std::shared_ptr<TensorImpl>> inputs;
        std::vector<std::shared_ptr<TensorImpl>> outputs;
        std::function<void()> backward;
        bool is_stop = false;
    };

    void ensure_zero_grads();

    bool recording_;
    std::vector<Node> nodes_;
    size_t stop_markers_ = 0;
};

}  // namespace ndram::ad
