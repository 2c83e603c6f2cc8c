#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ndram::ad {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily by Graph::backward
    bool requires_grad = false;
    bool active = false;  // participates in gradient flow
    // set by sigmoid(); lets bce_loss recover the pre-sigmoid logits
    std::shared_ptr<TensorImpl> logit_parent;
};

// Value-semantic handle over shared dense storage. All engine math is double
// precision; tensors are never mutated by ops once created.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t numel() const { return static_cast<int64_t>(impl_->value.size()); }

    std::span<const double> values() const { return impl_->value; }
    std::span<double> values_mut() { return impl_->value; }
    std::span<const double> grad() const { return impl_->grad; }
    bool has_grad() const { return !impl_->grad.empty(); }

    bool requires_grad() const { return impl_->requires_grad; }
    bool active() const { return impl_->active; }

    // scalar accessor; throws unless numel() == 1
    double item() const;

    double at(std::initializer_list<int> idx) const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;

    friend Tensor make_op_output(Shape shape, bool active);
};

// internal: outputs of recorded ops
Tensor make_op_output(Shape shape, bool active);

}  // namespace ndram::ad
