#include "ndram/ad/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace ndram::ad {

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor shape has non-positive dim " + std::to_string(d));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

static std::shared_ptr<TensorImpl> make_impl(Shape shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    int64_t n = shape_numel(shape);
    impl->shape = std::move(shape);
    impl->value.assign(static_cast<size_t>(n), 0.0);
    impl->requires_grad = requires_grad;
    impl->active = requires_grad;
    return impl;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    auto impl = make_impl(std::move(shape), requires_grad);
    for (double& x : impl->value) x = v;
    return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (static_cast<int64_t>(data.size()) != shape_numel(shape))
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->value = std::move(data);
    impl->requires_grad = requires_grad;
    impl->active = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape()));
    return impl_->value[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
    const Shape& s = impl_->shape;
    if (idx.size() != s.size()) throw std::invalid_argument("at(): rank mismatch");
    int64_t flat = 0;
    size_t k = 0;
    for (int i : idx) {
        if (i < 0 || i >= s[k]) throw std::out_of_range("at(): index out of range");
        flat = flat * s[k] + i;
        ++k;
    }
    return impl_->value[static_cast<size_t>(flat)];
}

Tensor make_op_output(Shape shape, bool active) {
    auto impl = make_impl(std::move(shape), false);
    impl->active = active;
    return Tensor(std::move(impl));
}

}  // namespace ndram::ad
