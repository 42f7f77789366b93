#include "codistill/tensor.hpp"

#include <cmath>
#include <sstream>

#include "codistill/error.hpp"

namespace codistill {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {
const Shape& require_impl(const std::shared_ptr<TensorImpl>& impl) {
    if (!impl) throw ValueError("tensor is undefined");
    return impl->shape;
}
}  // namespace

Tensor Tensor::zeros(Shape shape) {
    return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double value) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(shape_numel(shape), value);
    impl->shape = std::move(shape);
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) {
    return full(Shape{}, value);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != data.size()) {
        throw ShapeError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const {
    return require_impl(impl_);
}

std::size_t Tensor::numel() const {
    require_impl(impl_);
    return impl_->data.size();
}

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(s));
    }
    return s[axis];
}

std::span<const double> Tensor::values() const {
    require_impl(impl_);
    return impl_->data;
}

std::span<double> Tensor::values_mut() {
    require_impl(impl_);
    return impl_->data;
}

double Tensor::item() const {
    require_impl(impl_);
    if (impl_->data.size() != 1) {
        throw ShapeError("item() needs a scalar, got shape " + shape_to_string(impl_->shape));
    }
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    const Shape& s = shape();
    if (index.size() != s.size()) {
        throw ShapeError("index rank " + std::to_string(index.size()) +
                         " does not match shape " + shape_to_string(s));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= s[axis]) throw ShapeError("index out of range on axis " + std::to_string(axis));
        flat = flat * s[axis] + i;
        ++axis;
    }
    return impl_->data[flat];
}

bool Tensor::requires_grad() const {
    return impl_ && impl_->requires_grad;
}

Tensor& Tensor::set_requires_grad(bool value) {
    require_impl(impl_);
    impl_->requires_grad = value;
    return *this;
}

std::span<const double> Tensor::grad() const {
    require_impl(impl_);
    return impl_->grad;
}

bool Tensor::has_grad() const {
    return impl_ && !impl_->grad.empty();
}

void Tensor::zero_grad() {
    require_impl(impl_);
    impl_->grad.assign(impl_->data.size(), 0.0);
}

bool Tensor::all_finite() const {
    require_impl(impl_);
    for (double v : impl_->data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::clone() const {
    require_impl(impl_);
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl) {
    return Tensor(std::move(impl));
}

Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& rows) {
    const Shape& s = t.shape();
    if (s.empty()) throw ShapeError("take_rows needs rank >= 1");
    std::size_t stride = t.numel() / s[0];
    Shape out_shape = s;
    out_shape[0] = rows.size();
    std::vector<double> out(rows.size() * stride);
    auto src = t.values();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= s[0]) throw ValueError("row index out of range in take_rows");
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows[r] * stride), stride,
                    out.begin() + static_cast<std::ptrdiff_t>(r * stride));
    }
    return Tensor::from_data(std::move(out_shape), std::move(out));
}

}  // namespace codistill
