#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace codistill {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Shared storage behind Tensor. Tape nodes and optimizer state hold on to the
// impl, so in-place parameter updates are visible everywhere the tensor is
// referenced.
struct TensorImpl {
    Shape shape;
    std::vector<double> data;    // row-major
    bool requires_grad = false;
    std::vector<double> grad;    // empty until backward() touches this tensor
    std::uint64_t tape_id = 0;   // 0 = not registered on any tape
    std::size_t node_id = 0;     // valid only when tape_id matches the active tape
};

// Dense n-dimensional array of doubles with value-like copy semantics over
// shared storage. Copies alias the same buffer; detach() or clone() make an
// independent one. A tensor without grad state is safe to share across
// threads; anything participating in a tape belongs to that tape's thread.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor from_data(Shape shape, std::vector<double> data);

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t ndim() const { return shape().size(); }
    std::size_t numel() const;
    std::size_t dim(std::size_t axis) const;

    std::span<const double> values() const;
    std::span<double> values_mut();

    // Scalar extraction; throws ShapeError unless numel() == 1.
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool value);

    // Empty span until backward() has written to this tensor.
    std::span<const double> grad() const;
    bool has_grad() const;
    void zero_grad();

    bool all_finite() const;

    // Deep copy with no grad state and no tape membership.
    Tensor clone() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;

    friend Tensor wrap_impl(std::shared_ptr<TensorImpl> impl);
};

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl);

// Row selection along dim 0, e.g. minibatch slicing. The result is a fresh
// tensor with copied data, not a view, and carries no grad history.
Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& rows);

}  // namespace codistill
