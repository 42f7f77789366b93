#pragma once

#include "codistill/tensor.hpp"

namespace codistill {

// Differentiable tensor operations. Every op validates shapes, computes the
// forward result, and records a backward rule on the active tape when at
// least one input requires grad. With no active tape the ops run in pure
// evaluation mode and the result carries no grad state.
//
// Elementwise binaries accept equal shapes, or one operand with numel == 1
// which is broadcast against the other (the only broadcasting supported).

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);  // throws DomainError on a zero divisor

Tensor add(const Tensor& a, double c);
Tensor sub(const Tensor& a, double c);
Tensor sub(double c, const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor div(const Tensor& a, double c);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // throws DomainError unless all entries > 0

// Elementwise maximum. On ties the gradient goes to `b`; max(x, 0.0) is
// therefore a ReLU whose derivative at exactly 0 is 0.
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, double c);

Tensor sum(const Tensor& a);   // rank-0 result
Tensor mean(const Tensor& a);  // rank-0 result

// Axis reductions for rank-2 tensors: axis 0 collapses rows (result [cols]),
// axis 1 collapses columns (result [rows]).
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);
// Ties route the gradient to the first maximal element.
Tensor max_along_axis(const Tensor& a, std::size_t axis);

// Metadata-only reshape (numel preserved); gradient passes straight through.
Tensor reshape(const Tensor& a, Shape shape);

// Copy of `a` with no grad requirement and no tape membership. Constants fed
// to a loss (teacher predictions, peer predictions) go through here.
Tensor detach(const Tensor& a);

// 2-D cross-correlation, stride 1, no padding.
//   x [N, Cin, H, W], w [Cout, Cin, k, k], b [Cout] -> [N, Cout, H-k+1, W-k+1]
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add(a, c); }
inline Tensor operator+(double c, const Tensor& a) { return add(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return sub(a, c); }
inline Tensor operator-(double c, const Tensor& a) { return sub(c, a); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator/(const Tensor& a, double c) { return div(a, c); }

}  // namespace codistill
