#pragma once

#include <functional>

#include "codistill/tensor.hpp"

namespace codistill {

// Central-difference gradient estimate of a scalar function:
//   g_i = (f(x + h e_i) - f(x - h e_i)) / (2h)
// Evaluates f forward-only and never consults the tape, so it stays an
// independent check on reverse-mode results. Throws ValueError when f
// returns a non-finite value and DomainError when h <= 0.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x,
                                  double h);

// |ad - fd| <= max(abs_tol, rel_tol * |fd|), elementwise.
bool gradients_close(std::span<const double> ad,
                     std::span<const double> fd,
                     double rel_tol = 1e-4,
                     double abs_tol = 1e-6);

}  // namespace codistill
