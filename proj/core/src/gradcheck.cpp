#include "codistill/gradcheck.hpp"

#include <cmath>

#include "codistill/error.hpp"

namespace codistill {

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x,
                                  double h) {
    if (!(h > 0.0)) throw DomainError("finite_difference_gradient: h must be positive");
    std::vector<double> base(x.values().begin(), x.values().end());
    std::vector<double> grad(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> plus = base;
        std::vector<double> minus = base;
        plus[i] += h;
        minus[i] -= h;
        double fp = f(Tensor::from_data(x.shape(), std::move(plus)));
        double fm = f(Tensor::from_data(x.shape(), std::move(minus)));
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw ValueError("finite_difference_gradient: f returned a non-finite value");
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return Tensor::from_data(x.shape(), std::move(grad));
}

bool gradients_close(std::span<const double> ad,
                     std::span<const double> fd,
                     double rel_tol,
                     double abs_tol) {
    if (ad.size() != fd.size()) return false;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        double diff = std::abs(ad[i] - fd[i]);
        double tol = std::max(abs_tol, rel_tol * std::abs(fd[i]));
        if (!(diff <= tol)) return false;
    }
    return true;
}

}  // namespace codistill
