#include "codistill/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codistill/error.hpp"
#include "codistill/tape.hpp"

namespace codistill {

namespace {

enum class Broadcast { Equal, ScalarA, ScalarB };

Broadcast classify_binary(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::Equal;
    if (a.numel() == 1) return Broadcast::ScalarA;
    if (b.numel() == 1) return Broadcast::ScalarB;
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()));
}

// Shared recording logic: registers whichever inputs require grad as leaves,
// marks the output differentiable, and appends the node. No-op without an
// active tape or when nothing requires grad.
template <class MakeBackward>
void maybe_record(std::initializer_list<const Tensor*> inputs, Tensor& out, MakeBackward make) {
    Tape* tape = active_tape();
    if (!tape) return;
    bool any = false;
    for (const Tensor* t : inputs) {
        if (t->defined() && t->requires_grad()) any = true;
    }
    if (!any) return;
    std::vector<std::size_t> ids;
    std::vector<bool> tracked;
    for (const Tensor* t : inputs) {
        bool tr = t->defined() && t->requires_grad();
        tracked.push_back(tr);
        ids.push_back(tr ? tape->register_leaf(t->impl()) : 0);
    }
    out.set_requires_grad(true);
    tape->record(
        [&] {
            std::vector<std::size_t> tracked_ids;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (tracked[i]) tracked_ids.push_back(ids[i]);
            }
            return tracked_ids;
        }(),
        out.impl(), make(ids, tracked));
}

// f: per-element forward. dfda/dfdb: local partials as functions of the two
// operand values at that element.
template <class F, class DA, class DB>
Tensor elementwise_binary(const char* op, const Tensor& a, const Tensor& b, F f, DA dfda, DB dfdb) {
    Broadcast kind = classify_binary(op, a, b);
    auto va = a.values();
    auto vb = b.values();
    std::size_t n = std::max(a.numel(), b.numel());
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = va[kind == Broadcast::ScalarA ? 0 : i];
        double y = vb[kind == Broadcast::ScalarB ? 0 : i];
        data[i] = f(x, y);
    }
    Shape out_shape = (kind == Broadcast::ScalarA) ? b.shape() : a.shape();
    Tensor out = Tensor::from_data(std::move(out_shape), std::move(data));

    maybe_record({&a, &b}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>& tracked) {
        auto ia = a.impl();
        auto ib = b.impl();
        std::size_t id_a = ids[0], id_b = ids[1];
        bool ta = tracked[0], tb = tracked[1];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            std::size_t count = g.size();
            if (ta) {
                auto& slot = detail::adjoint_slot(adj, id_a, ia->data.size());
                for (std::size_t i = 0; i < count; ++i) {
                    double x = ia->data[kind == Broadcast::ScalarA ? 0 : i];
                    double y = ib->data[kind == Broadcast::ScalarB ? 0 : i];
                    slot[kind == Broadcast::ScalarA ? 0 : i] += g[i] * dfda(x, y);
                }
            }
            if (tb) {
                auto& slot = detail::adjoint_slot(adj, id_b, ib->data.size());
                for (std::size_t i = 0; i < count; ++i) {
                    double x = ia->data[kind == Broadcast::ScalarA ? 0 : i];
                    double y = ib->data[kind == Broadcast::ScalarB ? 0 : i];
                    slot[kind == Broadcast::ScalarB ? 0 : i] += g[i] * dfdb(x, y);
                }
            }
        };
    });
    return out;
}

// dfdx receives the input and output values at the element.
template <class F, class D>
Tensor elementwise_unary(const Tensor& a, F f, D dfdx) {
    auto va = a.values();
    std::vector<double> data(a.numel());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = f(va[i]);
    Tensor out = Tensor::from_data(a.shape(), std::move(data));

    maybe_record({&a}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>&) {
        auto ia = a.impl();
        auto io = out.impl();
        std::size_t id = ids[0];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            auto& slot = detail::adjoint_slot(adj, id, ia->data.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                slot[i] += g[i] * dfdx(ia->data[i], io->data[i]);
            }
        };
    });
    return out;
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.ndim() != 2) {
        throw ShapeError(std::string(op) + ": needs a rank-2 tensor, got " +
                         shape_to_string(t.shape()));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2("matmul", a);
    require_rank2("matmul", b);
    std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
    auto va = a.values();
    auto vb = b.values();
    std::vector<double> data(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double aval = va[i * k + p];
            if (aval == 0.0) continue;
            const double* brow = &vb[p * n];
            double* orow = &data[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aval * brow[j];
        }
    }
    Tensor out = Tensor::from_data(Shape{m, n}, std::move(data));

    maybe_record({&a, &b}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>& tracked) {
        auto ia = a.impl();
        auto ib = b.impl();
        std::size_t id_a = ids[0], id_b = ids[1];
        bool ta = tracked[0], tb = tracked[1];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            if (ta) {  // dA = G * B^T
                auto& slot = detail::adjoint_slot(adj, id_a, m * k);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* grow = &g[i * n];
                        const double* brow = &ib->data[p * n];
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        slot[i * k + p] += acc;
                    }
                }
            }
            if (tb) {  // dB = A^T * G
                auto& slot = detail::adjoint_slot(adj, id_b, k * n);
                for (std::size_t i = 0; i < m; ++i) {
                    const double* grow = &g[i * n];
                    for (std::size_t p = 0; p < k; ++p) {
                        double aval = ia->data[i * k + p];
                        if (aval == 0.0) continue;
                        double* srow = &slot[p * n];
                        for (std::size_t j = 0; j < n; ++j) srow[j] += aval * grow[j];
                    }
                }
            }
        };
    });
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    for (double v : b.values()) {
        if (v == 0.0) throw DomainError("div: divisor contains zero");
    }
    return elementwise_binary(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor add(const Tensor& a, double c) {
    return elementwise_unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, double c) {
    return add(a, -c);
}

Tensor sub(double c, const Tensor& a) {
    return elementwise_unary(a, [c](double x) { return c - x; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double c) {
    return elementwise_unary(a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor div(const Tensor& a, double c) {
    if (c == 0.0) throw DomainError("div: divisor is zero");
    return scale(a, 1.0 / c);
}

Tensor exp(const Tensor& a) {
    return elementwise_unary(a, [](double x) { return std::exp(x); },
                             [](double, double out) { return out; });
}

Tensor log(const Tensor& a) {
    for (double v : a.values()) {
        if (!(v > 0.0)) throw DomainError("log: argument must be strictly positive");
    }
    return elementwise_unary(a, [](double x) { return std::log(x); },
                             [](double x, double) { return 1.0 / x; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        "max", a, b, [](double x, double y) { return x > y ? x : y; },
        [](double x, double y) { return x > y ? 1.0 : 0.0; },
        [](double x, double y) { return y >= x ? 1.0 : 0.0; });
}

Tensor maximum(const Tensor& a, double c) {
    return elementwise_unary(a, [c](double x) { return x > c ? x : c; },
                             [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    Tensor out = Tensor::scalar(acc);
    maybe_record({&a}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>&) {
        std::size_t id = ids[0];
        std::size_t n = a.numel();
        return [=](const std::vector<double>& g, Adjoints& adj) {
            auto& slot = detail::adjoint_slot(adj, id, n);
            for (std::size_t i = 0; i < n; ++i) slot[i] += g[0];
        };
    });
    return out;
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
    double inv = 1.0 / static_cast<double>(a.numel());
    return scale(sum(a), inv);
}

namespace {
void require_axis2(const char* op, const Tensor& a, std::size_t axis) {
    require_rank2(op, a);
    if (axis > 1) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                         " invalid for rank-2 tensor");
    }
}
}  // namespace

Tensor sum(const Tensor& a, std::size_t axis) {
    require_axis2("sum", a, axis);
    std::size_t rows = a.dim(0), cols = a.dim(1);
    auto va = a.values();
    std::size_t out_n = axis == 0 ? cols : rows;
    std::vector<double> data(out_n, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            data[axis == 0 ? c : r] += va[r * cols + c];
        }
    }
    Tensor out = Tensor::from_data(Shape{out_n}, std::move(data));
    maybe_record({&a}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>&) {
        std::size_t id = ids[0];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            auto& slot = detail::adjoint_slot(adj, id, rows * cols);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    slot[r * cols + c] += g[axis == 0 ? c : r];
                }
            }
        };
    });
    return out;
}

Tensor mean(const Tensor& a, std::size_t axis) {
    require_axis2("mean", a, axis);
    double denom = static_cast<double>(axis == 0 ? a.dim(0) : a.dim(1));
    return scale(sum(a, axis), 1.0 / denom);
}

Tensor max_along_axis(const Tensor& a, std::size_t axis) {
    require_axis2("max_along_axis", a, axis);
    std::size_t rows = a.dim(0), cols = a.dim(1);
    auto va = a.values();
    std::size_t out_n = axis == 0 ? cols : rows;
    std::vector<double> data(out_n);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out_n);
    if (axis == 1) {
        for (std::size_t r = 0; r < rows; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < cols; ++c) {
                if (va[r * cols + c] > va[r * cols + best]) best = c;
            }
            (*argmax)[r] = best;
            data[r] = va[r * cols + best];
        }
    } else {
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t best = 0;
            for (std::size_t r = 1; r < rows; ++r) {
                if (va[r * cols + c] > va[best * cols + c]) best = r;
            }
            (*argmax)[c] = best;
            data[c] = va[best * cols + c];
        }
    }
    Tensor out = Tensor::from_data(Shape{out_n}, std::move(data));
    maybe_record({&a}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>&) {
        std::size_t id = ids[0];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            auto& slot = detail::adjoint_slot(adj, id, rows * cols);
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::size_t flat = axis == 1 ? i * cols + (*argmax)[i] : (*argmax)[i] * cols + i;
                slot[flat] += g[i];
            }
        };
    });
    return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw ShapeError("reshape: cannot view " + shape_to_string(a.shape()) + " as " +
                         shape_to_string(shape));
    }
    std::vector<double> data(a.values().begin(), a.values().end());
    Tensor out = Tensor::from_data(std::move(shape), std::move(data));
    maybe_record({&a}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>&) {
        std::size_t id = ids[0];
        std::size_t n = a.numel();
        return [=](const std::vector<double>& g, Adjoints& adj) {
            auto& slot = detail::adjoint_slot(adj, id, n);
            for (std::size_t i = 0; i < n; ++i) slot[i] += g[i];
        };
    });
    return out;
}

Tensor detach(const Tensor& a) {
    return a.clone();
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.ndim() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_to_string(x.shape()));
    if (w.ndim() != 4) throw ShapeError("conv2d: weight must be [Cout,Cin,k,k], got " + shape_to_string(w.shape()));
    std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wid = x.dim(3);
    std::size_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw ShapeError("conv2d: channel mismatch");
    if (w.dim(3) != k) throw ShapeError("conv2d: kernel must be square");
    if (b.numel() != cout) throw ShapeError("conv2d: bias length must equal Cout");
    if (k > h || k > wid) throw ShapeError("conv2d: kernel larger than input");
    std::size_t oh = h - k + 1, ow = wid - k + 1;

    auto vx = x.values();
    auto vw = w.values();
    auto vb = b.values();
    std::vector<double> data(batch * cout * oh * ow);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t co = 0; co < cout; ++co) {
            for (std::size_t i = 0; i < oh; ++i) {
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = vb[co];
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        for (std::size_t ki = 0; ki < k; ++ki) {
                            const double* xrow = &vx[((n * cin + ci) * h + i + ki) * wid + j];
                            const double* wrow = &vw[((co * cin + ci) * k + ki) * k];
                            for (std::size_t kj = 0; kj < k; ++kj) acc += xrow[kj] * wrow[kj];
                        }
                    }
                    data[((n * cout + co) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    Tensor out = Tensor::from_data(Shape{batch, cout, oh, ow}, std::move(data));

    maybe_record({&x, &w, &b}, out, [&](const std::vector<std::size_t>& ids, const std::vector<bool>& tracked) {
        auto ix = x.impl();
        auto iw = w.impl();
        std::size_t id_x = ids[0], id_w = ids[1], id_b = ids[2];
        bool tx = tracked[0], tw = tracked[1], tb = tracked[2];
        return [=](const std::vector<double>& g, Adjoints& adj) {
            std::vector<double>* dx = tx ? &detail::adjoint_slot(adj, id_x, ix->data.size()) : nullptr;
            std::vector<double>* dw = tw ? &detail::adjoint_slot(adj, id_w, iw->data.size()) : nullptr;
            std::vector<double>* db = tb ? &detail::adjoint_slot(adj, id_b, cout) : nullptr;
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t co = 0; co < cout; ++co) {
                    for (std::size_t i = 0; i < oh; ++i) {
                        for (std::size_t j = 0; j < ow; ++j) {
                            double gv = g[((n * cout + co) * oh + i) * ow + j];
                            if (gv == 0.0) continue;
                            if (db) (*db)[co] += gv;
                            for (std::size_t ci = 0; ci < cin; ++ci) {
                                for (std::size_t ki = 0; ki < k; ++ki) {
                                    std::size_t xbase = ((n * cin + ci) * h + i + ki) * wid + j;
                                    std::size_t wbase = ((co * cin + ci) * k + ki) * k;
                                    for (std::size_t kj = 0; kj < k; ++kj) {
                                        if (dx) (*dx)[xbase + kj] += gv * iw->data[wbase + kj];
                                        if (dw) (*dw)[wbase + kj] += gv * ix->data[xbase + kj];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        };
    });
    return out;
}

}  // namespace codistill
