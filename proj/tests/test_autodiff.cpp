#include <cmath>

#include "doctest.h"

#include "codistill/error.hpp"
#include "codistill/gradcheck.hpp"
#include "codistill/ops.hpp"
#include "codistill/rng.hpp"
#include "codistill/tape.hpp"

using namespace codistill;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(data));
}

// Reverse-mode gradient of a tape-built scalar expression w.r.t. x.
std::vector<double> tape_gradient(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
    Tensor var = x.clone();
    var.set_requires_grad(true);
    TapeScope scope;
    Tensor loss = f(var);
    backward(loss);
    return {var.grad().begin(), var.grad().end()};
}

void check_against_fd(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
    std::vector<double> ad = tape_gradient(f, x);
    Tensor fd = finite_difference_gradient([&](const Tensor& t) { return f(t).item(); }, x, 1e-5);
    CHECK(gradients_close(ad, fd.values()));
}

}  // namespace

TEST_CASE("matmul forward oracles") {
    Tensor identity = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor r = matmul(identity, m);
    CHECK(r.values()[0] == 1);
    CHECK(r.values()[1] == 2);
    CHECK(r.values()[2] == 3);
    CHECK(r.values()[3] == 4);

    // 1x2 times 2x1, by hand: 1*3 + 2*4 = 11
    Tensor a = Tensor::from_data({1, 2}, {1, 2});
    Tensor b = Tensor::from_data({2, 1}, {3, 4});
    CHECK(matmul(a, b).item() == doctest::Approx(11.0));

    Tensor z = Tensor::zeros({2, 3});
    Rng rng(7);
    Tensor any = random_tensor(rng, {3, 2});
    for (double v : matmul(z, any).values()) CHECK(v == 0.0);

    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("elementwise forward oracles") {
    Tensor x = Tensor::from_data({2}, {0.5, 2.0});
    Tensor back = exp(log(x));
    CHECK(back.values()[0] == doctest::Approx(0.5));
    CHECK(back.values()[1] == doctest::Approx(2.0));

    Tensor s = scale(Tensor::from_data({2}, {2, 4}), 1.0 / 2.0);
    CHECK(s.values()[0] == 1.0);
    CHECK(s.values()[1] == 2.0);

    Tensor m = maximum(Tensor::from_data({2}, {0.6, 0.4}), Tensor::from_data({2}, {0.3, 0.7}));
    CHECK(m.values()[0] == 0.6);
    CHECK(m.values()[1] == 0.7);

    CHECK_THROWS_AS(log(Tensor::from_data({2}, {1.0, 0.0})), DomainError);
    CHECK_THROWS_AS(div(Tensor::from_data({2}, {1.0, 1.0}), Tensor::from_data({2}, {2.0, 0.0})),
                    DomainError);
    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
}

TEST_CASE("scalar broadcast in elementwise ops") {
    Tensor x = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor c = Tensor::scalar(10.0);
    Tensor r = add(x, c);
    CHECK(r.values()[3] == 14.0);
    Tensor r2 = sub(c, x);  // tensor-scalar the other way round
    CHECK(r2.shape() == Shape{2, 2});
    CHECK(r2.values()[0] == 9.0);

    // gradient flows to the scalar as a sum
    Tensor cc = Tensor::scalar(1.0);
    cc.set_requires_grad(true);
    TapeScope scope;
    Tensor loss = sum(mul(x, cc));
    backward(loss);
    CHECK(cc.grad()[0] == doctest::Approx(10.0));
}

TEST_CASE("reduce forward oracles") {
    CHECK(sum(Tensor::from_data({3}, {1, 2, 3})).item() == 6.0);
    CHECK(mean(Tensor::zeros({4})).item() == 0.0);

    Tensor m = Tensor::from_data({2, 2}, {1, 5, 7, 2});
    Tensor row_max = max_along_axis(m, 1);
    CHECK(row_max.values()[0] == 5.0);
    CHECK(row_max.values()[1] == 7.0);
    Tensor col_max = max_along_axis(m, 0);
    CHECK(col_max.values()[0] == 7.0);
    CHECK(col_max.values()[1] == 5.0);

    CHECK_THROWS_AS(sum(m, 2), ShapeError);
}

TEST_CASE("backward analytic oracles") {
    // loss = sum(x^2) -> grad 2x
    Tensor x = Tensor::from_data({3}, {1, 2, 3});
    x.set_requires_grad(true);
    {
        TapeScope scope;
        Tensor loss = sum(mul(x, x));
        backward(loss);
    }
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
    CHECK(x.grad()[2] == doctest::Approx(6.0));

    // loss = sum(x) -> grad all ones
    Tensor y = Tensor::from_data({4}, {5, -5, 2, 0});
    y.set_requires_grad(true);
    {
        TapeScope scope;
        backward(sum(y));
    }
    for (double g : y.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward from a constant is a tape error") {
    TapeScope scope;
    Tensor c = Tensor::scalar(3.0);
    CHECK_THROWS_AS(backward(c), TapeError);

    // same for a loss computed entirely from constants
    Tensor d = sum(mul(c, c));
    CHECK_THROWS_AS(backward(d), TapeError);
}

TEST_CASE("backward needs a scalar and an active tape") {
    Tensor x = Tensor::from_data({2}, {1, 2});
    x.set_requires_grad(true);
    {
        TapeScope scope;
        Tensor v = mul(x, x);
        CHECK_THROWS_AS(backward(v), ShapeError);
    }
    Tensor loss = Tensor::scalar(1.0);
    CHECK_THROWS_AS(backward(loss), TapeError);  // no active tape at all
}

TEST_CASE("gradient accumulation doubles on a second backward call") {
    Tensor x = Tensor::from_data({3}, {1, -2, 3});
    x.set_requires_grad(true);
    TapeScope scope;
    Tensor loss = sum(mul(x, x));
    backward(loss);
    std::vector<double> once(x.grad().begin(), x.grad().end());
    backward(loss);
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(x.grad()[i] == doctest::Approx(2.0 * once[i]));
    }
    x.zero_grad();
    for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("diamond-shaped graphs accumulate correctly") {
    // w = (x + 1) * (x + 2); dw/dx = (x + 2) + (x + 1)
    Tensor x = Tensor::scalar(3.0);
    x.set_requires_grad(true);
    TapeScope scope;
    Tensor w = mul(add(x, 1.0), add(x, 2.0));
    backward(w);
    CHECK(x.grad()[0] == doctest::Approx(9.0));
    CHECK(active_tape()->last_backward_stats().nodes_visited == 3);  // two adds + one mul
}

TEST_CASE("tape topological invariant after composed expressions") {
    Tensor x = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    x.set_requires_grad(true);
    TapeScope scope;
    Tensor y = sum(mul(exp(scale(x, 0.1)), add(x, 1.0)));
    backward(y);
    Tape* tape = active_tape();
    for (std::size_t i = 0; i < tape->size(); ++i) {
        for (std::size_t in : tape->node(i).inputs) CHECK(in < i);
    }
}

TEST_CASE("finite difference gradient oracles") {
    Tensor x = Tensor::from_data({2}, {1, -1});
    Tensor g = finite_difference_gradient(
        [](const Tensor& t) {
            double acc = 0;
            for (double v : t.values()) acc += v * v;
            return acc;
        },
        x, 1e-5);
    CHECK(std::abs(g.values()[0] - 2.0) < 1e-6);
    CHECK(std::abs(g.values()[1] + 2.0) < 1e-6);

    Tensor gc = finite_difference_gradient([](const Tensor&) { return 42.0; }, x, 1e-5);
    for (double v : gc.values()) CHECK(std::abs(v) < 1e-9);

    Tensor x1 = Tensor::from_data({1}, {3.0});
    Tensor gl = finite_difference_gradient(
        [](const Tensor& t) { return t.values()[0]; }, x1, 1e-4);
    CHECK(std::abs(gl.values()[0] - 1.0) < 1e-8);

    CHECK_THROWS_AS(finite_difference_gradient([](const Tensor&) { return 1.0; }, x, 0.0),
                    DomainError);
    CHECK_THROWS_AS(finite_difference_gradient(
                        [](const Tensor&) { return std::numeric_limits<double>::quiet_NaN(); }, x,
                        1e-5),
                    ValueError);
}

TEST_CASE("randomized gradcheck across every differentiable op") {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t rows = 1 + rng.uniform_index(8);
        std::size_t cols = 1 + rng.uniform_index(8);

        Tensor a = random_tensor(rng, {rows, cols});
        Tensor b = random_tensor(rng, {rows, cols}, 0.5, 2.5);  // positive: safe for div/log
        Tensor m = random_tensor(rng, {cols, rows});

        check_against_fd([&](const Tensor& t) { return sum(add(t, b)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(sub(t, b)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(mul(t, b)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(div(t, b)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(div(b, exp(t))); }, a);
        check_against_fd([&](const Tensor& t) { return sum(log(exp(t))); }, a);
        check_against_fd([&](const Tensor& t) { return sum(exp(scale(t, 0.5))); }, a);
        check_against_fd([&](const Tensor& t) { return mean(mul(t, t)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(matmul(t, m)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(mul(matmul(t, m), matmul(t, m))); }, a);
        check_against_fd([&](const Tensor& t) { return sum(sum(t, 0)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(mean(t, 1)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(reshape(t, Shape{cols, rows})); }, a);
        // max against a shifted copy; ties have measure zero on random input
        check_against_fd([&](const Tensor& t) { return sum(maximum(t, add(b, -1.0))); }, a);
        check_against_fd([&](const Tensor& t) { return sum(maximum(t, 0.1)); }, a);
        check_against_fd([&](const Tensor& t) { return sum(max_along_axis(t, 1)); }, a);
    }
}

TEST_CASE("conv2d gradcheck") {
    Rng rng(9);
    Tensor x = random_tensor(rng, {2, 2, 5, 5});
    Tensor w = random_tensor(rng, {3, 2, 3, 3});
    Tensor b = random_tensor(rng, {3});

    Tensor out = conv2d(x, w, b);
    CHECK(out.shape() == Shape{2, 3, 3, 3});

    // hand check one entry: 1x1x2x2 input, 1x1x2x2 kernel
    Tensor hx = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor hw = Tensor::from_data({1, 1, 2, 2}, {10, 20, 30, 40});
    Tensor hb = Tensor::from_data({1}, {0.5});
    CHECK(conv2d(hx, hw, hb).item() == doctest::Approx(1 * 10 + 2 * 20 + 3 * 30 + 4 * 40 + 0.5));

    check_against_fd([&](const Tensor& t) { return sum(mul(conv2d(t, w, b), conv2d(t, w, b))); }, x);
    check_against_fd([&](const Tensor& t) { return sum(conv2d(x, t, b)); }, w);
    check_against_fd([&](const Tensor& t) { return sum(conv2d(x, w, t)); }, b);
}

TEST_CASE("detach blocks gradient flow") {
    Tensor x = Tensor::from_data({2}, {1, 2});
    x.set_requires_grad(true);
    TapeScope scope;
    Tensor d = detach(mul(x, x));
    CHECK_FALSE(d.requires_grad());
    Tensor loss = sum(mul(d, x));  // only the direct x factor is live
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(1.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("ops without an active tape run in eval mode") {
    Tensor x = Tensor::from_data({2}, {1, 2});
    x.set_requires_grad(true);
    Tensor y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
    CHECK_FALSE(x.has_grad());
}

TEST_CASE("forward results stay finite for bounded inputs") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor z = random_tensor(rng, {4, 5}, -50.0, 50.0);
        // softmax-style pipeline with max subtraction, the stabilization used
        // by every consumer of exp in this library
        Tensor shifted =
            sub(z, matmul(reshape(max_along_axis(z, 1), Shape{4, 1}), Tensor::full({1, 5}, 1.0)));
        Tensor e = exp(shifted);
        Tensor denom = matmul(reshape(sum(e, 1), Shape{4, 1}), Tensor::full({1, 5}, 1.0));
        Tensor probs = div(e, denom);
        CHECK(probs.all_finite());
    }
}
