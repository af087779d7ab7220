#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cnet/kernels.hpp"
#include "cnet/parallel.hpp"
#include "cnet/tensor.hpp"
#include "oracles.hpp"

using namespace cnet;
using oracles::direct_avg_pool2;
using oracles::direct_conv2d;
using oracles::direct_max_pool2;
using oracles::fd_grad;
using oracles::max_abs_diff;
using oracles::random_tensor;
using oracles::rel_err;

TEST_CASE("shape numel and accessors") {
    Shape s{2, 3, 4, 5};
    CHECK(s.numel() == 120);
    CHECK(s.rank() == 4);
    CHECK(s.str() == "(2,3,4,5)");
    Tensor t{s};
    t.at4(1, 2, 3, 4) = 7.0;
    CHECK(t[119] == 7.0);
    CHECK(t.size() == 120);
}

TEST_CASE("check_finite rejects NaN and Inf") {
    Tensor t{Shape{2}};
    t[0] = 1.0;
    CHECK_NOTHROW(check_finite(t, "ok"));
    t[1] = std::nan("");
    CHECK_THROWS(check_finite(t, "bad"));
}

TEST_CASE("conv2d matches the direct convolution sum") {
    std::mt19937_64 rng(10);
    for (int k : {1, 3, 5, 7}) {
        for (int stride : {1, 2}) {
            const int pad = (k - 1) / 2;
            Tensor x = random_tensor(Shape{2, 3, 9, 9}, rng);
            Tensor w = random_tensor(Shape{4, 3, k, k}, rng);
            Tensor b = random_tensor(Shape{4}, rng);
            CHECK(max_abs_diff(kernels::conv2d(x, w, &b, stride, pad), direct_conv2d(x, w, &b, stride, pad)) <
                  1e-12);
            CHECK(max_abs_diff(kernels::conv2d(x, w, nullptr, stride, pad),
                               direct_conv2d(x, w, nullptr, stride, pad)) < 1e-12);
        }
    }
}

TEST_CASE("conv2d is identical for any thread count") {
    std::mt19937_64 rng(11);
    Tensor x = random_tensor(Shape{5, 3, 8, 8}, rng);
    Tensor w = random_tensor(Shape{6, 3, 3, 3}, rng);
    Tensor y1 = kernels::conv2d(x, w, nullptr, 1, 1);
    set_num_threads(4);
    Tensor y4 = kernels::conv2d(x, w, nullptr, 1, 1);
    set_num_threads(1);
    CHECK(max_abs_diff(y1, y4) == 0.0);
}

TEST_CASE("conv2d_backward matches finite differences") {
    std::mt19937_64 rng(12);
    Tensor x = random_tensor(Shape{2, 2, 5, 5}, rng);
    Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng);
    Tensor b = random_tensor(Shape{3}, rng);
    // Scalar objective: weighted sum of outputs so gy is nontrivial.
    Tensor gy = random_tensor(Shape{2, 3, 5, 5}, rng);
    auto objective = [&]() {
        Tensor y = kernels::conv2d(x, w, &b, 1, 1);
        double s = 0.0;
        for (int64_t i = 0; i < y.size(); ++i) s += y[i] * gy[i];
        return s;
    };
    kernels::ConvGrads g = kernels::conv2d_backward(gy, x, w, 1, 1, true);
    std::uniform_int_distribution<int64_t> pick_x(0, x.size() - 1), pick_w(0, w.size() - 1);
    for (int trial = 0; trial < 10; ++trial) {
        const int64_t ix = pick_x(rng);
        CHECK(rel_err(g.gx[ix], fd_grad(x, ix, objective)) < 1e-6);
        const int64_t iw = pick_w(rng);
        CHECK(rel_err(g.gw[iw], fd_grad(w, iw, objective)) < 1e-6);
    }
    for (int64_t ib = 0; ib < b.size(); ++ib) CHECK(rel_err(g.gb[ib], fd_grad(b, ib, objective)) < 1e-6);
}

TEST_CASE("pooling matches the window-scan oracle") {
    std::mt19937_64 rng(13);
    Tensor x = random_tensor(Shape{3, 4, 6, 8}, rng);
    CHECK(max_abs_diff(kernels::max_pool2(x).y, direct_max_pool2(x)) == 0.0);
    CHECK(max_abs_diff(kernels::avg_pool2(x), direct_avg_pool2(x)) < 1e-15);
}

TEST_CASE("max_pool2 backward routes gradient to the argmax only") {
    Tensor x{Shape{1, 1, 2, 2}};
    x[0] = 1.0; x[1] = 5.0; x[2] = 2.0; x[3] = 3.0;
    auto res = kernels::max_pool2(x);
    CHECK(res.y.item() == 5.0);
    Tensor gy{Shape{1, 1, 1, 1}};
    gy[0] = 2.5;
    Tensor gx = kernels::max_pool2_backward(gy, res.argmax, x.shape());
    CHECK(gx[0] == 0.0);
    CHECK(gx[1] == 2.5);
    CHECK(gx[2] == 0.0);
    CHECK(gx[3] == 0.0);
}

TEST_CASE("avg_pool2 backward spreads gradient uniformly") {
    Tensor gy{Shape{1, 1, 1, 1}};
    gy[0] = 4.0;
    Tensor gx = kernels::avg_pool2_backward(gy, Shape{1, 1, 2, 2});
    for (int64_t i = 0; i < 4; ++i) CHECK(gx[i] == 1.0);
}

TEST_CASE("global_avg_pool means over space and its backward inverts that") {
    std::mt19937_64 rng(14);
    Tensor x = random_tensor(Shape{2, 3, 4, 4}, rng);
    Tensor y = kernels::global_avg_pool(x);
    CHECK(y.shape() == Shape{2, 3});
    double want = 0.0;
    for (int i = 0; i < 16; ++i) want += x.at4(1, 2, i / 4, i % 4);
    CHECK(y.at2(1, 2) == doctest::Approx(want / 16.0).epsilon(1e-14));

    Tensor gy = random_tensor(Shape{2, 3}, rng);
    Tensor gx = kernels::global_avg_pool_backward(gy, x.shape());
    CHECK(gx.at4(1, 2, 0, 0) == doctest::Approx(gy.at2(1, 2) / 16.0).epsilon(1e-14));
}

TEST_CASE("batchnorm training normalizes with biased batch statistics") {
    std::mt19937_64 rng(15);
    Tensor x = random_tensor(Shape{4, 2, 3, 3}, rng);
    Tensor gamma = Tensor::full(Shape{2}, 1.0), beta = Tensor::zeros(Shape{2});
    Tensor rm = Tensor::zeros(Shape{2}), rv = Tensor::full(Shape{2}, 1.0);
    auto res = kernels::batchnorm2d(x, gamma, beta, rm, rv, 1e-5, 0.1, true);

    const int m = 4 * 3 * 3;
    for (int c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0, ymean = 0.0, yvar = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int p = 0; p < 9; ++p) {
                mean += x.at4(i, c, p / 3, p % 3);
                ymean += res.y.at4(i, c, p / 3, p % 3);
            }
        mean /= m;
        ymean /= m;
        for (int i = 0; i < 4; ++i)
            for (int p = 0; p < 9; ++p) {
                var += std::pow(x.at4(i, c, p / 3, p % 3) - mean, 2);
                yvar += std::pow(res.y.at4(i, c, p / 3, p % 3) - ymean, 2);
            }
        var /= m;   // biased
        yvar /= m;
        CHECK(ymean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(yvar == doctest::Approx(1.0).epsilon(1e-3));  // eps slightly shrinks it
        // r = (1-momentum)*r + momentum*batch with fresh r=0 / r=1.
        CHECK(rm[c] == doctest::Approx(0.1 * mean).epsilon(1e-12));
        CHECK(rv[c] == doctest::Approx(0.9 + 0.1 * var).epsilon(1e-12));
    }
}

TEST_CASE("batchnorm eval uses running statistics and matches FD backward") {
    std::mt19937_64 rng(16);
    Tensor x = random_tensor(Shape{2, 2, 3, 3}, rng);
    Tensor gamma = random_tensor(Shape{2}, rng, 0.5, 1.5);
    Tensor beta = random_tensor(Shape{2}, rng);
    Tensor rm = random_tensor(Shape{2}, rng), rv = random_tensor(Shape{2}, rng, 0.5, 2.0);
    Tensor gy = random_tensor(Shape{2, 2, 3, 3}, rng);

    for (bool training : {true, false}) {
        Tensor rm2 = rm, rv2 = rv;
        auto objective = [&]() {
            Tensor a = rm, b = rv;  // keep running stats unchanged between probes
            auto res = kernels::batchnorm2d(x, gamma, beta, a, b, 1e-5, 0.1, training);
            double s = 0.0;
            for (int64_t i = 0; i < res.y.size(); ++i) s += res.y[i] * gy[i];
            return s;
        };
        auto res = kernels::batchnorm2d(x, gamma, beta, rm2, rv2, 1e-5, 0.1, training);
        auto g = kernels::batchnorm2d_backward(gy, res, gamma, training);
        std::uniform_int_distribution<int64_t> pick(0, x.size() - 1);
        for (int trial = 0; trial < 8; ++trial) {
            const int64_t i = pick(rng);
            CHECK(rel_err(g.gx[i], fd_grad(x, i, objective)) < 1e-6);
        }
        for (int64_t c = 0; c < 2; ++c) {
            CHECK(rel_err(g.ggamma[c], fd_grad(gamma, c, objective)) < 1e-6);
            CHECK(rel_err(g.gbeta[c], fd_grad(beta, c, objective)) < 1e-6);
        }
    }
}

TEST_CASE("concat_channels and split_channels are inverses") {
    std::mt19937_64 rng(17);
    Tensor a = random_tensor(Shape{2, 3, 4, 4}, rng);
    Tensor b = random_tensor(Shape{2, 5, 4, 4}, rng);
    Tensor cat = kernels::concat_channels({&a, &b});
    CHECK(cat.shape() == Shape{2, 8, 4, 4});
    CHECK(cat.at4(1, 2, 3, 3) == a.at4(1, 2, 3, 3));
    CHECK(cat.at4(1, 5, 0, 1) == b.at4(1, 2, 0, 1));
    auto parts = kernels::split_channels(cat, {3, 5});
    CHECK(max_abs_diff(parts[0], a) == 0.0);
    CHECK(max_abs_diff(parts[1], b) == 0.0);
}

TEST_CASE("linear matches a hand computation and FD backward") {
    std::mt19937_64 rng(18);
    Tensor x = random_tensor(Shape{3, 4}, rng);
    Tensor w = random_tensor(Shape{4, 2}, rng);
    Tensor b = random_tensor(Shape{2}, rng);
    Tensor y = kernels::linear(x, w, b);
    double want = b[1];
    for (int d = 0; d < 4; ++d) want += x.at2(2, d) * w.at2(d, 1);
    CHECK(y.at2(2, 1) == doctest::Approx(want).epsilon(1e-14));

    Tensor gy = random_tensor(Shape{3, 2}, rng);
    auto objective = [&]() {
        Tensor o = kernels::linear(x, w, b);
        double s = 0.0;
        for (int64_t i = 0; i < o.size(); ++i) s += o[i] * gy[i];
        return s;
    };
    auto g = kernels::linear_backward(gy, x, w);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(rel_err(g.gx[i], fd_grad(x, i, objective)) < 1e-7);
    for (int64_t i = 0; i < w.size(); ++i) CHECK(rel_err(g.gw[i], fd_grad(w, i, objective)) < 1e-7);
    for (int64_t i = 0; i < b.size(); ++i) CHECK(rel_err(g.gb[i], fd_grad(b, i, objective)) < 1e-7);
}

TEST_CASE("softmax rows sum to one and shift invariance holds") {
    std::mt19937_64 rng(19);
    Tensor logits = random_tensor(Shape{4, 6}, rng, -30.0, 30.0);
    Tensor p = kernels::softmax(logits);
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int k = 0; k < 6; ++k) s += p.at2(i, k);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    Tensor shifted = logits;
    for (int k = 0; k < 6; ++k) shifted.at2(0, k) += 1000.0;
    Tensor p2 = kernels::softmax(shifted);
    for (int k = 0; k < 6; ++k) CHECK(p2.at2(0, k) == doctest::Approx(p.at2(0, k)).epsilon(1e-12));
}

TEST_CASE("cross entropy equals -log p of the true class and FD matches backward") {
    std::mt19937_64 rng(20);
    Tensor logits = random_tensor(Shape{3, 5}, rng);
    std::vector<int> labels{1, 4, 0};
    auto res = kernels::softmax_cross_entropy(logits, labels);
    Tensor p = kernels::softmax(logits);
    double want = 0.0;
    for (int i = 0; i < 3; ++i) want -= std::log(p.at2(i, labels[static_cast<size_t>(i)]));
    CHECK(res.loss == doctest::Approx(want / 3.0).epsilon(1e-12));

    auto objective = [&]() { return kernels::softmax_cross_entropy(logits, labels).loss; };
    Tensor g = kernels::softmax_cross_entropy_backward(1.0, res.probs, labels);
    for (int64_t i = 0; i < logits.size(); ++i) CHECK(rel_err(g[i], fd_grad(logits, i, objective)) < 1e-7);
}
