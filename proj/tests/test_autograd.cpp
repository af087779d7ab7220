#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cnet/autograd.hpp"
#include "oracles.hpp"

using namespace cnet;
using autograd::Tape;
using autograd::Value;
using oracles::fd_grad;
using oracles::max_abs_diff;
using oracles::random_tensor;
using oracles::rel_err;

TEST_CASE("fan-out accumulates adjoints: d(x+x)/dx = 2") {
    Tensor x = Tensor::full(Shape{1, 1, 1, 1}, 3.0);
    Tape t;
    Value vx = t.param(x, "x");
    Value y = autograd::add(t, vx, vx);
    Value loss = autograd::sum(t, y);
    t.backward(loss);
    CHECK(t.grad(vx).item() == 2.0);
}

TEST_CASE("param dedup: the same tensor registered twice is one node") {
    Tensor w = Tensor::full(Shape{1, 1, 1, 1}, 2.0);
    Tape t;
    Value v1 = t.param(w, "w");
    Value v2 = t.param(w, "w-again");
    CHECK(v1.id == v2.id);
    Value y = autograd::add(t, v1, v2);
    t.backward(autograd::sum(t, y));
    CHECK(t.grad_for(&w)->item() == 2.0);
}

TEST_CASE("backward requires a scalar loss") {
    Tensor x = Tensor::full(Shape{2, 2}, 1.0);
    Tape t;
    Value vx = t.leaf(x, "x");
    CHECK_THROWS(t.backward(vx));
}

TEST_CASE("tape gradients of a conv-bn-relu-pool stack match finite differences") {
    std::mt19937_64 rng(30);
    Tensor x = random_tensor(Shape{2, 2, 4, 4}, rng);
    Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng, -0.5, 0.5);
    Tensor gamma = random_tensor(Shape{3}, rng, 0.5, 1.5);
    Tensor beta = random_tensor(Shape{3}, rng, -0.2, 0.2);
    Tensor rm = Tensor::zeros(Shape{3}), rv = Tensor::full(Shape{3}, 1.0);

    auto run = [&](Tape& t) {
        Tensor rm_copy = rm, rv_copy = rv;  // keep stats fixed across FD probes
        Value vx = t.param(x, "x");
        Value vw = t.param(w, "w");
        Value vg = t.param(gamma, "gamma");
        Value vb = t.param(beta, "beta");
        Value h = autograd::conv2d(t, vx, vw, std::nullopt, 1, 1);
        h = autograd::batchnorm2d(t, h, vg, vb, rm_copy, rv_copy, 1e-5, 0.1, true);
        h = autograd::relu(t, h);
        h = autograd::max_pool2(t, h);
        h = autograd::avg_pool2(t, h);
        h = autograd::global_avg_pool(t, h);
        return autograd::sum(t, h);
    };
    auto objective = [&]() {
        Tape t;
        Value loss = run(t);
        return t.value(loss).item();
    };

    Tape t;
    t.backward(run(t));
    std::uniform_int_distribution<int64_t> pick_x(0, x.size() - 1), pick_w(0, w.size() - 1);
    for (int trial = 0; trial < 8; ++trial) {
        // The fixed seed keeps every probe clear of ReLU / argmax kinks.
        const int64_t ix = pick_x(rng);
        CHECK(rel_err((*t.grad_for(&x))[ix], fd_grad(x, ix, objective)) < 1e-5);
        const int64_t iw = pick_w(rng);
        CHECK(rel_err((*t.grad_for(&w))[iw], fd_grad(w, iw, objective)) < 1e-5);
    }
    for (int64_t c = 0; c < 3; ++c) {
        CHECK(rel_err((*t.grad_for(&gamma))[c], fd_grad(gamma, c, objective)) < 1e-5);
        CHECK(rel_err((*t.grad_for(&beta))[c], fd_grad(beta, c, objective)) < 1e-5);
    }
}

TEST_CASE("concat routes gradient slices back to the right inputs") {
    std::mt19937_64 rng(31);
    Tensor a = random_tensor(Shape{1, 2, 2, 2}, rng);
    Tensor b = random_tensor(Shape{1, 3, 2, 2}, rng);
    Tape t;
    Value va = t.param(a, "a");
    Value vb = t.param(b, "b");
    Value cat = autograd::concat_channels(t, {va, vb});
    // Loss weights distinguish the two halves.
    Tensor gy{t.value(cat).shape()};
    for (int64_t i = 0; i < gy.size(); ++i) gy[i] = static_cast<double>(i + 1);
    Value loss = t.record("weighted_sum", {cat}, Tensor::scalar([&] {
        double s = 0.0;
        for (int64_t i = 0; i < gy.size(); ++i) s += gy[i] * t.value(cat)[i];
        return s;
    }()), [&, cat](Tape& tp, const Tensor& gout) {
        Tensor g = gy;
        for (int64_t i = 0; i < g.size(); ++i) g[i] *= gout.item();
        tp.accumulate(cat, g);
    });
    t.backward(loss);
    const Tensor& ga = *t.grad_for(&a);
    const Tensor& gb = *t.grad_for(&b);
    for (int64_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == gy[i]);
    for (int64_t i = 0; i < gb.size(); ++i) CHECK(gb[i] == gy[ga.size() + i]);
}

TEST_CASE("dropout is identity in eval and an inverted-scale mask in train") {
    std::mt19937_64 rng(32);
    Tensor x = random_tensor(Shape{1, 4, 8, 8}, rng, 0.5, 1.5);
    {
        Tape t;
        Value v = autograd::dropout(t, t.leaf(x, "x"), 0.5, /*training=*/false, rng);
        CHECK(max_abs_diff(t.value(v), x) == 0.0);
    }
    Tape t;
    Value vx = t.param(x, "x");
    Value v = autograd::dropout(t, vx, 0.5, /*training=*/true, rng);
    const Tensor& y = t.value(v);
    int kept = 0;
    for (int64_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0) {
            ++kept;
            CHECK(y[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-14));
        }
    }
    CHECK(kept > 0);
    CHECK(kept < y.size());
    t.backward(autograd::sum(t, v));
    const Tensor& g = *t.grad_for(&x);
    for (int64_t i = 0; i < y.size(); ++i) CHECK(g[i] == (y[i] != 0.0 ? 2.0 : 0.0));
}

TEST_CASE("softmax_cross_entropy through the tape matches finite differences") {
    std::mt19937_64 rng(33);
    Tensor logits = random_tensor(Shape{3, 4}, rng);
    std::vector<int> labels{0, 2, 3};
    auto objective = [&]() {
        Tape t;
        Value loss = autograd::softmax_cross_entropy(t, t.param(logits, "z"), labels);
        return t.value(loss).item();
    };
    Tape t;
    Value vz = t.param(logits, "z");
    t.backward(autograd::softmax_cross_entropy(t, vz, labels));
    for (int64_t i = 0; i < logits.size(); ++i)
        CHECK(rel_err(t.grad(vz)[i], fd_grad(logits, i, objective)) < 1e-7);
}

// Negative control: a deliberately wrong backward must be caught by the
// finite-difference comparison, otherwise the whole methodology is moot.
TEST_CASE("finite differences expose a corrupted backward") {
    std::mt19937_64 rng(34);
    Tensor x = random_tensor(Shape{2, 2}, rng, 0.5, 1.5);
    auto square_sum = [](const Tensor& t) {
        double s = 0.0;
        for (int64_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        return s;
    };
    Tape t;
    Value vx = t.param(x, "x");
    Value loss = t.record("bad_square_sum", {vx}, Tensor::scalar(square_sum(x)),
                          [vx, &x](Tape& tp, const Tensor& gout) {
                              Tensor g{x.shape()};
                              // Wrong: d(x^2)/dx recorded as 3x instead of 2x.
                              for (int64_t i = 0; i < g.size(); ++i) g[i] = 3.0 * x[i] * gout.item();
                              tp.accumulate(vx, g);
                          });
    t.backward(loss);
    auto objective = [&]() { return square_sum(x); };
    double worst = 0.0;
    for (int64_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, rel_err(t.grad(vx)[i], fd_grad(x, i, objective)));
    CHECK(worst > 1e-2);  // far beyond any FD noise
}
