#include "cnet/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace cnet::layers {

Conv::Conv(int cin, int cout, int k, bool bias)
    : in_channels(cin), out_channels(cout), kernel(k), has_bias(bias),
      w(Shape{cout, cin, k, k}) {
    if (k % 2 != 1) throw std::invalid_argument("Conv: kernel size must be odd, got " + std::to_string(k));
    if (bias) b = Tensor(Shape{cout});
}

void Conv::init(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
    if (has_bias) b.fill(0.0);
}

Value Conv::forward(Tape& t, Value x) {
    Value wv = t.param(w, "conv.w");
    std::optional<Value> bv;
    if (has_bias) bv = t.param(b, "conv.b");
    return autograd::conv2d(t, x, wv, bv, 1, (kernel - 1) / 2);
}

void Conv::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, true});
    if (has_bias) out.push_back({prefix + ".b", &b, true});
}

BatchNorm::BatchNorm(int c)
    : channels(c), gamma(Shape{c}), beta(Shape{c}), running_mean(Shape{c}), running_var(Shape{c}) {
    init();
}

void BatchNorm::init() {
    gamma.fill(1.0);
    beta.fill(0.0);
    running_mean.fill(0.0);
    running_var.fill(1.0);
}

Value BatchNorm::forward(Tape& t, Value x, bool training) {
    Value g = t.param(gamma, "bn.gamma");
    Value bt = t.param(beta, "bn.beta");
    return autograd::batchnorm2d(t, x, g, bt, running_mean, running_var, eps, momentum, training);
}

void BatchNorm::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma, true});
    out.push_back({prefix + ".beta", &beta, true});
    out.push_back({prefix + ".running_mean", &running_mean, false});
    out.push_back({prefix + ".running_var", &running_var, false});
}

CompositeFunction::CompositeFunction(int cin, int cout, int k)
    : conv(cin, cout, k, /*bias=*/false), bn(cout) {}

void CompositeFunction::init(std::mt19937_64& rng) {
    conv.init(rng);
    bn.init();
}

Value CompositeFunction::forward(Tape& t, Value x, bool training) {
    return autograd::relu(t, bn.forward(t, conv.forward(t, x), training));
}

void CompositeFunction::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    conv.collect(out, prefix + ".conv");
    bn.collect(out, prefix + ".bn");
}

Bottleneck make_bottleneck(int cin, int cout) { return CompositeFunction(cin, cout, 1); }

PoolMode pool_mode_from_string(const std::string& s) {
    if (s == "max") return PoolMode::max;
    if (s == "avg") return PoolMode::avg;
    if (s == "both") return PoolMode::both;
    throw std::invalid_argument("invalid pooling mode '" + s + "' (expected max|avg|both)");
}

std::string pool_mode_name(PoolMode m) {
    switch (m) {
        case PoolMode::max: return "max";
        case PoolMode::avg: return "avg";
        default: return "both";
    }
}

int pooled_channels(PoolMode m, int c) { return m == PoolMode::both ? 2 * c : c; }

Value dual_pool_forward(Tape& t, Value x) {
    Value mx = autograd::max_pool2(t, x);
    Value av = autograd::avg_pool2(t, x);
    return autograd::concat_channels(t, {mx, av});
}

Value pooling_mode_forward(Tape& t, Value x, PoolMode mode) {
    switch (mode) {
        case PoolMode::max: return autograd::max_pool2(t, x);
        case PoolMode::avg: return autograd::avg_pool2(t, x);
        case PoolMode::both: return dual_pool_forward(t, x);
    }
    throw std::invalid_argument("pooling_mode_forward: invalid mode");
}

Value Dropout::forward(Tape& t, Value x, bool training, std::mt19937_64& rng) {
    return autograd::dropout(t, x, p, training, rng);
}

ClassifierHead::ClassifierHead(int in_c, int classes)
    : in_channels(in_c), num_classes(classes), w(Shape{in_c, classes}), b(Shape{classes}) {}

void ClassifierHead::init(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_channels));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
    b.fill(0.0);
}

Value ClassifierHead::forward(Tape& t, Value x) {
    Value pooled = autograd::global_avg_pool(t, x);
    return autograd::linear(t, pooled, t.param(w, "head.w"), t.param(b, "head.b"));
}

void ClassifierHead::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, true});
    out.push_back({prefix + ".b", &b, true});
}

}  // namespace cnet::layers
