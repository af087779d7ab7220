#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cnet/autograd.hpp"
#include "cnet/model.hpp"
#include "cnet/tensor.hpp"

namespace cnet::layers {

using autograd::Tape;
using autograd::Value;

// Plain convolution, stride 1, SAME padding (pad = (k-1)/2).
struct Conv {
    int in_channels = 0, out_channels = 0, kernel = 0;
    bool has_bias = true;
    Tensor w;  // (C_out, C_in, K, K)
    Tensor b;  // (C_out) when has_bias

    Conv() = default;
    Conv(int cin, int cout, int k, bool bias);
    void init(std::mt19937_64& rng);  // He fan-in scaling, zero bias
    Value forward(Tape& t, Value x);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int cin, int cout, int k, bool bias) {
        return static_cast<int64_t>(cout) * cin * k * k + (bias ? cout : 0);
    }
};

struct BatchNorm {
    int channels = 0;
    double eps = 1e-5, momentum = 0.1;
    Tensor gamma, beta, running_mean, running_var;

    BatchNorm() = default;
    explicit BatchNorm(int c);
    void init();  // gamma=1, beta=0, running mean 0 / var 1
    Value forward(Tape& t, Value x, bool training);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int c) { return 2LL * c; }
};

// conv -> batchnorm -> relu, stride 1, SAME padding: spatial dims preserved.
// The conv carries no bias; batchnorm's beta plays that role.
struct CompositeFunction {
    Conv conv;
    BatchNorm bn;

    CompositeFunction() = default;
    CompositeFunction(int cin, int cout, int k);
    void init(std::mt19937_64& rng);
    Value forward(Tape& t, Value x, bool training);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int cin, int cout, int k) {
        return Conv::param_count(cin, cout, k, false) + BatchNorm::param_count(cout);
    }
};

// 1x1 composite function used to cut channel width.
using Bottleneck = CompositeFunction;
Bottleneck make_bottleneck(int cin, int cout);

enum class PoolMode { max, avg, both };
PoolMode pool_mode_from_string(const std::string& s);
std::string pool_mode_name(PoolMode m);

// Channel width after pooling: `both` concatenates max and avg halves.
int pooled_channels(PoolMode m, int c);

// Fixed order: max-pool feature maps first, then avg-pool.
Value dual_pool_forward(Tape& t, Value x);
Value pooling_mode_forward(Tape& t, Value x, PoolMode mode);

struct Dropout {
    double p = 0.0;
    Value forward(Tape& t, Value x, bool training, std::mt19937_64& rng);
};

// Global average pool followed by a linear classifier. Keeps the head
// parameter count independent of input resolution.
struct ClassifierHead {
    int in_channels = 0, num_classes = 0;
    Tensor w;  // (D, K)
    Tensor b;  // (K)

    ClassifierHead() = default;
    ClassifierHead(int in_c, int classes);
    void init(std::mt19937_64& rng);
    Value forward(Tape& t, Value x);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int in_c, int classes) {
        return static_cast<int64_t>(in_c) * classes + classes;
    }
};

}  // namespace cnet::layers
