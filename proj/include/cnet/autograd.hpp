#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "cnet/kernels.hpp"
#include "cnet/tensor.hpp"

// Dynamic reverse-mode tape. One tape per forward pass; backward walks the
// node list in strictly decreasing id order and sums adjoints over fan-out.

namespace cnet::autograd {

class Tape;

struct Value {
    const Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

using BackwardFn = std::function<void(Tape&, const Tensor& gout)>;

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Constant input (no gradient tracked beyond accumulation).
    Value leaf(Tensor v, std::string name = "");

    // Parameter leaf. The same Tensor address registered twice returns the
    // existing node, so shared weights accumulate gradients correctly.
    Value param(Tensor& p, const std::string& name);

    // Appends a node computed from `inputs`; `back` receives the adjoint of
    // this node and must push adjoints to the inputs via accumulate().
    Value record(std::string op, const std::vector<Value>& inputs, Tensor value, BackwardFn back);

    const Tensor& value(Value v) const;
    int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

    // Reverse sweep from a scalar loss node.
    void backward(Value loss);

    bool has_grad(Value v) const;
    const Tensor& grad(Value v) const;
    const Tensor* grad_for(const Tensor* param) const;  // nullptr when absent

    void accumulate(Value v, const Tensor& g);

private:
    struct Node {
        std::string op;
        std::vector<int> inputs;
        Tensor value;
        BackwardFn back;
    };

    int check(Value v, const char* ctx) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::unordered_map<const Tensor*, int> param_ids_;
};

// --- recorded operations --------------------------------------------------

Value conv2d(Tape& t, Value x, Value w, std::optional<Value> bias, int stride, int pad);
Value max_pool2(Tape& t, Value x);
Value avg_pool2(Tape& t, Value x);
Value global_avg_pool(Tape& t, Value x);
Value batchnorm2d(Tape& t, Value x, Value gamma, Value beta,
                  Tensor& running_mean, Tensor& running_var,
                  double eps, double momentum, bool training);
Value relu(Tape& t, Value x);
Value add(Tape& t, Value a, Value b);
Value concat_channels(Tape& t, const std::vector<Value>& xs);
Value linear(Tape& t, Value x, Value w, Value b);
// Inverted dropout: scales kept entries by 1/(1-p) in training, identity in eval.
Value dropout(Tape& t, Value x, double p, bool training, std::mt19937_64& rng);
Value softmax_cross_entropy(Tape& t, Value logits, std::vector<int> labels);
Value sum(Tape& t, Value x);

}  // namespace cnet::autograd
