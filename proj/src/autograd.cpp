#include "cnet/autograd.hpp"

#include <memory>
#include <stdexcept>

#include "cnet/simd.hpp"

namespace cnet::autograd {

int Tape::check(Value v, const char* ctx) const {
    if (!v.valid()) throw std::invalid_argument(std::string(ctx) + ": invalid value handle");
    if (v.tape != this) throw std::invalid_argument(std::string(ctx) + ": value belongs to a different tape");
    if (v.id >= static_cast<int>(nodes_.size())) throw std::invalid_argument(std::string(ctx) + ": node id out of range");
    return v.id;
}

Value Tape::leaf(Tensor v, std::string name) {
    nodes_.push_back(Node{name.empty() ? "leaf" : std::move(name), {}, std::move(v), nullptr});
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::param(Tensor& p, const std::string& name) {
    auto it = param_ids_.find(&p);
    if (it != param_ids_.end()) return Value{this, it->second};
    Value v = leaf(p, name.empty() ? "param" : name);
    param_ids_[&p] = v.id;
    return v;
}

Value Tape::record(std::string op, const std::vector<Value>& inputs, Tensor value, BackwardFn back) {
    Node node;
    node.op = std::move(op);
    for (Value in : inputs) node.inputs.push_back(check(in, node.op.c_str()));
    node.value = std::move(value);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Value v) const { return nodes_[static_cast<size_t>(check(v, "value"))].value; }

void Tape::accumulate(Value v, const Tensor& g) {
    const int id = check(v, "accumulate");
    if (g.shape() != nodes_[static_cast<size_t>(id)].value.shape())
        throw std::invalid_argument("accumulate: adjoint shape " + g.shape().str() + " does not match node value " +
                                    nodes_[static_cast<size_t>(id)].value.shape().str());
    Tensor& slot = grads_[static_cast<size_t>(id)];
    if (slot.empty()) {
        slot = g;
    } else {
        simd::ops().axpy(static_cast<int>(g.size()), 1.0, g.data(), slot.data());
    }
}

void Tape::backward(Value loss) {
    const int id = check(loss, "backward");
    if (nodes_[static_cast<size_t>(id)].value.size() != 1)
        throw std::invalid_argument("backward: loss node must be scalar, got shape " +
                                    nodes_[static_cast<size_t>(id)].value.shape().str());
    grads_.assign(nodes_.size(), Tensor());
    grads_[static_cast<size_t>(id)] = Tensor::full(nodes_[static_cast<size_t>(id)].value.shape(), 1.0);
    for (int i = id; i >= 0; --i) {
        Node& node = nodes_[static_cast<size_t>(i)];
        if (!node.back || grads_[static_cast<size_t>(i)].empty()) continue;
        node.back(*this, grads_[static_cast<size_t>(i)]);
    }
}

bool Tape::has_grad(Value v) const {
    const int id = check(v, "has_grad");
    return id < static_cast<int>(grads_.size()) && !grads_[static_cast<size_t>(id)].empty();
}

const Tensor& Tape::grad(Value v) const {
    const int id = check(v, "grad");
    if (!has_grad(v)) throw std::runtime_error("grad: no gradient recorded for node " + std::to_string(id));
    return grads_[static_cast<size_t>(id)];
}

const Tensor* Tape::grad_for(const Tensor* param) const {
    auto it = param_ids_.find(param);
    if (it == param_ids_.end()) return nullptr;
    const auto id = static_cast<size_t>(it->second);
    if (id >= grads_.size() || grads_[id].empty()) return nullptr;
    return &grads_[id];
}

// --- ops --------------------------------------------------------------------

Value conv2d(Tape& t, Value x, Value w, std::optional<Value> bias, int stride, int pad) {
    Tensor y = kernels::conv2d(t.value(x), t.value(w), bias ? &t.value(*bias) : nullptr, stride, pad);
    std::vector<Value> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    auto back = [x, w, bias, stride, pad, has_bias](Tape& tp, const Tensor& gout) {
        auto g = kernels::conv2d_backward(gout, tp.value(x), tp.value(w), stride, pad, has_bias);
        tp.accumulate(x, g.gx);
        tp.accumulate(w, g.gw);
        if (has_bias) tp.accumulate(*bias, g.gb);
    };
    return t.record("conv2d", inputs, std::move(y), std::move(back));
}

Value max_pool2(Tape& t, Value x) {
    auto r = std::make_shared<kernels::MaxPoolResult>(kernels::max_pool2(t.value(x)));
    Tensor y = r->y;
    Shape in_shape = t.value(x).shape();
    auto back = [x, r, in_shape](Tape& tp, const Tensor& gout) {
        tp.accumulate(x, kernels::max_pool2_backward(gout, r->argmax, in_shape));
    };
    return t.record("max_pool2", {x}, std::move(y), std::move(back));
}

Value avg_pool2(Tape& t, Value x) {
    Tensor y = kernels::avg_pool2(t.value(x));
    Shape in_shape = t.value(x).shape();
    auto back = [x, in_shape](Tape& tp, const Tensor& gout) {
        tp.accumulate(x, kernels::avg_pool2_backward(gout, in_shape));
    };
    return t.record("avg_pool2", {x}, std::move(y), std::move(back));
}

Value global_avg_pool(Tape& t, Value x) {
    Tensor y = kernels::global_avg_pool(t.value(x));
    Shape in_shape = t.value(x).shape();
    auto back = [x, in_shape](Tape& tp, const Tensor& gout) {
        tp.accumulate(x, kernels::global_avg_pool_backward(gout, in_shape));
    };
    return t.record("global_avg_pool", {x}, std::move(y), std::move(back));
}

Value batchnorm2d(Tape& t, Value x, Value gamma, Value beta,
                  Tensor& running_mean, Tensor& running_var,
                  double eps, double momentum, bool training) {
    auto ctx = std::make_shared<kernels::BatchNormResult>(
        kernels::batchnorm2d(t.value(x), t.value(gamma), t.value(beta), running_mean, running_var,
                             eps, momentum, training));
    Tensor y = ctx->y;
    auto back = [x, gamma, beta, ctx, training](Tape& tp, const Tensor& gout) {
        auto g = kernels::batchnorm2d_backward(gout, *ctx, tp.value(gamma), training);
        tp.accumulate(x, g.gx);
        tp.accumulate(gamma, g.ggamma);
        tp.accumulate(beta, g.gbeta);
    };
    return t.record("batchnorm2d", {x, gamma, beta}, std::move(y), std::move(back));
}

Value relu(Tape& t, Value x) {
    Tensor y = kernels::relu(t.value(x));
    auto back = [x](Tape& tp, const Tensor& gout) {
        tp.accumulate(x, kernels::relu_backward(gout, tp.value(x)));
    };
    return t.record("relu", {x}, std::move(y), std::move(back));
}

Value add(Tape& t, Value a, Value b) {
    Tensor y = kernels::add(t.value(a), t.value(b));
    auto back = [a, b](Tape& tp, const Tensor& gout) {
        tp.accumulate(a, gout);
        tp.accumulate(b, gout);
    };
    return t.record("add", {a, b}, std::move(y), std::move(back));
}

Value concat_channels(Tape& t, const std::vector<Value>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
    std::vector<const Tensor*> ptrs;
    std::vector<int> widths;
    for (Value v : xs) {
        ptrs.push_back(&t.value(v));
        widths.push_back(t.value(v).dim(1));
    }
    Tensor y = kernels::concat_channels(ptrs);
    auto inputs = xs;
    auto back = [inputs, widths](Tape& tp, const Tensor& gout) {
        auto parts = kernels::split_channels(gout, widths);
        for (size_t i = 0; i < inputs.size(); ++i) tp.accumulate(inputs[i], parts[i]);
    };
    return t.record("concat_channels", xs, std::move(y), std::move(back));
}

Value linear(Tape& t, Value x, Value w, Value b) {
    Tensor y = kernels::linear(t.value(x), t.value(w), t.value(b));
    auto back = [x, w, b](Tape& tp, const Tensor& gout) {
        auto g = kernels::linear_backward(gout, tp.value(x), tp.value(w));
        tp.accumulate(x, g.gx);
        tp.accumulate(w, g.gw);
        tp.accumulate(b, g.gb);
    };
    return t.record("linear", {x, w, b}, std::move(y), std::move(back));
}

Value dropout(Tape& t, Value x, double p, bool training, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
    const Tensor& in = t.value(x);
    if (!training || p == 0.0) {
        auto back = [x](Tape& tp, const Tensor& gout) { tp.accumulate(x, gout); };
        return t.record("dropout", {x}, in, std::move(back));
    }
    auto mask = std::make_shared<Tensor>(in.shape());
    std::bernoulli_distribution keep(1.0 - p);
    const double scale = 1.0 / (1.0 - p);
    Tensor y(in.shape());
    for (int64_t i = 0; i < in.size(); ++i) {
        (*mask)[i] = keep(rng) ? scale : 0.0;
        y[i] = in[i] * (*mask)[i];
    }
    auto back = [x, mask](Tape& tp, const Tensor& gout) {
        Tensor gx(gout.shape());
        for (int64_t i = 0; i < gout.size(); ++i) gx[i] = gout[i] * (*mask)[i];
        tp.accumulate(x, gx);
    };
    return t.record("dropout", {x}, std::move(y), std::move(back));
}

Value softmax_cross_entropy(Tape& t, Value logits, std::vector<int> labels) {
    auto r = std::make_shared<kernels::CrossEntropyResult>(kernels::softmax_cross_entropy(t.value(logits), labels));
    auto labs = std::make_shared<std::vector<int>>(std::move(labels));
    Tensor loss = Tensor::scalar(r->loss);
    auto back = [logits, r, labs](Tape& tp, const Tensor& gout) {
        tp.accumulate(logits, kernels::softmax_cross_entropy_backward(gout[0], r->probs, *labs));
    };
    return t.record("softmax_cross_entropy", {logits}, std::move(loss), std::move(back));
}

Value sum(Tape& t, Value x) {
    const Tensor& in = t.value(x);
    double s = 0.0;
    for (int64_t i = 0; i < in.size(); ++i) s += in[i];
    Shape in_shape = in.shape();
    auto back = [x, in_shape](Tape& tp, const Tensor& gout) {
        tp.accumulate(x, Tensor::full(in_shape, gout[0]));
    };
    return t.record("sum", {x}, Tensor::scalar(s), std::move(back));
}

}  // namespace cnet::autograd
