#include "cnet/reference_nets.hpp"

#include <stdexcept>

namespace cnet::arch {

ResidualBlock::ResidualBlock(int channels)
    : conv1(channels, channels, 3, /*bias=*/false),
      conv2(channels, channels, 3, /*bias=*/false),
      bn1(channels),
      bn2(channels) {}

void ResidualBlock::init(std::mt19937_64& rng) {
    conv1.init(rng);
    conv2.init(rng);
    bn1.init();
    bn2.init();
}

Value ResidualBlock::forward(Tape& t, Value x, bool training) {
    Value y = autograd::relu(t, bn1.forward(t, conv1.forward(t, x), training));
    y = bn2.forward(t, conv2.forward(t, y), training);
    return autograd::relu(t, autograd::add(t, y, x));
}

void ResidualBlock::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    conv1.collect(out, prefix + ".conv1");
    bn1.collect(out, prefix + ".bn1");
    conv2.collect(out, prefix + ".conv2");
    bn2.collect(out, prefix + ".bn2");
}

int64_t ResidualBlock::param_count(int channels) {
    return 2 * (layers::Conv::param_count(channels, channels, 3, false) +
                layers::BatchNorm::param_count(channels));
}

DenseBlock::DenseBlock(int in_c, int num_layers, int growth_rate) : in_channels(in_c), growth(growth_rate) {
    if (num_layers < 1) throw std::invalid_argument("DenseBlock: needs at least one layer");
    for (int l = 0; l < num_layers; ++l)
        block_layers.emplace_back(in_c + l * growth_rate, growth_rate, 3);
}

void DenseBlock::init(std::mt19937_64& rng) {
    for (auto& cf : block_layers) cf.init(rng);
}

Value DenseBlock::forward(Tape& t, Value x, bool training) {
    std::vector<Value> stream{x};
    for (auto& cf : block_layers) {
        Value input = stream.size() == 1 ? stream[0] : autograd::concat_channels(t, stream);
        stream.push_back(cf.forward(t, input, training));
    }
    return autograd::concat_channels(t, stream);
}

void DenseBlock::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    for (size_t i = 0; i < block_layers.size(); ++i)
        block_layers[i].collect(out, prefix + ".l" + std::to_string(i));
}

int64_t DenseBlock::param_count(int in_c, int num_layers, int growth_rate) {
    int64_t total = 0;
    for (int l = 0; l < num_layers; ++l)
        total += layers::CompositeFunction::param_count(in_c + l * growth_rate, growth_rate, 3);
    return total;
}

ReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "resnet_block" || s == "resnet") return ReferenceKind::resnet_block;
    if (s == "dense_block" || s == "densenet") return ReferenceKind::dense_block;
    throw std::invalid_argument("invalid reference kind '" + s + "' (expected resnet_block|dense_block)");
}

void ReferenceNetConfig::validate() const {
    if (stages < 1 || units_per_stage < 1 || channels < 1 || growth < 1)
        throw std::invalid_argument("ReferenceNetConfig: bad dimensions");
    if (num_classes < 2) throw std::invalid_argument("ReferenceNetConfig: need at least two classes");
    int hw = input_hw;
    for (int i = 0; i + 1 < stages; ++i) {
        if (hw % 2 != 0) throw std::invalid_argument("ReferenceNetConfig: resolution too small for the pooling plan");
        hw /= 2;
    }
}

ReferenceNet::ReferenceNet(ReferenceNetConfig cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    stem_ = layers::CompositeFunction(cfg_.input_channels, cfg_.channels, cfg_.stem_kernel);
    int in = cfg_.channels;
    for (int s = 0; s < cfg_.stages; ++s) {
        if (cfg_.kind == ReferenceKind::resnet_block) {
            for (int u = 0; u < cfg_.units_per_stage; ++u) res_units_.emplace_back(in);
        } else {
            dense_stages_.emplace_back(in, cfg_.units_per_stage, cfg_.growth);
            in = dense_stages_.back().out_channels();
        }
        if (s + 1 < cfg_.stages) {
            in = layers::pooled_channels(cfg_.pooling, in);
            transitions_.emplace_back(layers::make_bottleneck(in, cfg_.channels));
            in = cfg_.channels;
        }
    }
    head_ = layers::ClassifierHead(in, cfg_.num_classes);

    std::mt19937_64 rng(init_seed);
    stem_.init(rng);
    for (auto& u : res_units_) u.init(rng);
    for (auto& d : dense_stages_) d.init(rng);
    for (auto& tr : transitions_) tr.init(rng);
    head_.init(rng);
}

Value ReferenceNet::forward(Tape& t, Value x, bool training, std::mt19937_64& rng) {
    (void)rng;
    Value y = stem_.forward(t, x, training);
    for (int s = 0; s < cfg_.stages; ++s) {
        if (cfg_.kind == ReferenceKind::resnet_block) {
            for (int u = 0; u < cfg_.units_per_stage; ++u)
                y = res_units_[static_cast<size_t>(s * cfg_.units_per_stage + u)].forward(t, y, training);
        } else {
            y = dense_stages_[static_cast<size_t>(s)].forward(t, y, training);
        }
        if (s + 1 < cfg_.stages) {
            y = layers::pooling_mode_forward(t, y, cfg_.pooling);
            y = transitions_[static_cast<size_t>(s)].forward(t, y, training);
        }
    }
    return head_.forward(t, y);
}

void ReferenceNet::collect(std::vector<NamedTensor>& out) {
    stem_.collect(out, "stem");
    for (size_t i = 0; i < res_units_.size(); ++i) res_units_[i].collect(out, "res" + std::to_string(i));
    for (size_t i = 0; i < dense_stages_.size(); ++i) dense_stages_[i].collect(out, "dense" + std::to_string(i));
    for (size_t i = 0; i < transitions_.size(); ++i) transitions_[i].collect(out, "transition" + std::to_string(i));
    head_.collect(out, "head");
}

int64_t ReferenceNet::count_parameters(ParamBreakdown* breakdown) const {
    int64_t total = 0;
    auto push = [&](const std::string& name, int64_t n) {
        total += n;
        if (breakdown) breakdown->emplace_back(name, n);
    };
    push("stem", layers::CompositeFunction::param_count(cfg_.input_channels, cfg_.channels, cfg_.stem_kernel));
    int in = cfg_.channels;
    for (int s = 0; s < cfg_.stages; ++s) {
        if (cfg_.kind == ReferenceKind::resnet_block) {
            push("stage" + std::to_string(s),
                 static_cast<int64_t>(cfg_.units_per_stage) * ResidualBlock::param_count(in));
        } else {
            push("stage" + std::to_string(s), DenseBlock::param_count(in, cfg_.units_per_stage, cfg_.growth));
            in = in + cfg_.units_per_stage * cfg_.growth;
        }
        if (s + 1 < cfg_.stages) {
            in = layers::pooled_channels(cfg_.pooling, in);
            push("transition" + std::to_string(s), layers::CompositeFunction::param_count(in, cfg_.channels, 1));
            in = cfg_.channels;
        }
    }
    push("head", layers::ClassifierHead::param_count(in, cfg_.num_classes));
    return total;
}

std::unique_ptr<Model> build_reference(ReferenceKind kind, const ReferenceNetConfig& cfg, uint64_t init_seed) {
    ReferenceNetConfig c = cfg;
    c.kind = kind;
    return std::make_unique<ReferenceNet>(c, init_seed);
}

}  // namespace cnet::arch
