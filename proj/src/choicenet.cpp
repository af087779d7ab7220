#include "cnet/choicenet.hpp"

#include <stdexcept>

namespace cnet::arch {

SkipMode skip_mode_from_string(const std::string& s) {
    if (s == "chain") return SkipMode::chain;
    if (s == "per_conv") return SkipMode::per_conv;
    throw std::invalid_argument("invalid skip mode '" + s + "' (expected chain|per_conv)");
}

std::string skip_mode_name(SkipMode m) { return m == SkipMode::chain ? "chain" : "per_conv"; }

// --- ChoiceModule -----------------------------------------------------------

ChoiceModule::ChoiceModule(ChoiceModuleConfig cfg) : cfg_(cfg) {
    if (cfg_.in_channels < 1 || cfg_.bottleneck_channels < 1 || cfg_.branch_channels < 1)
        throw std::invalid_argument("ChoiceModule: channel counts must be positive");
    if (cfg_.branch_channels != cfg_.bottleneck_channels && !cfg_.skip_projection)
        throw std::invalid_argument(
            "ChoiceModule: skip addition needs branch_channels == bottleneck_channels "
            "or skip_projection enabled");
    bottleneck_ = layers::make_bottleneck(cfg_.in_channels, cfg_.bottleneck_channels);
    for (size_t i = 0; i < cfg_.kernel_sizes.size(); ++i) {
        chains_[i] = make_chain(cfg_.kernel_sizes[i]);
        if (!cfg_.share_branch_weights) plain_chains_[i] = make_chain(cfg_.kernel_sizes[i]);
    }
    if (cfg_.skip_projection && cfg_.branch_channels != cfg_.bottleneck_channels)
        skip_proj_ = layers::Conv(cfg_.bottleneck_channels, cfg_.branch_channels, 1, /*bias=*/true);
}

ChoiceModule::Chain ChoiceModule::make_chain(int kernel) const {
    Chain ch;
    ch.convs.emplace_back(cfg_.bottleneck_channels, cfg_.branch_channels, kernel);
    for (int i = 1; i < ChoiceModuleConfig::convs_per_branch; ++i)
        ch.convs.emplace_back(cfg_.branch_channels, cfg_.branch_channels, kernel);
    return ch;
}

void ChoiceModule::init(std::mt19937_64& rng) {
    bottleneck_.init(rng);
    for (auto& ch : chains_)
        for (auto& cf : ch.convs) cf.init(rng);
    if (!cfg_.share_branch_weights)
        for (auto& ch : plain_chains_)
            for (auto& cf : ch.convs) cf.init(rng);
    if (skip_proj_) skip_proj_->init(rng);
}

Value ChoiceModule::run_plain(Tape& t, Chain& ch, Value e, bool training) {
    Value y = e;
    for (auto& cf : ch.convs) y = cf.forward(t, y, training);
    return y;
}

Value ChoiceModule::run_per_conv(Tape& t, Chain& ch, Value e, Value skip0, bool training) {
    Value y = autograd::add(t, ch.convs[0].forward(t, e, training), skip0);
    for (size_t i = 1; i < ch.convs.size(); ++i)
        y = autograd::add(t, ch.convs[i].forward(t, y, training), y);
    return y;
}

Value ChoiceModule::forward(Tape& t, Value x, bool training) {
    if (t.value(x).dim(1) != cfg_.in_channels)
        throw std::invalid_argument("ChoiceModule: input has " + std::to_string(t.value(x).dim(1)) +
                                    " channels, expected " + std::to_string(cfg_.in_channels));
    Value e = bottleneck_.forward(t, x, training);
    Value skip_src = skip_proj_ ? skip_proj_->forward(t, e) : e;

    std::array<Value, 3> a, b;
    for (size_t ki = 0; ki < cfg_.kernel_sizes.size(); ++ki) {
        Chain& skip_chain = chains_[ki];
        Chain& plain_chain = cfg_.share_branch_weights ? chains_[ki] : plain_chains_[ki];
        if (cfg_.skip_mode == SkipMode::chain) {
            b[ki] = run_plain(t, plain_chain, e, training);
            Value skip_out = cfg_.share_branch_weights ? b[ki] : run_plain(t, skip_chain, e, training);
            a[ki] = autograd::add(t, skip_out, skip_src);
        } else {
            b[ki] = run_plain(t, plain_chain, e, training);
            a[ki] = run_per_conv(t, skip_chain, e, skip_src, training);
        }
    }
    // Fixed output order: a3, b3, a5, b5, e, a7, b7.
    return autograd::concat_channels(t, {a[0], b[0], a[1], b[1], e, a[2], b[2]});
}

void ChoiceModule::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    bottleneck_.collect(out, prefix + ".bottleneck");
    for (size_t ki = 0; ki < cfg_.kernel_sizes.size(); ++ki) {
        const std::string base = prefix + ".k" + std::to_string(cfg_.kernel_sizes[ki]);
        if (cfg_.share_branch_weights) {
            for (size_t i = 0; i < chains_[ki].convs.size(); ++i)
                chains_[ki].convs[i].collect(out, base + ".c" + std::to_string(i));
        } else {
            for (size_t i = 0; i < chains_[ki].convs.size(); ++i)
                chains_[ki].convs[i].collect(out, base + ".skip.c" + std::to_string(i));
            for (size_t i = 0; i < plain_chains_[ki].convs.size(); ++i)
                plain_chains_[ki].convs[i].collect(out, base + ".plain.c" + std::to_string(i));
        }
    }
    if (skip_proj_) skip_proj_->collect(out, prefix + ".proj");
}

int64_t ChoiceModule::count_parameters() const {
    using layers::CompositeFunction;
    const int cb = cfg_.bottleneck_channels, c = cfg_.branch_channels;
    int64_t chain_sum = 0;
    for (int k : cfg_.kernel_sizes) {
        chain_sum += CompositeFunction::param_count(cb, c, k) +
                     (ChoiceModuleConfig::convs_per_branch - 1) * CompositeFunction::param_count(c, c, k);
    }
    int64_t total = CompositeFunction::param_count(cfg_.in_channels, cb, 1);
    total += (cfg_.share_branch_weights ? 1 : 2) * chain_sum;
    if (skip_proj_) total += layers::Conv::param_count(cb, c, 1, true);
    return total;
}

void ChoiceModule::visit_convs(const ConvVisitor& fn) const {
    fn(1, 0, "bottleneck", bottleneck_.conv.w);
    for (size_t ki = 0; ki < cfg_.kernel_sizes.size(); ++ki) {
        const int k = cfg_.kernel_sizes[ki];
        if (cfg_.share_branch_weights) {
            for (size_t i = 0; i < chains_[ki].convs.size(); ++i)
                fn(k, static_cast<int>(i), "branch", chains_[ki].convs[i].conv.w);
        } else {
            for (size_t i = 0; i < chains_[ki].convs.size(); ++i)
                fn(k, static_cast<int>(i), "skip_branch", chains_[ki].convs[i].conv.w);
            for (size_t i = 0; i < plain_chains_[ki].convs.size(); ++i)
                fn(k, static_cast<int>(i), "plain_branch", plain_chains_[ki].convs[i].conv.w);
        }
    }
    if (skip_proj_) fn(1, 0, "projection", skip_proj_->w);
}

// --- ChoiceBlock --------------------------------------------------------------

ChoiceBlock::ChoiceBlock(ChoiceBlockConfig cfg) : cfg_(cfg) {
    if (cfg_.modules < 1) throw std::invalid_argument("ChoiceBlock: needs at least one module");
    dropout_.p = cfg_.dropout_p;
    int in = cfg_.in_channels;
    for (int i = 0; i < cfg_.modules; ++i) {
        ChoiceModuleConfig mc;
        mc.in_channels = in;
        mc.bottleneck_channels = cfg_.bottleneck_channels;
        mc.branch_channels = cfg_.branch_channels;
        mc.skip_mode = cfg_.skip_mode;
        mc.share_branch_weights = cfg_.share_branch_weights;
        mc.skip_projection = cfg_.skip_projection;
        modules_.emplace_back(mc);
        in += mc.out_channels();  // dense stream grows by one module output
    }
}

void ChoiceBlock::init(std::mt19937_64& rng) {
    for (auto& m : modules_) m.init(rng);
}

Value ChoiceBlock::forward(Tape& t, Value x, bool training, std::mt19937_64& rng) {
    std::vector<Value> outputs;  // chronological
    Value out = x;
    for (size_t i = 0; i < modules_.size(); ++i) {
        Value input = x;
        if (i > 0) {
            std::vector<Value> parts;  // newest output first, original input last
            for (size_t j = outputs.size(); j-- > 0;) parts.push_back(outputs[j]);
            parts.push_back(x);
            input = autograd::concat_channels(t, parts);
        }
        out = modules_[i].forward(t, input, training);
        if (cfg_.dropout_p > 0.0) out = dropout_.forward(t, out, training, rng);
        outputs.push_back(out);
    }
    return out;
}

void ChoiceBlock::collect(std::vector<NamedTensor>& out, const std::string& prefix) {
    for (size_t i = 0; i < modules_.size(); ++i)
        modules_[i].collect(out, prefix + ".m" + std::to_string(i));
}

int64_t ChoiceBlock::count_parameters() const {
    int64_t total = 0;
    for (const auto& m : modules_) total += m.count_parameters();
    return total;
}

// --- ChoiceNet ----------------------------------------------------------------

void ChoiceNetConfig::validate() const {
    if (blocks.empty()) throw std::invalid_argument("ChoiceNetConfig: needs at least one block");
    if (input_channels < 1 || input_hw < 1 || num_classes < 2)
        throw std::invalid_argument("ChoiceNetConfig: bad input/class dimensions");
    if (stem_kernel % 2 != 1) throw std::invalid_argument("ChoiceNetConfig: stem kernel must be odd");
    int hw = input_hw;
    for (size_t i = 0; i + 1 < blocks.size(); ++i) {
        if (hw % 2 != 0)
            throw std::invalid_argument("ChoiceNetConfig: resolution " + std::to_string(input_hw) +
                                        " too small/odd for " + std::to_string(blocks.size() - 1) + " poolings");
        hw /= 2;
    }
    if (hw < 1) throw std::invalid_argument("ChoiceNetConfig: resolution too small for the configured poolings");
    for (const auto& b : blocks) {
        if (b.modules < 1 || b.bottleneck_channels < 1 || b.branch_channels < 1)
            throw std::invalid_argument("ChoiceNetConfig: bad block plan");
        if (b.branch_channels != b.bottleneck_channels && !skip_projection)
            throw std::invalid_argument(
                "ChoiceNetConfig: branch_channels must equal bottleneck_channels unless skip_projection is on");
    }
}

ChoiceNet::ChoiceNet(ChoiceNetConfig cfg, uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    stem_ = layers::CompositeFunction(cfg_.input_channels, cfg_.stem_channels, cfg_.stem_kernel);
    int in = cfg_.stem_channels;
    for (size_t bi = 0; bi < cfg_.blocks.size(); ++bi) {
        const auto& plan = cfg_.blocks[bi];
        ChoiceBlockConfig bc;
        bc.in_channels = in;
        bc.modules = plan.modules;
        bc.bottleneck_channels = plan.bottleneck_channels;
        bc.branch_channels = plan.branch_channels;
        bc.skip_mode = cfg_.skip_mode;
        bc.share_branch_weights = cfg_.share_branch_weights;
        bc.skip_projection = cfg_.skip_projection;
        bc.dropout_p = cfg_.dropout_p;
        blocks_.emplace_back(bc);
        in = bc.out_channels();
        if (bi + 1 < cfg_.blocks.size()) {
            in = layers::pooled_channels(cfg_.pooling, in);
            if (cfg_.transition_channels > 0) {
                transitions_.emplace_back(layers::make_bottleneck(in, cfg_.transition_channels));
                in = cfg_.transition_channels;
            }
        }
    }
    head_ = layers::ClassifierHead(in, cfg_.num_classes);

    std::mt19937_64 rng(init_seed);
    stem_.init(rng);
    for (auto& b : blocks_) b.init(rng);
    for (auto& tr : transitions_) tr.init(rng);
    head_.init(rng);
}

Value ChoiceNet::forward(Tape& t, Value x, bool training, std::mt19937_64& rng) {
    const Tensor& in = t.value(x);
    if (in.rank() != 4 || in.dim(1) != cfg_.input_channels || in.dim(2) != cfg_.input_hw || in.dim(3) != cfg_.input_hw)
        throw std::invalid_argument("ChoiceNet: input shape " + in.shape().str() + " does not match config (N," +
                                    std::to_string(cfg_.input_channels) + "," + std::to_string(cfg_.input_hw) + "," +
                                    std::to_string(cfg_.input_hw) + ")");
    Value y = stem_.forward(t, x, training);
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        y = blocks_[bi].forward(t, y, training, rng);
        if (bi + 1 < blocks_.size()) {
            y = layers::pooling_mode_forward(t, y, cfg_.pooling);
            if (!transitions_.empty()) y = transitions_[bi].forward(t, y, training);
        }
    }
    return head_.forward(t, y);
}

void ChoiceNet::collect(std::vector<NamedTensor>& out) {
    stem_.collect(out, "stem");
    for (size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, "block" + std::to_string(i));
    for (size_t i = 0; i < transitions_.size(); ++i) transitions_[i].collect(out, "transition" + std::to_string(i));
    head_.collect(out, "head");
}

int64_t ChoiceNet::count_parameters(ParamBreakdown* breakdown) const {
    int64_t total = 0;
    auto push = [&](const std::string& name, int64_t n) {
        total += n;
        if (breakdown) breakdown->emplace_back(name, n);
    };
    push("stem", layers::CompositeFunction::param_count(cfg_.input_channels, cfg_.stem_channels, cfg_.stem_kernel));
    int in = cfg_.stem_channels;
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        push("block" + std::to_string(bi), blocks_[bi].count_parameters());
        in = blocks_[bi].config().out_channels();
        if (bi + 1 < cfg_.blocks.size()) {
            in = layers::pooled_channels(cfg_.pooling, in);
            if (cfg_.transition_channels > 0) {
                push("transition" + std::to_string(bi),
                     layers::CompositeFunction::param_count(in, cfg_.transition_channels, 1));
                in = cfg_.transition_channels;
            }
        }
    }
    push("head", layers::ClassifierHead::param_count(in, cfg_.num_classes));
    return total;
}

void ChoiceNet::visit_block_convs(int block_index, const BlockConvVisitor& fn) const {
    if (block_index < 0 || block_index >= static_cast<int>(blocks_.size()))
        throw std::invalid_argument("visit_block_convs: block index " + std::to_string(block_index) + " out of range");
    const auto& mods = blocks_[static_cast<size_t>(block_index)].modules();
    for (size_t mi = 0; mi < mods.size(); ++mi) {
        mods[mi].visit_convs([&](int kernel, int conv_index, const std::string& path, const Tensor& w) {
            fn(static_cast<int>(mi), kernel, conv_index, path, w);
        });
    }
}

}  // namespace cnet::arch
