#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cnet/layers.hpp"
#include "cnet/model.hpp"

namespace cnet::arch {

using autograd::Tape;
using autograd::Value;
using layers::PoolMode;

enum class SkipMode { chain, per_conv };
SkipMode skip_mode_from_string(const std::string& s);
std::string skip_mode_name(SkipMode m);

// One module emits seven concatenated feature groups: for each kernel size
// k in {3,5,7} a skip chain (a_k) and a plain chain (b_k) of branch_channels
// each, plus the bottleneck output itself.
struct ChoiceModuleConfig {
    int in_channels = 0;
    int bottleneck_channels = 0;  // c_b
    int branch_channels = 0;      // c
    SkipMode skip_mode = SkipMode::chain;
    bool share_branch_weights = true;
    bool skip_projection = false;  // 1x1 projection when c != c_b

    static constexpr std::array<int, 3> kernel_sizes{3, 5, 7};
    static constexpr int convs_per_branch = 3;

    int out_channels() const { return 6 * branch_channels + bottleneck_channels; }
};

class ChoiceModule {
public:
    explicit ChoiceModule(ChoiceModuleConfig cfg);
    void init(std::mt19937_64& rng);

    Value forward(Tape& t, Value x, bool training);

    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    int64_t count_parameters() const;
    const ChoiceModuleConfig& config() const { return cfg_; }

    // path is "branch" (shared), "skip_branch"/"plain_branch" (unshared),
    // "bottleneck" (kernel 1, conv_index 0) or "projection".
    using ConvVisitor = std::function<void(int kernel, int conv_index, const std::string& path, const Tensor& w)>;
    void visit_convs(const ConvVisitor& fn) const;

private:
    struct Chain {
        std::vector<layers::CompositeFunction> convs;
    };
    Chain make_chain(int kernel) const;
    Value run_plain(Tape& t, Chain& ch, Value e, bool training);
    Value run_per_conv(Tape& t, Chain& ch, Value e, Value skip0, bool training);

    ChoiceModuleConfig cfg_;
    layers::Bottleneck bottleneck_;
    std::array<Chain, 3> chains_;        // skip chains; also the plain ones when shared
    std::array<Chain, 3> plain_chains_;  // only populated when share_branch_weights is off
    std::optional<layers::Conv> skip_proj_;
};

// Three (configurably fewer/more) modules, densely connected: module i
// consumes concat(out_{i-1}, ..., out_1, x), newest first; block output is
// the last module's output.
struct ChoiceBlockConfig {
    int in_channels = 0;
    int modules = 3;
    int bottleneck_channels = 0;
    int branch_channels = 0;
    SkipMode skip_mode = SkipMode::chain;
    bool share_branch_weights = true;
    bool skip_projection = false;
    double dropout_p = 0.0;  // applied to each module output when > 0

    int out_channels() const { return 6 * branch_channels + bottleneck_channels; }
};

class ChoiceBlock {
public:
    explicit ChoiceBlock(ChoiceBlockConfig cfg);
    void init(std::mt19937_64& rng);
    Value forward(Tape& t, Value x, bool training, std::mt19937_64& rng);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    int64_t count_parameters() const;
    const ChoiceBlockConfig& config() const { return cfg_; }
    const std::vector<ChoiceModule>& modules() const { return modules_; }

private:
    ChoiceBlockConfig cfg_;
    std::vector<ChoiceModule> modules_;
    layers::Dropout dropout_;
};

struct ChoiceNetConfig {
    int input_channels = 3;
    int input_hw = 32;
    int num_classes = 10;
    int stem_kernel = 3;
    int stem_channels = 16;

    struct BlockPlan {
        int modules = 3;
        int bottleneck_channels = 0;
        int branch_channels = 0;
    };
    std::vector<BlockPlan> blocks;  // three for the full architecture

    PoolMode pooling = PoolMode::both;
    SkipMode skip_mode = SkipMode::chain;
    bool share_branch_weights = true;
    bool skip_projection = false;
    double dropout_p = 0.0;
    int transition_channels = 0;  // 1x1 projection after each pool; 0 disables

    void validate() const;
};

class ChoiceNet : public Model {
public:
    explicit ChoiceNet(ChoiceNetConfig cfg, uint64_t init_seed);

    Value forward(Tape& t, Value x, bool training, std::mt19937_64& rng) override;
    void collect(std::vector<NamedTensor>& out) override;
    int64_t count_parameters(ParamBreakdown* breakdown = nullptr) const override;
    int num_classes() const override { return cfg_.num_classes; }
    Shape input_shape(int batch) const override {
        return Shape{batch, cfg_.input_channels, cfg_.input_hw, cfg_.input_hw};
    }

    const ChoiceNetConfig& config() const { return cfg_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }

    using BlockConvVisitor =
        std::function<void(int module_index, int kernel, int conv_index, const std::string& path, const Tensor& w)>;
    void visit_block_convs(int block_index, const BlockConvVisitor& fn) const;

private:
    ChoiceNetConfig cfg_;
    layers::CompositeFunction stem_;
    std::vector<ChoiceBlock> blocks_;
    std::vector<layers::CompositeFunction> transitions_;  // after each pool, optional
    layers::ClassifierHead head_;
};

}  // namespace cnet::arch
