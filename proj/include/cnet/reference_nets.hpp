#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cnet/layers.hpp"
#include "cnet/model.hpp"

// Comparison networks sharing stem, pooling and head machinery with the
// main architecture so params-vs-error comparisons are like-for-like.

namespace cnet::arch {

using autograd::Tape;
using autograd::Value;
using layers::PoolMode;

// conv-bn-relu -> conv-bn, identity skip, final relu. Width preserved.
struct ResidualBlock {
    layers::Conv conv1, conv2;
    layers::BatchNorm bn1, bn2;

    ResidualBlock() = default;
    explicit ResidualBlock(int channels);
    void init(std::mt19937_64& rng);
    Value forward(Tape& t, Value x, bool training);
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int channels);
};

// Each layer consumes the concatenation of the block input and all previous
// layer outputs and appends `growth` channels to the stream.
struct DenseBlock {
    int in_channels = 0, growth = 0;
    std::vector<layers::CompositeFunction> block_layers;

    DenseBlock() = default;
    DenseBlock(int in_c, int num_layers, int growth_rate);
    void init(std::mt19937_64& rng);
    Value forward(Tape& t, Value x, bool training);
    int out_channels() const { return in_channels + static_cast<int>(block_layers.size()) * growth; }
    void collect(std::vector<NamedTensor>& out, const std::string& prefix);
    static int64_t param_count(int in_c, int num_layers, int growth_rate);
};

enum class ReferenceKind { resnet_block, dense_block };
ReferenceKind reference_kind_from_string(const std::string& s);

struct ReferenceNetConfig {
    ReferenceKind kind = ReferenceKind::resnet_block;
    int input_channels = 3;
    int input_hw = 32;
    int num_classes = 10;
    int stem_kernel = 3;
    int stages = 3;
    int units_per_stage = 2;  // residual blocks / dense layers per stage
    int channels = 16;        // resnet width; also dense stem width
    int growth = 8;           // dense growth rate
    PoolMode pooling = PoolMode::both;

    void validate() const;
};

class ReferenceNet : public Model {
public:
    explicit ReferenceNet(ReferenceNetConfig cfg, uint64_t init_seed);

    Value forward(Tape& t, Value x, bool training, std::mt19937_64& rng) override;
    void collect(std::vector<NamedTensor>& out) override;
    int64_t count_parameters(ParamBreakdown* breakdown = nullptr) const override;
    int num_classes() const override { return cfg_.num_classes; }
    Shape input_shape(int batch) const override {
        return Shape{batch, cfg_.input_channels, cfg_.input_hw, cfg_.input_hw};
    }
    const ReferenceNetConfig& config() const { return cfg_; }

private:
    ReferenceNetConfig cfg_;
    layers::CompositeFunction stem_;
    std::vector<ResidualBlock> res_units_;
    std::vector<DenseBlock> dense_stages_;
    std::vector<layers::CompositeFunction> transitions_;
    layers::ClassifierHead head_;
};

std::unique_ptr<Model> build_reference(ReferenceKind kind, const ReferenceNetConfig& cfg, uint64_t init_seed);

}  // namespace cnet::arch
