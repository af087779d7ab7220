#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cnet/data.hpp"
#include "cnet/model.hpp"

namespace cnet::training {

struct SGDConfig {
    // Piecewise-constant learning rate: (epoch boundary, rate). The boundary
    // epoch itself already uses the new rate.
    std::vector<std::pair<int, double>> schedule{{0, 1e-3}, {100, 1e-4}, {200, 1e-5}};
    double momentum = 0.9;
    bool nesterov = true;
    double weight_decay = 5e-4;
    int batch_size = 128;
    int max_epochs = 300;
    std::optional<double> grad_clip_norm;

    void validate() const;
};

double lr_at_epoch(const SGDConfig& cfg, int epoch);

struct Metrics {
    double loss = 0.0;
    double error_rate = 0.0;  // 100 - accuracy, in percent
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0, train_err = 0.0;
    double val_loss = 0.0, val_err = 0.0;
};

// Momentum buffers keyed by parameter name; shapes mirror the parameters.
class SGD {
public:
    explicit SGD(const SGDConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

    // L2 as grad += wd*param, then v = momentum*v + grad; nesterov uses
    // momentum*v + grad as the update. Optional global-norm clip happens
    // before the momentum update.
    void step(const std::vector<NamedTensor>& params,
              const std::map<std::string, const Tensor*>& grads, double lr);

    std::map<std::string, Tensor>& buffers() { return buffers_; }
    const SGDConfig& config() const { return cfg_; }

private:
    SGDConfig cfg_;
    std::map<std::string, Tensor> buffers_;
};

// One pass over the train split: seeded shuffle, per-sample augmentation,
// forward/backward, SGD update per batch. Returns running train metrics.
Metrics train_epoch(Model& model, SGD& opt, const std::vector<data::Sample>& train,
                    const data::AugmentationPolicy* augmentation, const data::ChannelStats& stats,
                    int epoch, uint64_t seed);

// Eval mode, no augmentation (normalization only), no dropout.
Metrics evaluate(Model& model, const std::vector<data::Sample>& samples,
                 const data::ChannelStats& stats, int batch_size);

// Index of the epoch with the highest validation accuracy; earliest wins ties.
int best_checkpoint_select(const std::vector<EpochRecord>& history);

std::string metrics_csv(const std::vector<EpochRecord>& history);
void write_metrics_csv(const std::string& path, const std::vector<EpochRecord>& history);

// Batch assembly helper shared by training and evaluation.
Tensor make_batch(const std::vector<data::Sample>& samples, const std::vector<size_t>& idx,
                  size_t first, size_t count, std::vector<int>& labels_out);

}  // namespace cnet::training
