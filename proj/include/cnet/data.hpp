#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "cnet/tensor.hpp"

namespace cnet::data {

struct Sample {
    Tensor image;  // (3, H, W), values in [0,1] before normalization
    int label = 0;
};

struct ChannelStats {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

struct DatasetSplit {
    std::vector<Sample> train, val, test;
    ChannelStats stats;  // computed on train only
};

// Standard CIFAR-10 binary batches: 3073-byte records, 1 label byte then
// 3072 channel-major pixel bytes. Pixels are scaled to [0,1].
std::vector<Sample> load_cifar10_binary(const std::vector<std::string>& paths);

// Writes samples back to the same record format (pixels rounded to bytes).
void save_cifar10_binary(const std::string& path, const std::vector<Sample>& samples);

ChannelStats compute_channel_stats(const std::vector<Sample>& samples);

// Seeded shuffle; the last n_val samples become the validation set. Channel
// statistics are taken from the resulting train split.
DatasetSplit split_validation(std::vector<Sample> samples, int n_val, uint64_t seed);

struct AugmentationPolicy {
    double hflip_prob = 0.5;
    int pad = 4;  // zero-pad then random crop back to the original size
    bool normalize = true;
};

// maybe-flip -> zero-pad -> random crop -> per-channel normalize.
Sample augment(const Sample& s, const AugmentationPolicy& policy, const ChannelStats& stats, std::mt19937_64& rng);

// Normalization only, for evaluation.
Sample normalize_sample(const Sample& s, const ChannelStats& stats);

// Class-conditional oriented gratings plus Gaussian noise; deterministic
// per seed and separable enough for a tiny network to fit.
DatasetSplit generate_synthetic(int n_train, int num_classes, int resolution, uint64_t seed,
                                int n_val = 0, int n_test = 0);

}  // namespace cnet::data
