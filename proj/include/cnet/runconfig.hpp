#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cnet/choicenet.hpp"
#include "cnet/config.hpp"
#include "cnet/data.hpp"
#include "cnet/model.hpp"
#include "cnet/reference_nets.hpp"
#include "cnet/training.hpp"

namespace cnet::run {

// Everything one experiment needs, assembled from a config file. The
// [model] section picks choicenet / resnet_block / dense_block; [train]
// fills the SGD settings; [data] selects synthetic generation or CIFAR-10
// style binary files; [run] holds seed and thread count.
struct RunConfig {
    config::Config cfg;

    std::string model_kind;  // choicenet | resnet_block | dense_block
    arch::ChoiceNetConfig choicenet;
    arch::ReferenceNetConfig reference;

    training::SGDConfig sgd;
    bool augment = true;
    data::AugmentationPolicy augmentation;

    std::string data_source;  // synthetic | cifar10
    std::vector<std::string> train_files, test_files;
    int synthetic_train = 0, synthetic_val = 0, synthetic_test = 0;
    int n_val = 0;  // carved from the train split for cifar10 sources
    uint64_t data_seed = 0;

    uint64_t seed = 0;
    int threads = 1;

    static RunConfig from_config(config::Config cfg);
    static RunConfig from_file(const std::string& path);

    std::unique_ptr<Model> build_model() const;
    data::DatasetSplit load_data() const;
};

// Small provenance record written next to every artifact directory: config
// hash, seed, and the library version.
void write_manifest(const std::string& path, const RunConfig& rc);

extern const char* kVersion;

}  // namespace cnet::run
