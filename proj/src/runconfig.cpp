#include "cnet/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cnet::run {

const char* kVersion = "0.1.0";

namespace {

std::string resolve_data_path(const std::string& p) {
    if (!p.empty() && p.front() == '/') return p;
    const char* root = std::getenv("CNET_DATA_ROOT");
    if (root && *root) return std::string(root) + "/" + p;
    return p;
}

void parse_choicenet(const config::Config& c, arch::ChoiceNetConfig& m) {
    m.input_channels = static_cast<int>(c.get_int("model.input_channels", 3));
    m.input_hw = static_cast<int>(c.require_int("model.input_hw"));
    m.num_classes = static_cast<int>(c.require_int("model.num_classes"));
    m.stem_kernel = static_cast<int>(c.get_int("model.stem_kernel", 3));
    m.stem_channels = static_cast<int>(c.require_int("model.stem_channels"));

    const auto modules = c.get_int_list("model.modules_per_block");
    const auto cb = c.get_int_list("model.bottleneck_channels");
    const auto cbr = c.get_int_list("model.branch_channels");
    if (cb.size() != modules.size() || cbr.size() != modules.size())
        throw std::invalid_argument(
            "config: model.modules_per_block, model.bottleneck_channels and "
            "model.branch_channels must have the same length");
    for (size_t i = 0; i < modules.size(); ++i)
        m.blocks.push_back({modules[i], cb[i], cbr[i]});

    m.pooling = layers::pool_mode_from_string(c.get_string("model.pooling", "both"));
    m.skip_mode = arch::skip_mode_from_string(c.get_string("model.skip_mode", "chain"));
    m.share_branch_weights = c.get_bool("model.share_branch_weights", true);
    m.skip_projection = c.get_bool("model.skip_projection", false);
    m.dropout_p = c.get_double("model.dropout", 0.0);
    m.transition_channels = static_cast<int>(c.get_int("model.transition_channels", 0));
    m.validate();
}

void parse_reference(const config::Config& c, const std::string& kind, arch::ReferenceNetConfig& m) {
    m.kind = arch::reference_kind_from_string(kind);
    m.input_channels = static_cast<int>(c.get_int("model.input_channels", 3));
    m.input_hw = static_cast<int>(c.require_int("model.input_hw"));
    m.num_classes = static_cast<int>(c.require_int("model.num_classes"));
    m.stem_kernel = static_cast<int>(c.get_int("model.stem_kernel", 3));
    m.stages = static_cast<int>(c.get_int("model.stages", 3));
    m.units_per_stage = static_cast<int>(c.get_int("model.units_per_stage", 2));
    m.channels = static_cast<int>(c.get_int("model.channels", 16));
    m.growth = static_cast<int>(c.get_int("model.growth", 8));
    m.pooling = layers::pool_mode_from_string(c.get_string("model.pooling", "both"));
    m.validate();
}

}  // namespace

RunConfig RunConfig::from_config(config::Config cfg) {
    RunConfig rc;
    rc.cfg = std::move(cfg);
    const config::Config& c = rc.cfg;

    rc.model_kind = c.require_string("model.kind");
    if (rc.model_kind == "choicenet") {
        parse_choicenet(c, rc.choicenet);
    } else if (rc.model_kind == "resnet_block" || rc.model_kind == "dense_block") {
        parse_reference(c, rc.model_kind, rc.reference);
    } else {
        throw std::invalid_argument("config: unknown model.kind '" + rc.model_kind + "'");
    }

    if (c.has("train.schedule")) rc.sgd.schedule = c.get_schedule("train.schedule");
    rc.sgd.momentum = c.get_double("train.momentum", rc.sgd.momentum);
    rc.sgd.nesterov = c.get_bool("train.nesterov", rc.sgd.nesterov);
    rc.sgd.weight_decay = c.get_double("train.weight_decay", rc.sgd.weight_decay);
    rc.sgd.batch_size = static_cast<int>(c.get_int("train.batch_size", rc.sgd.batch_size));
    rc.sgd.max_epochs = static_cast<int>(c.get_int("train.max_epochs", rc.sgd.max_epochs));
    if (c.has("train.grad_clip_norm")) rc.sgd.grad_clip_norm = c.require_double("train.grad_clip_norm");
    rc.sgd.validate();
    rc.augment = c.get_bool("train.augment", true);
    rc.augmentation.hflip_prob = c.get_double("train.hflip_prob", 0.5);
    rc.augmentation.pad = static_cast<int>(c.get_int("train.pad", 4));

    rc.data_source = c.get_string("data.source", "synthetic");
    if (rc.data_source == "synthetic") {
        rc.synthetic_train = static_cast<int>(c.require_int("data.n_train"));
        rc.synthetic_val = static_cast<int>(c.get_int("data.n_val", 0));
        rc.synthetic_test = static_cast<int>(c.get_int("data.n_test", 0));
    } else if (rc.data_source == "cifar10") {
        rc.train_files = c.get_string_list("data.train_files");
        rc.test_files = c.get_string_list("data.test_files");
        rc.n_val = static_cast<int>(c.get_int("data.n_val", 0));
    } else {
        throw std::invalid_argument("config: unknown data.source '" + rc.data_source + "'");
    }
    rc.data_seed = static_cast<uint64_t>(c.get_int("data.seed", 1));

    rc.seed = static_cast<uint64_t>(c.get_int("run.seed", 1));
    rc.threads = static_cast<int>(c.get_int("run.threads", 1));
    return rc;
}

RunConfig RunConfig::from_file(const std::string& path) { return from_config(config::Config::load(path)); }

std::unique_ptr<Model> RunConfig::build_model() const {
    if (model_kind == "choicenet") return std::make_unique<arch::ChoiceNet>(choicenet, seed);
    return arch::build_reference(reference.kind, reference, seed);
}

data::DatasetSplit RunConfig::load_data() const {
    if (data_source == "synthetic") {
        const int classes = model_kind == "choicenet" ? choicenet.num_classes : reference.num_classes;
        const int hw = model_kind == "choicenet" ? choicenet.input_hw : reference.input_hw;
        return data::generate_synthetic(synthetic_train, classes, hw, data_seed, synthetic_val, synthetic_test);
    }
    std::vector<std::string> train_paths, test_paths;
    for (const auto& p : train_files) train_paths.push_back(resolve_data_path(p));
    for (const auto& p : test_files) test_paths.push_back(resolve_data_path(p));
    data::DatasetSplit split = data::split_validation(data::load_cifar10_binary(train_paths), n_val, data_seed);
    split.test = data::load_cifar10_binary(test_paths);
    return split;
}

void write_manifest(const std::string& path, const RunConfig& rc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    std::ostringstream hash;
    hash << std::hex << config::fnv1a(rc.cfg.text());
    out << "version = " << kVersion << "\n"
        << "config_fnv1a = " << hash.str() << "\n"
        << "seed = " << rc.seed << "\n"
        << "threads = " << rc.threads << "\n"
        << "model = " << rc.model_kind << "\n";
}

}  // namespace cnet::run
