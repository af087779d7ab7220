#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cnet/checkpoint.hpp"
#include "cnet/choicenet.hpp"
#include "cnet/config.hpp"
#include "cnet/runconfig.hpp"
#include "oracles.hpp"

using namespace cnet;
using oracles::max_abs_diff;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

const char* kSampleConfig = R"(
# comment line
[model]
kind = choicenet   # trailing comment
input_hw = 8

[train]
schedule = 0:1e-2,10:1e-3
batch_size = 16
nesterov = false
widths = 4,8,8
)";

}  // namespace

TEST_CASE("config parsing: sections, comments and typed getters") {
    auto cfg = config::Config::parse(kSampleConfig);
    CHECK(cfg.require_string("model.kind") == "choicenet");
    CHECK(cfg.require_int("model.input_hw") == 8);
    CHECK(cfg.get_int("model.missing", 42) == 42);
    CHECK(cfg.get_bool("train.nesterov", true) == false);
    CHECK(cfg.get_bool("train.missing", true) == true);
    CHECK(cfg.has("train.batch_size"));
    CHECK_FALSE(cfg.has("batch_size"));  // keys are section-qualified

    auto widths = cfg.get_int_list("train.widths");
    REQUIRE(widths.size() == 3);
    CHECK(widths[0] == 4);
    CHECK(widths[2] == 8);

    auto sched = cfg.get_schedule("train.schedule");
    REQUIRE(sched.size() == 2);
    CHECK(sched[0] == std::pair<int, double>{0, 1e-2});
    CHECK(sched[1] == std::pair<int, double>{10, 1e-3});
}

TEST_CASE("config errors carry the key or line number") {
    auto cfg = config::Config::parse(kSampleConfig);
    CHECK_THROWS_WITH_AS(cfg.require_int("model.nope"), doctest::Contains("model.nope"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(cfg.require_int("model.kind"), doctest::Contains("model.kind"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(config::Config::parse("[model]\noops\n"), doctest::Contains("line 2"),
                         std::invalid_argument);
    CHECK_THROWS(config::Config::parse("[model\nk = v\n"));
    CHECK_THROWS_WITH_AS(config::Config::parse("[m]\na = 1\na = 2\n"), doctest::Contains("duplicate"),
                         std::invalid_argument);
    CHECK_THROWS(config::Config::load(temp_path("cnet_missing.cfg")));
}

TEST_CASE("fnv1a matches the published test vectors") {
    CHECK(config::fnv1a("") == 14695981039346656037ULL);
    CHECK(config::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(config::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    checkpoint::Checkpoint ckpt;
    ckpt.config_text = "[model]\nkind = choicenet\n";
    std::mt19937_64 rng(80);
    ckpt.order = {"w", "b"};
    ckpt.tensors.emplace("w", oracles::random_tensor(Shape{4, 3, 3, 3}, rng));
    ckpt.tensors.emplace("b", oracles::random_tensor(Shape{4}, rng));

    const std::string path = temp_path("cnet_test.ckpt");
    checkpoint::save(path, ckpt);
    auto loaded = checkpoint::load(path);
    CHECK(loaded.config_text == ckpt.config_text);
    CHECK(loaded.order == ckpt.order);
    CHECK(max_abs_diff(loaded.tensors.at("w"), ckpt.tensors.at("w")) == 0.0);
    CHECK(max_abs_diff(loaded.tensors.at("b"), ckpt.tensors.at("b")) == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint load rejects garbage and truncation") {
    const std::string path = temp_path("cnet_garbage.ckpt");
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    CHECK_THROWS(checkpoint::load(path));
    {
        std::ofstream out(path, std::ios::binary);
        out << "CNCK";  // magic only, then EOF
    }
    CHECK_THROWS(checkpoint::load(path));
    CHECK_THROWS(checkpoint::load(temp_path("cnet_absent.ckpt")));
    std::filesystem::remove(path);
}

TEST_CASE("capture and restore carry full model state") {
    arch::ChoiceNetConfig cfg;
    cfg.input_hw = 8;
    cfg.num_classes = 3;
    cfg.stem_channels = 4;
    cfg.blocks = {{1, 2, 2}};

    arch::ChoiceNet a(cfg, 1), b(cfg, 2);
    auto ckpt = checkpoint::capture(a, "cfg-text");
    const std::string path = temp_path("cnet_model.ckpt");
    checkpoint::save(path, ckpt);

    checkpoint::restore(b, checkpoint::load(path));
    auto ta = a.named_tensors(), tb = b.named_tensors();
    REQUIRE(ta.size() == tb.size());
    for (size_t i = 0; i < ta.size(); ++i) CHECK(max_abs_diff(*ta[i].tensor, *tb[i].tensor) == 0.0);

    // Mismatched architectures must be refused, not silently truncated.
    cfg.blocks = {{2, 2, 2}};
    arch::ChoiceNet c(cfg, 3);
    CHECK_THROWS(checkpoint::restore(c, checkpoint::load(path)));
    std::filesystem::remove(path);
}

TEST_CASE("capture appends extra tensors and rejects name collisions") {
    arch::ChoiceNetConfig cfg;
    cfg.input_hw = 8;
    cfg.num_classes = 3;
    cfg.stem_channels = 4;
    cfg.blocks = {{1, 2, 2}};
    arch::ChoiceNet net(cfg, 1);

    std::map<std::string, Tensor> extra;
    extra.emplace("data/channel_mean", Tensor::full(Shape{3}, 0.5));
    auto ckpt = checkpoint::capture(net, "", extra);
    CHECK(ckpt.tensors.count("data/channel_mean") == 1);

    std::map<std::string, Tensor> clash;
    clash.emplace("stem.conv.w", Tensor::zeros(Shape{1}));
    CHECK_THROWS(checkpoint::capture(net, "", clash));
}

TEST_CASE("run config builds models and data from a file") {
    const std::string path = temp_path("cnet_run.cfg");
    {
        std::ofstream out(path);
        out << "[model]\nkind = choicenet\ninput_hw = 8\nnum_classes = 4\nstem_channels = 6\n"
            << "modules_per_block = 1,1\nbottleneck_channels = 2,2\nbranch_channels = 2,2\n"
            << "[train]\nschedule = 0:1e-2\nbatch_size = 8\nmax_epochs = 1\naugment = false\n"
            << "[data]\nsource = synthetic\nn_train = 8\nn_test = 4\nseed = 3\n"
            << "[run]\nseed = 5\nthreads = 1\n";
    }
    auto rc = run::RunConfig::from_file(path);
    CHECK(rc.model_kind == "choicenet");
    CHECK(rc.seed == 5);
    CHECK(rc.choicenet.blocks.size() == 2);
    auto model = rc.build_model();
    CHECK(model->num_classes() == 4);
    CHECK(model->count_parameters() == model->enumerate_parameters());
    auto split = rc.load_data();
    CHECK(split.train.size() == 8);
    CHECK(split.test.size() == 4);

    const std::string manifest = temp_path("cnet_manifest.txt");
    run::write_manifest(manifest, rc);
    std::ifstream in(manifest);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("seed = 5") != std::string::npos);
    CHECK(text.find("config_fnv1a = ") != std::string::npos);
    std::filesystem::remove(path);
    std::filesystem::remove(manifest);
}

TEST_CASE("run config rejects inconsistent block lists and unknown kinds") {
    CHECK_THROWS(run::RunConfig::from_config(config::Config::parse(
        "[model]\nkind = choicenet\ninput_hw = 8\nnum_classes = 4\nstem_channels = 6\n"
        "modules_per_block = 1,1\nbottleneck_channels = 2\nbranch_channels = 2,2\n")));
    CHECK_THROWS(run::RunConfig::from_config(config::Config::parse("[model]\nkind = transformer\n")));
    CHECK_THROWS(run::RunConfig::from_config(config::Config::parse(
        "[model]\nkind = choicenet\ninput_hw = 8\nnum_classes = 4\nstem_channels = 6\n"
        "modules_per_block = 1,1\nbottleneck_channels = 2,2\nbranch_channels = 2,2\n"
        "[data]\nsource = imagenet\n")));
}
