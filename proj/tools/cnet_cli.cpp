#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "cnet/analysis.hpp"
#include "cnet/checkpoint.hpp"
#include "cnet/gradcheck.hpp"
#include "cnet/parallel.hpp"
#include "cnet/runconfig.hpp"
#include "cnet/simd.hpp"

namespace fs = std::filesystem;
using namespace cnet;

namespace {

run::RunConfig load_run(const std::string& config_path, int seed_override, int threads_override) {
    run::RunConfig rc = run::RunConfig::from_file(config_path);
    if (seed_override >= 0) rc.seed = static_cast<uint64_t>(seed_override);
    if (threads_override > 0) rc.threads = threads_override;
    set_num_threads(rc.threads);
    return rc;
}

std::map<std::string, Tensor> stats_tensors(const data::ChannelStats& stats) {
    Tensor mean{Shape{3}}, stddev{Shape{3}};
    for (int c = 0; c < 3; ++c) {
        mean[c] = stats.mean[static_cast<size_t>(c)];
        stddev[c] = stats.stddev[static_cast<size_t>(c)];
    }
    return {{"data/channel_mean", std::move(mean)}, {"data/channel_std", std::move(stddev)}};
}

data::ChannelStats stats_from_checkpoint(const checkpoint::Checkpoint& ckpt) {
    data::ChannelStats stats;
    auto m = ckpt.tensors.find("data/channel_mean");
    auto s = ckpt.tensors.find("data/channel_std");
    if (m == ckpt.tensors.end() || s == ckpt.tensors.end())
        throw std::runtime_error("checkpoint carries no channel statistics");
    for (int c = 0; c < 3; ++c) {
        stats.mean[static_cast<size_t>(c)] = m->second[c];
        stats.stddev[static_cast<size_t>(c)] = s->second[c];
    }
    return stats;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, int seed_override,
              int threads_override) {
    run::RunConfig rc = load_run(config_path, seed_override, threads_override);
    fs::create_directories(out_dir);

    data::DatasetSplit split = rc.load_data();
    std::unique_ptr<Model> model = rc.build_model();
    std::printf("model=%s params=%lld train=%zu val=%zu test=%zu seed=%llu isa=%s\n", rc.model_kind.c_str(),
                static_cast<long long>(model->count_parameters()), split.train.size(), split.val.size(),
                split.test.size(), static_cast<unsigned long long>(rc.seed),
                simd::isa_name(simd::active_isa()).c_str());

    training::SGD opt(rc.sgd);
    const data::AugmentationPolicy* aug = rc.augment ? &rc.augmentation : nullptr;
    const std::vector<data::Sample>& val = split.val.empty() ? split.test : split.val;
    if (val.empty()) throw std::runtime_error("train: no validation or test split available");

    std::vector<training::EpochRecord> history;
    double best_val_err = 1e300;
    for (int epoch = 0; epoch < rc.sgd.max_epochs; ++epoch) {
        training::Metrics tr = training::train_epoch(*model, opt, split.train, aug, split.stats, epoch, rc.seed);
        training::Metrics va = training::evaluate(*model, val, split.stats, rc.sgd.batch_size);
        training::EpochRecord rec{epoch, training::lr_at_epoch(rc.sgd, epoch), tr.loss, tr.error_rate, va.loss,
                                  va.error_rate};
        history.push_back(rec);
        std::printf("epoch %3d lr=%g train_loss=%.4f train_err=%.2f%% val_loss=%.4f val_err=%.2f%%\n", epoch,
                    rec.lr, rec.train_loss, rec.train_err, rec.val_loss, rec.val_err);
        if (va.error_rate < best_val_err) {
            best_val_err = va.error_rate;
            checkpoint::save(out_dir + "/best.ckpt",
                             checkpoint::capture(*model, rc.cfg.text(), stats_tensors(split.stats)));
        }
    }
    checkpoint::save(out_dir + "/last.ckpt", checkpoint::capture(*model, rc.cfg.text(), stats_tensors(split.stats)));
    training::write_metrics_csv(out_dir + "/metrics.csv", history);
    run::write_manifest(out_dir + "/manifest.txt", rc);

    if (!split.test.empty()) {
        training::Metrics te = training::evaluate(*model, split.test, split.stats, rc.sgd.batch_size);
        std::printf("final test_err=%.2f%% (best val_err=%.2f%% at epoch %d)\n", te.error_rate, best_val_err,
                    training::best_checkpoint_select(history));
    }
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path, int threads_override) {
    run::RunConfig rc = load_run(config_path, -1, threads_override);
    checkpoint::Checkpoint ckpt = checkpoint::load(ckpt_path);
    std::unique_ptr<Model> model = rc.build_model();
    checkpoint::restore(*model, ckpt);
    data::ChannelStats stats = stats_from_checkpoint(ckpt);

    data::DatasetSplit split = rc.load_data();
    const std::vector<data::Sample>& eval_set = split.test.empty() ? split.val : split.test;
    if (eval_set.empty()) throw std::runtime_error("eval: no test or validation split available");
    training::Metrics m = training::evaluate(*model, eval_set, stats, rc.sgd.batch_size);
    std::printf("eval loss=%.6f err=%.2f%% n=%zu\n", m.loss, m.error_rate, eval_set.size());
    return 0;
}

int cmd_gradcheck(const std::string& config_path, int batch, int seed_override, const std::string& out_csv) {
    run::RunConfig rc = load_run(config_path, seed_override, 0);
    std::unique_ptr<Model> model = rc.build_model();
    gradcheck::Report report = gradcheck::grad_check(*model, batch, rc.seed);
    std::cout << report.to_csv();
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        out << report.to_csv();
    }
    std::printf("gradcheck %s (tolerance %g)\n", report.pass ? "PASS" : "FAIL", report.tolerance);
    return report.pass ? 0 : 1;
}

int cmd_analyze(const std::string& config_path, const std::string& ckpt_path, int block, double threshold,
                const std::string& out_csv) {
    run::RunConfig rc = load_run(config_path, -1, 0);
    if (rc.model_kind != "choicenet")
        throw std::runtime_error("analyze: branch activity is defined for model.kind = choicenet");
    arch::ChoiceNet net(rc.choicenet, rc.seed);
    if (!ckpt_path.empty()) checkpoint::restore(net, checkpoint::load(ckpt_path));

    const int first = block >= 0 ? block : 0;
    const int last = block >= 0 ? block : net.block_count() - 1;
    for (int b = first; b <= last; ++b) {
        analysis::ActivityReport report = analysis::branch_activity(net, b, threshold);
        std::printf("block %d (|w| in [%g, %g]%s):\n", b, report.weight_min, report.weight_max,
                    report.degenerate ? ", degenerate" : "");
        std::cout << analysis::render_activity_grid(report);
        if (!out_csv.empty() && b == first) analysis::write_activity_csv(out_csv, report);
    }
    return 0;
}

int cmd_count_params(const std::string& config_path) {
    run::RunConfig rc = load_run(config_path, -1, 0);
    std::unique_ptr<Model> model = rc.build_model();
    ParamBreakdown breakdown;
    const int64_t analytic = model->count_parameters(&breakdown);
    const int64_t enumerated = model->enumerate_parameters();
    for (const auto& [name, n] : breakdown) std::printf("%-16s %10lld\n", name.c_str(), static_cast<long long>(n));
    std::printf("%-16s %10lld (analytic)\n", "total", static_cast<long long>(analytic));
    std::printf("%-16s %10lld (enumerated)\n", "total", static_cast<long long>(enumerated));
    return analytic == enumerated ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cnet: small CNN training and analysis tool"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "run", ckpt_path, out_csv;
    int seed_override = -1, threads_override = 0, batch = 4, block = -1;
    double threshold = 0.4;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "config file");
        if (needs_config) opt->required();
        sub->add_option("--threads", threads_override, "worker threads (overrides run.threads)");
    };

    CLI::App* train = app.add_subcommand("train", "train a model and write metrics + checkpoints");
    add_common(train);
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--seed", seed_override, "override run.seed");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(eval);
    eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    add_common(gc);
    gc->add_option("--batch", batch, "batch size for the check");
    gc->add_option("--seed", seed_override, "override run.seed");
    gc->add_option("--out", out_csv, "write the per-group CSV here");

    CLI::App* an = app.add_subcommand("analyze", "branch activity report");
    add_common(an);
    an->add_option("--checkpoint", ckpt_path, "checkpoint file (optional: fresh init otherwise)");
    an->add_option("--block", block, "block index (default: all blocks)");
    an->add_option("--threshold", threshold, "activity threshold on normalized |w|");
    an->add_option("--out", out_csv, "write the activity CSV here");

    CLI::App* cp = app.add_subcommand("count-params", "analytic and enumerated parameter counts");
    add_common(cp);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, out_dir, seed_override, threads_override);
        if (eval->parsed()) return cmd_eval(config_path, ckpt_path, threads_override);
        if (gc->parsed()) return cmd_gradcheck(config_path, batch, seed_override, out_csv);
        if (an->parsed()) return cmd_analyze(config_path, ckpt_path, block, threshold, out_csv);
        if (cp->parsed()) return cmd_count_params(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
