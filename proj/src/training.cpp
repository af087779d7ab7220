#include "cnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cnet/simd.hpp"

namespace cnet::training {

void SGDConfig::validate() const {
    if (schedule.empty()) throw std::invalid_argument("SGDConfig: empty learning-rate schedule");
    for (size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i].first <= schedule[i - 1].first)
            throw std::invalid_argument("SGDConfig: schedule boundaries must be strictly increasing");
        if (schedule[i].second >= schedule[i - 1].second)
            throw std::invalid_argument("SGDConfig: learning rates must be strictly decreasing");
    }
    if (batch_size < 1) throw std::invalid_argument("SGDConfig: batch_size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("SGDConfig: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw std::invalid_argument("SGDConfig: weight_decay must be >= 0");
    if (grad_clip_norm && *grad_clip_norm <= 0.0) throw std::invalid_argument("SGDConfig: grad_clip_norm must be > 0");
}

double lr_at_epoch(const SGDConfig& cfg, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at_epoch: epoch must be >= 0");
    double lr = cfg.schedule.front().second;
    for (const auto& [boundary, rate] : cfg.schedule)
        if (epoch >= boundary) lr = rate;
    return lr;
}

void SGD::step(const std::vector<NamedTensor>& params,
               const std::map<std::string, const Tensor*>& grads, double lr) {
    for (const auto& p : params) {
        if (grads.find(p.name) == grads.end())
            throw std::runtime_error("sgd_step: missing gradient for parameter '" + p.name + "'");
    }

    double clip_scale = 1.0;
    if (cfg_.grad_clip_norm) {
        double sq = 0.0;
        for (const auto& p : params) {
            const Tensor& g = *grads.at(p.name);
            sq += simd::ops().dot(static_cast<int>(g.size()), g.data(), g.data());
        }
        const double norm = std::sqrt(sq);
        if (norm > *cfg_.grad_clip_norm) clip_scale = *cfg_.grad_clip_norm / norm;
    }

    for (const auto& p : params) {
        Tensor& param = *p.tensor;
        const Tensor& grad = *grads.at(p.name);
        auto [it, inserted] = buffers_.try_emplace(p.name, param.shape());
        Tensor& v = it->second;
        if (!inserted && !(v.shape() == param.shape()))
            throw std::runtime_error("sgd_step: momentum buffer shape mismatch for '" + p.name + "'");
        for (int64_t i = 0; i < param.size(); ++i) {
            const double g = clip_scale * grad[i] + cfg_.weight_decay * param[i];
            v[i] = cfg_.momentum * v[i] + g;
            const double update = cfg_.nesterov ? cfg_.momentum * v[i] + g : v[i];
            param[i] -= lr * update;
        }
    }
}

Tensor make_batch(const std::vector<data::Sample>& samples, const std::vector<size_t>& idx,
                  size_t first, size_t count, std::vector<int>& labels_out) {
    if (count == 0) throw std::invalid_argument("make_batch: empty batch");
    const Shape& img = samples[idx[first]].image.shape();
    Tensor batch(Shape{static_cast<int>(count), img[0], img[1], img[2]});
    const int64_t len = samples[idx[first]].image.size();
    labels_out.resize(count);
    for (size_t i = 0; i < count; ++i) {
        const data::Sample& s = samples[idx[first + i]];
        std::memcpy(batch.data() + static_cast<int64_t>(i) * len, s.image.data(),
                    static_cast<size_t>(len) * sizeof(double));
        labels_out[i] = s.label;
    }
    return batch;
}

namespace {

struct BatchResult {
    double loss = 0.0;
    int correct = 0;
};

int count_correct(const Tensor& logits, const std::vector<int>& labels) {
    int correct = 0;
    for (int i = 0; i < logits.dim(0); ++i) {
        int best = 0;
        for (int k = 1; k < logits.dim(1); ++k)
            if (logits.at2(i, k) > logits.at2(i, best)) best = k;
        if (best == labels[static_cast<size_t>(i)]) ++correct;
    }
    return correct;
}

}  // namespace

Metrics train_epoch(Model& model, SGD& opt, const std::vector<data::Sample>& train,
                    const data::AugmentationPolicy* augmentation, const data::ChannelStats& stats,
                    int epoch, uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("train_epoch: empty dataset");
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch + 1));

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    const double lr = lr_at_epoch(opt.config(), epoch);
    const size_t bs = static_cast<size_t>(opt.config().batch_size);
    auto params = model.parameters();

    double loss_sum = 0.0;
    int correct = 0;
    for (size_t first = 0; first < order.size(); first += bs) {
        const size_t count = std::min(bs, order.size() - first);
        std::vector<data::Sample> prepared(count);
        for (size_t i = 0; i < count; ++i) {
            const data::Sample& s = train[order[first + i]];
            prepared[i] = augmentation ? data::augment(s, *augmentation, stats, rng)
                                       : data::normalize_sample(s, stats);
        }
        std::vector<size_t> ident(count);
        std::iota(ident.begin(), ident.end(), size_t{0});
        std::vector<int> labels;
        Tensor batch = make_batch(prepared, ident, 0, count, labels);

        autograd::Tape tape;
        autograd::Value in = tape.leaf(std::move(batch), "input");
        autograd::Value logits = model.forward(tape, in, /*training=*/true, rng);
        autograd::Value loss = autograd::softmax_cross_entropy(tape, logits, labels);
        tape.backward(loss);

        loss_sum += tape.value(loss).item() * static_cast<double>(count);
        correct += count_correct(tape.value(logits), labels);

        std::map<std::string, const Tensor*> grads;
        for (const auto& p : params) {
            const Tensor* g = tape.grad_for(p.tensor);
            if (g) grads[p.name] = g;
        }
        opt.step(params, grads, lr);
    }

    Metrics m;
    m.loss = loss_sum / static_cast<double>(train.size());
    m.error_rate = 100.0 * (1.0 - static_cast<double>(correct) / static_cast<double>(train.size()));
    return m;
}

Metrics evaluate(Model& model, const std::vector<data::Sample>& samples,
                 const data::ChannelStats& stats, int batch_size) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
    if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
    std::mt19937_64 rng(0);  // unused in eval mode
    double loss_sum = 0.0;
    int correct = 0;
    for (size_t first = 0; first < samples.size(); first += static_cast<size_t>(batch_size)) {
        const size_t count = std::min(static_cast<size_t>(batch_size), samples.size() - first);
        std::vector<data::Sample> prepared(count);
        for (size_t i = 0; i < count; ++i) prepared[i] = data::normalize_sample(samples[first + i], stats);
        std::vector<size_t> ident(count);
        std::iota(ident.begin(), ident.end(), size_t{0});
        std::vector<int> labels;
        Tensor batch = make_batch(prepared, ident, 0, count, labels);

        autograd::Tape tape;
        autograd::Value in = tape.leaf(std::move(batch), "input");
        autograd::Value logits = model.forward(tape, in, /*training=*/false, rng);
        auto ce = kernels::softmax_cross_entropy(tape.value(logits), labels);
        loss_sum += ce.loss * static_cast<double>(count);
        correct += count_correct(tape.value(logits), labels);
    }
    Metrics m;
    m.loss = loss_sum / static_cast<double>(samples.size());
    m.error_rate = 100.0 * (1.0 - static_cast<double>(correct) / static_cast<double>(samples.size()));
    return m;
}

int best_checkpoint_select(const std::vector<EpochRecord>& history) {
    if (history.empty()) throw std::invalid_argument("best_checkpoint_select: empty history");
    int best = 0;
    for (size_t i = 1; i < history.size(); ++i)
        if (history[i].val_err < history[static_cast<size_t>(best)].val_err) best = static_cast<int>(i);
    return best;
}

std::string metrics_csv(const std::vector<EpochRecord>& history) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,lr,train_loss,train_err,val_loss,val_err\n";
    for (const auto& r : history)
        os << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.train_err << "," << r.val_loss << ","
           << r.val_err << "\n";
    return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << metrics_csv(history);
}

}  // namespace cnet::training
