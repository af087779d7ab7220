#include "cnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace cnet::data {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kCifarDim = 32;
constexpr size_t kRecordBytes = 1 + 3 * kCifarDim * kCifarDim;

}  // namespace

std::vector<Sample> load_cifar10_binary(const std::vector<std::string>& paths) {
    std::vector<Sample> samples;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("load_cifar10_binary: cannot open " + path);
        in.seekg(0, std::ios::end);
        const auto len = static_cast<size_t>(in.tellg());
        in.seekg(0);
        if (len == 0 || len % kRecordBytes != 0)
            throw std::runtime_error("load_cifar10_binary: " + path + " length " + std::to_string(len) +
                                     " is not a multiple of " + std::to_string(kRecordBytes));
        std::vector<unsigned char> buf(len);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
        if (!in) throw std::runtime_error("load_cifar10_binary: short read on " + path);

        const size_t records = len / kRecordBytes;
        for (size_t r = 0; r < records; ++r) {
            const unsigned char* rec = buf.data() + r * kRecordBytes;
            if (rec[0] > 9)
                throw std::runtime_error("load_cifar10_binary: " + path + " record " + std::to_string(r) +
                                         " has label byte " + std::to_string(rec[0]) + " > 9");
            Sample s;
            s.label = rec[0];
            s.image = Tensor(Shape{3, kCifarDim, kCifarDim});
            for (int64_t i = 0; i < s.image.size(); ++i)
                s.image[i] = static_cast<double>(rec[1 + i]) / 255.0;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

void save_cifar10_binary(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_cifar10_binary: cannot open " + path);
    for (const auto& s : samples) {
        if (s.image.rank() != 3 || s.image.dim(0) != 3 || s.image.dim(1) != kCifarDim || s.image.dim(2) != kCifarDim)
            throw std::invalid_argument("save_cifar10_binary: image shape " + s.image.shape().str() +
                                        " is not (3,32,32)");
        if (s.label < 0 || s.label > 9) throw std::invalid_argument("save_cifar10_binary: label out of range");
        unsigned char rec[kRecordBytes];
        rec[0] = static_cast<unsigned char>(s.label);
        for (int64_t i = 0; i < s.image.size(); ++i) {
            const double v = std::clamp(s.image[i], 0.0, 1.0);
            rec[1 + i] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!out) throw std::runtime_error("save_cifar10_binary: write failed for " + path);
}

ChannelStats compute_channel_stats(const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("compute_channel_stats: empty sample list");
    ChannelStats st;
    const int channels = samples[0].image.dim(0);
    if (channels != 3) throw std::invalid_argument("compute_channel_stats: expected 3 channels");
    const int64_t hw = static_cast<int64_t>(samples[0].image.dim(1)) * samples[0].image.dim(2);
    const double count = static_cast<double>(hw) * static_cast<double>(samples.size());
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (const auto& s : samples) {
            const double* p = s.image.data() + c * hw;
            for (int64_t i = 0; i < hw; ++i) sum += p[i];
        }
        const double mean = sum / count;
        double var = 0.0;
        for (const auto& s : samples) {
            const double* p = s.image.data() + c * hw;
            for (int64_t i = 0; i < hw; ++i) {
                const double d = p[i] - mean;
                var += d * d;
            }
        }
        st.mean[static_cast<size_t>(c)] = mean;
        st.stddev[static_cast<size_t>(c)] = std::max(std::sqrt(var / count), 1e-8);
    }
    return st;
}

DatasetSplit split_validation(std::vector<Sample> samples, int n_val, uint64_t seed) {
    if (n_val < 0 || n_val >= static_cast<int>(samples.size()))
        throw std::invalid_argument("split_validation: n_val " + std::to_string(n_val) +
                                    " out of range for " + std::to_string(samples.size()) + " samples");
    std::mt19937_64 rng(seed);
    std::shuffle(samples.begin(), samples.end(), rng);
    DatasetSplit split;
    const size_t n_train = samples.size() - static_cast<size_t>(n_val);
    split.train.assign(std::make_move_iterator(samples.begin()),
                       std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(n_train)));
    split.val.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                     std::make_move_iterator(samples.end()));
    split.stats = compute_channel_stats(split.train);
    return split;
}

Sample normalize_sample(const Sample& s, const ChannelStats& stats) {
    Sample out;
    out.label = s.label;
    out.image = Tensor(s.image.shape());
    const int64_t hw = static_cast<int64_t>(s.image.dim(1)) * s.image.dim(2);
    for (int c = 0; c < 3; ++c) {
        const double m = stats.mean[static_cast<size_t>(c)];
        const double sd = stats.stddev[static_cast<size_t>(c)];
        const double* in = s.image.data() + c * hw;
        double* o = out.image.data() + c * hw;
        for (int64_t i = 0; i < hw; ++i) o[i] = (in[i] - m) / sd;
    }
    return out;
}

Sample augment(const Sample& s, const AugmentationPolicy& policy, const ChannelStats& stats, std::mt19937_64& rng) {
    const int h = s.image.dim(1), w = s.image.dim(2);
    Sample out;
    out.label = s.label;
    out.image = Tensor(s.image.shape());

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool flip = unit(rng) < policy.hflip_prob;
    std::uniform_int_distribution<int> off(0, 2 * policy.pad);
    const int oy = policy.pad > 0 ? off(rng) : 0;
    const int ox = policy.pad > 0 ? off(rng) : 0;

    // Crop window (oy,ox) in the zero-padded image; source pixel is
    // (y + oy - pad, x + ox - pad), zero outside.
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int sy = y + oy - policy.pad;
                int sx = x + ox - policy.pad;
                double v = 0.0;
                if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                    if (flip) sx = w - 1 - sx;
                    v = s.image[(static_cast<int64_t>(c) * h + sy) * w + sx];
                }
                out.image[(static_cast<int64_t>(c) * h + y) * w + x] = v;
            }
        }
    }
    if (policy.normalize) out = normalize_sample(out, stats);
    return out;
}

DatasetSplit generate_synthetic(int n_train, int num_classes, int resolution, uint64_t seed,
                                int n_val, int n_test) {
    if (num_classes < 2) throw std::invalid_argument("generate_synthetic: need at least two classes");
    if (n_train < num_classes) throw std::invalid_argument("generate_synthetic: n_train < num_classes");
    std::mt19937_64 rng(seed);

    // Per-class grating parameters: orientation, frequency and phase, with a
    // small per-channel phase shift.
    struct ClassPattern {
        double fx, fy, phase;
    };
    std::vector<ClassPattern> patterns;
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
    for (int k = 0; k < num_classes; ++k) {
        const double angle = kPi * static_cast<double>(k) / num_classes;
        const double freq = 1.0 + static_cast<double>(k % 3);
        patterns.push_back({freq * std::cos(angle), freq * std::sin(angle), phase_dist(rng)});
    }

    std::normal_distribution<double> noise(0.0, 0.05);
    auto make_sample = [&](int label) {
        Sample s;
        s.label = label;
        s.image = Tensor(Shape{3, resolution, resolution});
        const auto& p = patterns[static_cast<size_t>(label)];
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < resolution; ++y) {
                for (int x = 0; x < resolution; ++x) {
                    const double arg = 2.0 * kPi * (p.fx * x + p.fy * y) / resolution + p.phase + 0.5 * c;
                    double v = 0.5 + 0.4 * std::sin(arg) + noise(rng);
                    s.image[(static_cast<int64_t>(c) * resolution + y) * resolution + x] = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        return s;
    };

    auto fill = [&](std::vector<Sample>& out, int n) {
        for (int i = 0; i < n; ++i) out.push_back(make_sample(i % num_classes));
        std::shuffle(out.begin(), out.end(), rng);
    };

    DatasetSplit split;
    fill(split.train, n_train);
    fill(split.val, n_val);
    fill(split.test, n_test);
    split.stats = compute_channel_stats(split.train);
    return split;
}

}  // namespace cnet::data
