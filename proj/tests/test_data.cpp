#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cnet/data.hpp"
#include "oracles.hpp"

using namespace cnet;
using oracles::max_abs_diff;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Images whose pixels are exact byte fractions survive the byte round trip.
std::vector<data::Sample> quantized_samples(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255), label(0, 9);
    std::vector<data::Sample> out;
    for (int i = 0; i < n; ++i) {
        data::Sample s;
        s.label = label(rng);
        s.image = Tensor(Shape{3, 32, 32});
        for (int64_t j = 0; j < s.image.size(); ++j) s.image[j] = byte(rng) / 255.0;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("binary save/load round trip is exact for byte-quantized images") {
    const std::string path = temp_path("cnet_roundtrip.bin");
    auto samples = quantized_samples(5, 70);
    data::save_cifar10_binary(path, samples);
    CHECK(std::filesystem::file_size(path) == 5 * 3073);

    auto loaded = data::load_cifar10_binary({path});
    REQUIRE(loaded.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].label == samples[i].label);
        CHECK(max_abs_diff(loaded[i].image, samples[i].image) == 0.0);
    }
    std::filesystem::remove(path);
}

TEST_CASE("loader rejects malformed files") {
    const std::string path = temp_path("cnet_badfile.bin");
    {
        std::ofstream out(path, std::ios::binary);
        const char junk[100] = {};
        out.write(junk, sizeof junk);  // not a multiple of 3073
    }
    CHECK_THROWS(data::load_cifar10_binary({path}));
    {
        std::ofstream out(path, std::ios::binary);
        std::vector<char> rec(3073, 0);
        rec[0] = 11;  // label byte out of range
        out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    }
    CHECK_THROWS(data::load_cifar10_binary({path}));
    CHECK_THROWS(data::load_cifar10_binary({temp_path("cnet_missing.bin")}));
    std::filesystem::remove(path);
}

TEST_CASE("channel statistics match a hand computation") {
    data::Sample a, b;
    a.image = Tensor(Shape{3, 2, 2});
    b.image = Tensor(Shape{3, 2, 2});
    // Channel 0: values {0,0,0,0} and {1,1,1,1} -> mean .5, var .25.
    for (int i = 0; i < 4; ++i) {
        a.image[i] = 0.0;
        b.image[i] = 1.0;
    }
    // Channels 1, 2: constant 0.25 -> stddev clamps to the 1e-8 floor.
    for (int64_t i = 4; i < 12; ++i) {
        a.image[i] = 0.25;
        b.image[i] = 0.25;
    }
    auto st = data::compute_channel_stats({a, b});
    CHECK(st.mean[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(st.stddev[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(st.mean[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(st.stddev[1] == doctest::Approx(1e-8).epsilon(1e-6));
    CHECK_THROWS(data::compute_channel_stats({}));
}

TEST_CASE("validation split is seeded, sized and computes stats on train only") {
    auto samples = quantized_samples(20, 71);
    auto s1 = data::split_validation(samples, 6, 5);
    auto s2 = data::split_validation(samples, 6, 5);
    auto s3 = data::split_validation(samples, 6, 6);
    CHECK(s1.train.size() == 14);
    CHECK(s1.val.size() == 6);
    CHECK(max_abs_diff(s1.train[0].image, s2.train[0].image) == 0.0);
    bool same_order = true;
    for (size_t i = 0; i < s1.train.size() && same_order; ++i)
        same_order = s1.train[i].label == s3.train[i].label &&
                     max_abs_diff(s1.train[i].image, s3.train[i].image) == 0.0;
    CHECK_FALSE(same_order);
    auto direct = data::compute_channel_stats(s1.train);
    CHECK(s1.stats.mean == direct.mean);
    CHECK_THROWS(data::split_validation(samples, 20, 0));
}

TEST_CASE("normalization standardizes each channel") {
    auto samples = quantized_samples(8, 72);
    auto stats = data::compute_channel_stats(samples);
    data::Sample n = data::normalize_sample(samples[0], stats);
    const int64_t hw = 32 * 32;
    for (int c = 0; c < 3; ++c)
        CHECK(n.image[c * hw] ==
              doctest::Approx((samples[0].image[c * hw] - stats.mean[static_cast<size_t>(c)]) /
                              stats.stddev[static_cast<size_t>(c)])
                  .epsilon(1e-14));
}

TEST_CASE("augmentation with flip only mirrors the image") {
    auto samples = quantized_samples(1, 73);
    data::AugmentationPolicy policy;
    policy.hflip_prob = 1.0;
    policy.pad = 0;
    policy.normalize = false;
    std::mt19937_64 rng(1);
    data::Sample flipped = data::augment(samples[0], policy, {}, rng);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(flipped.image[(static_cast<int64_t>(c) * 32 + y) * 32 + x] ==
                      samples[0].image[(static_cast<int64_t>(c) * 32 + y) * 32 + (31 - x)]);

    policy.hflip_prob = 0.0;
    data::Sample same = data::augment(samples[0], policy, {}, rng);
    CHECK(max_abs_diff(same.image, samples[0].image) == 0.0);
}

TEST_CASE("pad-and-crop augmentation applies one consistent shift with zero fill") {
    auto samples = quantized_samples(1, 74);
    data::AugmentationPolicy policy;
    policy.hflip_prob = 0.0;
    policy.pad = 3;
    policy.normalize = false;
    std::mt19937_64 rng(9);
    data::Sample aug = data::augment(samples[0], policy, {}, rng);

    int consistent_shifts = 0;
    for (int dy = -3; dy <= 3; ++dy) {
        for (int dx = -3; dx <= 3; ++dx) {
            bool ok = true;
            for (int c = 0; c < 3 && ok; ++c)
                for (int y = 0; y < 32 && ok; ++y)
                    for (int x = 0; x < 32 && ok; ++x) {
                        const int sy = y + dy, sx = x + dx;
                        const double want = (sy >= 0 && sy < 32 && sx >= 0 && sx < 32)
                                                ? samples[0].image[(static_cast<int64_t>(c) * 32 + sy) * 32 + sx]
                                                : 0.0;
                        ok = aug.image[(static_cast<int64_t>(c) * 32 + y) * 32 + x] == want;
                    }
            if (ok) ++consistent_shifts;
        }
    }
    CHECK(consistent_shifts == 1);
}

TEST_CASE("synthetic data is deterministic, balanced and in range") {
    auto s1 = data::generate_synthetic(40, 4, 8, 21, 8, 12);
    auto s2 = data::generate_synthetic(40, 4, 8, 21, 8, 12);
    auto s3 = data::generate_synthetic(40, 4, 8, 22, 8, 12);
    CHECK(s1.train.size() == 40);
    CHECK(s1.val.size() == 8);
    CHECK(s1.test.size() == 12);
    CHECK(max_abs_diff(s1.train[0].image, s2.train[0].image) == 0.0);
    CHECK(max_abs_diff(s1.train[0].image, s3.train[0].image) > 0.0);

    int counts[4] = {0, 0, 0, 0};
    for (const auto& s : s1.train) {
        REQUIRE(s.label >= 0);
        REQUIRE(s.label < 4);
        ++counts[s.label];
        for (int64_t i = 0; i < s.image.size(); ++i) {
            CHECK(s.image[i] >= 0.0);
            CHECK(s.image[i] <= 1.0);
        }
    }
    for (int k = 0; k < 4; ++k) CHECK(counts[k] == 10);
    CHECK_THROWS(data::generate_synthetic(1, 4, 8, 0));
    CHECK_THROWS(data::generate_synthetic(40, 1, 8, 0));
}

TEST_CASE("synthetic classes separate under a nearest-centroid probe") {
    auto split = data::generate_synthetic(200, 4, 8, 23, 0, 80);
    const int64_t len = split.train[0].image.size();
    std::vector<std::vector<double>> centroid(4, std::vector<double>(static_cast<size_t>(len), 0.0));
    std::vector<int> n(4, 0);
    for (const auto& s : split.train) {
        ++n[static_cast<size_t>(s.label)];
        for (int64_t i = 0; i < len; ++i) centroid[static_cast<size_t>(s.label)][static_cast<size_t>(i)] += s.image[i];
    }
    for (int k = 0; k < 4; ++k)
        for (auto& v : centroid[static_cast<size_t>(k)]) v /= n[static_cast<size_t>(k)];

    int correct = 0;
    for (const auto& s : split.test) {
        int best = -1;
        double best_d = 1e300;
        for (int k = 0; k < 4; ++k) {
            double d = 0.0;
            for (int64_t i = 0; i < len; ++i) {
                const double diff = s.image[i] - centroid[static_cast<size_t>(k)][static_cast<size_t>(i)];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (best == s.label) ++correct;
    }
    // Chance is 25%; the gratings should be nearly linearly separable.
    CHECK(correct >= static_cast<int>(0.9 * split.test.size()));
}
