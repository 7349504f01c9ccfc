#pragma once

// Learnable stand-in for CIFAR: class k lights an 8x8 block at cell k of a
// 4x4 grid, in channel k % 3, over uniform noise.

#include "fccnn/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

namespace synthetic {

inline fccnn::LabeledImageSet blocks(std::size_t n, std::size_t classes, std::uint64_t seed,
                                     fccnn::Split split = fccnn::Split::train) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> noise(0.0f, 0.35f);
    fccnn::LabeledImageSet set;
    set.num_classes = classes;
    set.split = split;
    set.images = fccnn::ComplexTensor(fccnn::Shape{n, 3, 32, 32});
    set.labels.resize(n);
    auto re = set.images.re();
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(rng() % classes);
        set.labels[i] = k;
        float* img = re.data() + i * 3072;
        for (std::size_t p = 0; p < 3072; ++p) img[p] = noise(rng);
        const std::size_t cell = static_cast<std::size_t>(k) % 16, c = static_cast<std::size_t>(k) % 3;
        const std::size_t y0 = (cell / 4) * 8, x0 = (cell % 4) * 8;
        for (std::size_t y = y0; y < y0 + 8; ++y)
            for (std::size_t x = x0; x < x0 + 8; ++x) img[c * 1024 + y * 32 + x] += 0.6f;
    }
    return set;
}

inline void write_records(const std::filesystem::path& file, const fccnn::LabeledImageSet& set, std::size_t begin,
                          std::size_t end) {
    std::ofstream out(file, std::ios::binary);
    const auto re = set.images.re();
    for (std::size_t i = begin; i < end; ++i) {
        out.put(static_cast<char>(set.labels[i]));
        for (std::size_t p = 0; p < 3072; ++p) {
            const float v = std::min(1.0f, std::max(0.0f, re[i * 3072 + p]));
            out.put(static_cast<char>(static_cast<unsigned char>(v * 255.0f + 0.5f)));
        }
    }
}

/// CIFAR-10 binary layout: five train batches plus test_batch.bin.
inline void write_cifar10(const std::filesystem::path& dir, std::size_t train_n, std::size_t test_n,
                          std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const auto train = blocks(train_n, 10, seed);
    for (std::size_t b = 0; b < 5; ++b)
        write_records(dir / ("data_batch_" + std::to_string(b + 1) + ".bin"), train, b * train_n / 5,
                      (b + 1) * train_n / 5);
    const auto test = blocks(test_n, 10, seed + 1, fccnn::Split::test);
    write_records(dir / "test_batch.bin", test, 0, test_n);
}

} // namespace synthetic
