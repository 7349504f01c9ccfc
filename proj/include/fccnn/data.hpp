#pragma once

#include "fccnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace fccnn {

enum class Encoding { rgb, lab, sliding };
enum class Split { train, test };
enum class CifarVariant { cifar10, cifar100 };

std::string_view to_string(Encoding encoding);
std::string_view to_string(Split split);
Encoding parse_encoding(std::string_view text);
Split parse_split(std::string_view text);

struct LabeledImageSet {
    ComplexTensor images;  // [N, 3, 32, 32]
    std::vector<int> labels;
    std::size_t num_classes = 10;
    Encoding encoding = Encoding::rgb;
    Split split = Split::train;

    std::size_t size() const noexcept { return labels.size(); }
    void validate() const;
    LabeledImageSet subset(std::span<const std::size_t> indices) const;
};

/// Binary batch files: data_batch_{1..5}.bin / test_batch.bin for CIFAR-10,
/// train.bin / test.bin for CIFAR-100. `dir` may also be the parent of the
/// archive's cifar-10-batches-bin or cifar-100-binary directory.
std::vector<std::filesystem::path> cifar_files(const std::filesystem::path& dir, CifarVariant variant, Split split);

/// Record count of a split, from file sizes only.
std::size_t cifar_record_count(const std::filesystem::path& dir, CifarVariant variant, Split split);

/// Pixels scaled to [0, 1]; CIFAR-100 uses the fine label.
LabeledImageSet load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split);

/// Loads only the records at `indices` (global record order across files).
LabeledImageSet load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split,
                           std::span<const std::size_t> indices);

/// Image tensor [N,3,32,32] plus a label tensor [N] whose real plane holds the
/// class ids.
LabeledImageSet load_ctns_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                                  std::size_t num_classes = 10, Split split = Split::train,
                                  Encoding encoding = Encoding::rgb);

/// <dir>/<split>_images.ctns and <dir>/<split>_labels.ctns
LabeledImageSet load_ctns_dataset(const std::filesystem::path& dir, Split split, std::size_t num_classes = 10);

void save_ctns_dataset(const LabeledImageSet& set, const std::filesystem::path& images,
                       const std::filesystem::path& labels);

/// rgb is the identity. lab converts sRGB to CIELAB (D65) and packs
/// (L/100, a/110 + i b/110, chroma/155 + i hue/pi). sliding maps each channel
/// value p to p * exp(i 2 pi p).
LabeledImageSet encode(const LabeledImageSet& images, Encoding target);
ComplexTensor encode_images(const ComplexTensor& rgb, Encoding target);

/// CIELAB of one sRGB triple in [0, 1].
struct Lab {
    double l, a, b;
};
Lab srgb_to_lab(double r, double g, double b);

/// `count` distinct indices out of [0, n), seeded, in sorted order.
std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t count, std::uint64_t seed);

} // namespace fccnn
