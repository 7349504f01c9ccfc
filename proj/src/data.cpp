#include "rng.hpp"
#include "fccnn/data.hpp"

#include "fccnn/ctns.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace fccnn {

namespace {

using detail::splitmix64;
using detail::unit_uniform;

constexpr std::size_t kPixels = 3 * 32 * 32;

std::size_t label_bytes(CifarVariant v) { return v == CifarVariant::cifar10 ? 1 : 2; }
std::size_t record_bytes(CifarVariant v) { return label_bytes(v) + kPixels; }
std::size_t class_count(CifarVariant v) { return v == CifarVariant::cifar10 ? 10 : 100; }

std::filesystem::path resolve_dir(const std::filesystem::path& dir, CifarVariant variant) {
    const auto probe = variant == CifarVariant::cifar10 ? "data_batch_1.bin" : "train.bin";
    const auto nested = dir / (variant == CifarVariant::cifar10 ? "cifar-10-batches-bin" : "cifar-100-binary");
    if (!std::filesystem::exists(dir / probe) && std::filesystem::exists(nested / probe)) return nested;
    return dir;
}


} // namespace

std::string_view to_string(Encoding encoding) {
    switch (encoding) {
    case Encoding::rgb: return "rgb";
    case Encoding::lab: return "lab";
    case Encoding::sliding: return "sliding";
    }
    return "?";
}

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

Encoding parse_encoding(std::string_view text) {
    if (text == "rgb") return Encoding::rgb;
    if (text == "lab") return Encoding::lab;
    if (text == "sliding") return Encoding::sliding;
    throw argument_error("unknown encoding '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "test") return Split::test;
    throw argument_error("unknown split '" + std::string(text) + "'");
}

void LabeledImageSet::validate() const {
    const auto& s = images.shape();
    if (s.rank() != 4 || s[1] != 3 || s[2] != 32 || s[3] != 32) {
        throw shape_error("images must be [N,3,32,32], got " + s.to_string());
    }
    if (s[0] != labels.size()) {
        throw shape_error(std::to_string(s[0]) + " images but " + std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw format_error("label " + std::to_string(labels[i]) + " at record " + std::to_string(i) +
                               " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

LabeledImageSet LabeledImageSet::subset(std::span<const std::size_t> indices) const {
    LabeledImageSet out;
    out.images = gather_rows(images, indices);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels.at(i));
    out.num_classes = num_classes;
    out.encoding = encoding;
    out.split = split;
    return out;
}

std::vector<std::filesystem::path> cifar_files(const std::filesystem::path& dir, CifarVariant variant, Split split) {
    const auto root = resolve_dir(dir, variant);
    std::vector<std::filesystem::path> files;
    if (variant == CifarVariant::cifar10) {
        if (split == Split::train) {
            for (int i = 1; i <= 5; ++i) files.push_back(root / ("data_batch_" + std::to_string(i) + ".bin"));
        } else {
            files.push_back(root / "test_batch.bin");
        }
    } else {
        files.push_back(root / (split == Split::train ? "train.bin" : "test.bin"));
    }
    for (const auto& f : files) {
        if (!std::filesystem::is_regular_file(f)) throw io_error("missing CIFAR batch file " + f.string());
    }
    return files;
}

std::size_t cifar_record_count(const std::filesystem::path& dir, CifarVariant variant, Split split) {
    std::size_t total = 0;
    for (const auto& f : cifar_files(dir, variant, split)) {
        const auto bytes = std::filesystem::file_size(f);
        if (bytes % record_bytes(variant) != 0) {
            throw format_error(f.string() + ": size " + std::to_string(bytes) + " is not a multiple of the " +
                               std::to_string(record_bytes(variant)) + "-byte record");
        }
        total += bytes / record_bytes(variant);
    }
    return total;
}

LabeledImageSet load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split) {
    std::vector<std::size_t> all(cifar_record_count(dir, variant, split));
    std::iota(all.begin(), all.end(), std::size_t{0});
    return load_cifar(dir, variant, split, all);
}

LabeledImageSet load_cifar(const std::filesystem::path& dir, CifarVariant variant, Split split,
                           std::span<const std::size_t> indices) {
    const auto files = cifar_files(dir, variant, split);
    const std::size_t rec = record_bytes(variant);
    std::vector<std::size_t> offsets{0};
    for (const auto& f : files) {
        const auto bytes = std::filesystem::file_size(f);
        if (bytes % rec != 0) {
            throw format_error(f.string() + ": size " + std::to_string(bytes) + " is not a multiple of the " +
                               std::to_string(rec) + "-byte record");
        }
        offsets.push_back(offsets.back() + bytes / rec);
    }

    LabeledImageSet set;
    set.num_classes = class_count(variant);
    set.split = split;
    set.images = ComplexTensor(Shape{indices.size(), 3, 32, 32});
    set.labels.resize(indices.size());

    std::vector<unsigned char> record(rec);
    std::size_t open_index = files.size();
    std::ifstream in;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t global = indices[i];
        if (global >= offsets.back()) throw argument_error("record index " + std::to_string(global) + " out of range");
        const std::size_t fi = static_cast<std::size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), global) - offsets.begin() - 1);
        if (fi != open_index) {
            in = std::ifstream(files[fi], std::ios::binary);
            if (!in) throw io_error("cannot open " + files[fi].string());
            open_index = fi;
        }
        in.seekg(static_cast<std::streamoff>((global - offsets[fi]) * rec));
        if (!in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(rec))) {
            throw format_error(files[fi].string() + ": truncated record " + std::to_string(global - offsets[fi]));
        }
        const int label = record[label_bytes(variant) - 1];
        if (static_cast<std::size_t>(label) >= set.num_classes) {
            throw format_error(files[fi].string() + ": label " + std::to_string(label) + " out of range");
        }
        set.labels[i] = label;
        float* dst = set.images.re().data() + i * kPixels;
        const unsigned char* px = record.data() + label_bytes(variant);
        for (std::size_t p = 0; p < kPixels; ++p) dst[p] = static_cast<float>(px[p]) / 255.0f;
    }
    return set;
}

LabeledImageSet load_ctns_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                                  std::size_t num_classes, Split split, Encoding encoding) {
    LabeledImageSet set;
    set.images = load_ctns<float>(images);
    const auto label_tensor = load_ctns<float>(labels);
    if (label_tensor.shape().rank() != 1) {
        throw format_error(labels.string() + ": label tensor must be rank 1, got " + label_tensor.shape().to_string());
    }
    set.labels.reserve(label_tensor.numel());
    for (float v : label_tensor.re()) {
        if (v != std::floor(v)) throw format_error(labels.string() + ": non-integer label");
        set.labels.push_back(static_cast<int>(v));
    }
    set.num_classes = num_classes;
    set.split = split;
    set.encoding = encoding;
    if (encoding == Encoding::rgb && !set.images.is_real()) {
        throw format_error(images.string() + ": rgb images must have a zero imaginary plane");
    }
    set.validate();
    return set;
}

LabeledImageSet load_ctns_dataset(const std::filesystem::path& dir, Split split, std::size_t num_classes) {
    const std::string prefix(to_string(split));
    return load_ctns_dataset(dir / (prefix + "_images.ctns"), dir / (prefix + "_labels.ctns"), num_classes, split,
                             Encoding::rgb);
}

void save_ctns_dataset(const LabeledImageSet& set, const std::filesystem::path& images,
                       const std::filesystem::path& labels) {
    set.validate();
    save_ctns(images, set.images);
    std::vector<float> ids(set.labels.begin(), set.labels.end());
    save_ctns(labels, ComplexTensor::from_real(Shape{set.labels.size()}, std::move(ids)));
}

Lab srgb_to_lab(double r, double g, double b) {
    auto linear = [](double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); };
    const double lr = linear(r), lg = linear(g), lb = linear(b);
    const double x = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
    const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
    const double z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
    constexpr double delta = 6.0 / 29.0;
    auto f = [](double t) {
        return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
    };
    const double fx = f(x / 0.95047), fy = f(y / 1.0), fz = f(z / 1.08883);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ComplexTensor encode_images(const ComplexTensor& rgb, Encoding target) {
    if (!rgb.is_real()) throw argument_error("encoding expects real-valued rgb images");
    if (target == Encoding::rgb) return rgb;
    const auto& s = rgb.shape();
    if (s.rank() != 4 || s[1] != 3) throw shape_error("encoding expects [N,3,H,W], got " + s.to_string());
    ComplexTensor out(s);
    const std::size_t plane = s[2] * s[3];
    for (std::size_t n = 0; n < s[0]; ++n) {
        const float* src = rgb.re().data() + n * 3 * plane;
        float* re = out.re().data() + n * 3 * plane;
        float* im = out.im().data() + n * 3 * plane;
        if (target == Encoding::sliding) {
            for (std::size_t j = 0; j < 3 * plane; ++j) {
                const double p = src[j];
                const double angle = 2.0 * std::numbers::pi * p;
                re[j] = static_cast<float>(p * std::cos(angle));
                im[j] = static_cast<float>(p * std::sin(angle));
            }
            continue;
        }
        for (std::size_t j = 0; j < plane; ++j) {
            const Lab lab = srgb_to_lab(src[j], src[plane + j], src[2 * plane + j]);
            const double chroma = std::hypot(lab.a, lab.b);
            const double hue = phase(lab.a, lab.b);
            re[j] = static_cast<float>(lab.l / 100.0);
            re[plane + j] = static_cast<float>(lab.a / 110.0);
            im[plane + j] = static_cast<float>(lab.b / 110.0);
            re[2 * plane + j] = static_cast<float>(chroma / 155.0);
            im[2 * plane + j] = static_cast<float>(hue / std::numbers::pi);
        }
    }
    return out;
}

LabeledImageSet encode(const LabeledImageSet& images, Encoding target) {
    if (images.encoding != Encoding::rgb) throw argument_error("encoding expects an rgb-encoded set");
    LabeledImageSet out;
    out.images = encode_images(images.images, target);
    out.labels = images.labels;
    out.num_classes = images.num_classes;
    out.split = images.split;
    out.encoding = target;
    return out;
}

std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count > n) throw argument_error("subset of " + std::to_string(count) + " from " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(splitmix64(state) % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace fccnn
