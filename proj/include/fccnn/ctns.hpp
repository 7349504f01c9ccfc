#pragma once

// CTNS binary tensor container.
//
//   offset 0   "CTNS" magic
//          4   u8 version (1)
//          5   u8 dtype code (0 = f32, 1 = f64)
//          6   u8 rank
//          7   rank x u32 extents, little-endian
//        ...   full real plane, then full imaginary plane, little-endian IEEE-754
//
// The format carries no padding or trailing metadata.

#include "fccnn/tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace fccnn {

inline constexpr std::uint8_t kCtnsVersion = 1;

struct CtnsHeader {
    std::uint8_t version = kCtnsVersion;
    DType dtype = DType::f32;
    Shape shape;
};

template <typename T>
void write_ctns(std::ostream& out, const BasicComplexTensor<T>& tensor);

CtnsHeader read_ctns_header(std::istream& in);

/// Reads a tensor of either stored dtype, converting to T.
template <typename T>
BasicComplexTensor<T> read_ctns(std::istream& in);

template <typename T>
void save_ctns(const std::filesystem::path& path, const BasicComplexTensor<T>& tensor);

template <typename T>
BasicComplexTensor<T> load_ctns(const std::filesystem::path& path);

} // namespace fccnn
