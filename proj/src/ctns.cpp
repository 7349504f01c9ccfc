#include "fccnn/ctns.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace fccnn {
namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
    std::array<char, sizeof(U)> bytes;
    if (!in.read(bytes.data(), bytes.size())) throw format_error("CTNS stream truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    U value;
    std::memcpy(&value, bytes.data(), sizeof(U));
    return value;
}

template <typename Stored, typename T>
void read_plane(std::istream& in, std::span<T> plane) {
    constexpr std::size_t chunk = 4096;
    std::vector<char> buffer(chunk * sizeof(Stored));
    for (std::size_t done = 0; done < plane.size();) {
        const std::size_t count = std::min(chunk, plane.size() - done);
        if (!in.read(buffer.data(), static_cast<std::streamsize>(count * sizeof(Stored)))) {
            throw format_error("CTNS payload truncated");
        }
        for (std::size_t i = 0; i < count; ++i) {
            if constexpr (std::endian::native == std::endian::big) {
                std::reverse(buffer.data() + i * sizeof(Stored), buffer.data() + (i + 1) * sizeof(Stored));
            }
            Stored v;
            std::memcpy(&v, buffer.data() + i * sizeof(Stored), sizeof(Stored));
            plane[done + i] = static_cast<T>(v);
        }
        done += count;
    }
}

template <typename T>
void write_plane(std::ostream& out, std::span<const T> plane) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(plane.data()), static_cast<std::streamsize>(plane.size_bytes()));
    } else {
        for (T v : plane) put_le(out, v);
    }
}

} // namespace

template <typename T>
void write_ctns(std::ostream& out, const BasicComplexTensor<T>& tensor) {
    const auto& dims = tensor.shape().dims();
    if (dims.size() > std::numeric_limits<std::uint8_t>::max()) throw format_error("CTNS rank exceeds 255");
    out.write("CTNS", 4);
    put_le<std::uint8_t>(out, kCtnsVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>::value));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw format_error("CTNS extent exceeds u32");
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    write_plane(out, tensor.re());
    write_plane(out, tensor.im());
    if (!out) throw io_error("failed writing CTNS stream");
}

CtnsHeader read_ctns_header(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "CTNS", 4) != 0) {
        throw format_error("bad CTNS magic");
    }
    CtnsHeader header;
    header.version = get_le<std::uint8_t>(in);
    if (header.version != kCtnsVersion) {
        throw format_error("unsupported CTNS version " + std::to_string(header.version));
    }
    const auto code = get_le<std::uint8_t>(in);
    if (code > 1) throw format_error("unknown CTNS dtype code " + std::to_string(code));
    header.dtype = static_cast<DType>(code);
    const auto rank = get_le<std::uint8_t>(in);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = get_le<std::uint32_t>(in);
    header.shape = Shape(std::move(dims));
    return header;
}

template <typename T>
BasicComplexTensor<T> read_ctns(std::istream& in) {
    const CtnsHeader header = read_ctns_header(in);
    BasicComplexTensor<T> out(header.shape);
    if (header.dtype == DType::f32) {
        read_plane<float>(in, out.re());
        read_plane<float>(in, out.im());
    } else {
        read_plane<double>(in, out.re());
        read_plane<double>(in, out.im());
    }
    return out;
}

template <typename T>
void save_ctns(const std::filesystem::path& path, const BasicComplexTensor<T>& tensor) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    write_ctns(out, tensor);
}

template <typename T>
BasicComplexTensor<T> load_ctns(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    try {
        return read_ctns<T>(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

template void write_ctns<float>(std::ostream&, const BasicComplexTensor<float>&);
template void write_ctns<double>(std::ostream&, const BasicComplexTensor<double>&);
template BasicComplexTensor<float> read_ctns<float>(std::istream&);
template BasicComplexTensor<double> read_ctns<double>(std::istream&);
template void save_ctns<float>(const std::filesystem::path&, const BasicComplexTensor<float>&);
template void save_ctns<double>(const std::filesystem::path&, const BasicComplexTensor<double>&);
template BasicComplexTensor<float> load_ctns<float>(const std::filesystem::path&);
template BasicComplexTensor<double> load_ctns<double>(const std::filesystem::path&);

} // namespace fccnn
