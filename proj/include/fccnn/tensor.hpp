#pragma once

#include "fccnn/error.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fccnn {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T> struct dtype_of;
template <> struct dtype_of<float> { static constexpr DType value = DType::f32; };
template <> struct dtype_of<double> { static constexpr DType value = DType::f64; };

/// Extents of a dense row-major tensor. An empty extent list is a scalar.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }

    std::size_t numel() const noexcept {
        std::size_t n = 1;
        for (auto d : dims_) n *= d;
        return n;
    }

    /// Row-major strides derived solely from the extents.
    std::vector<std::size_t> strides() const;

    /// Linear offset of a multi-index; throws on rank or bound violations.
    std::size_t offset(std::span<const std::size_t> index) const;

    std::string to_string() const;

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> dims_;
};

/// Dense n-dimensional complex array with split storage: the real and the
/// imaginary parts live in two separate row-major planes of equal length.
template <typename T>
class BasicComplexTensor {
public:
    using value_type = T;
    using scalar_type = std::complex<T>;

    BasicComplexTensor() : shape_{0} {}
    explicit BasicComplexTensor(Shape shape)
        : shape_(std::move(shape)), re_(shape_.numel(), T(0)), im_(shape_.numel(), T(0)) {}
    BasicComplexTensor(Shape shape, std::vector<T> re, std::vector<T> im);

    static BasicComplexTensor zeros(Shape shape) { return BasicComplexTensor(std::move(shape)); }
    static BasicComplexTensor from_real(Shape shape, std::vector<T> re);
    static BasicComplexTensor from_values(Shape shape, std::span<const scalar_type> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t numel() const noexcept { return re_.size(); }
    static constexpr DType dtype() noexcept { return dtype_of<T>::value; }

    std::span<const T> re() const noexcept { return re_; }
    std::span<const T> im() const noexcept { return im_; }
    std::span<T> re() noexcept { return re_; }
    std::span<T> im() noexcept { return im_; }

    scalar_type at(std::size_t flat) const { return {re_.at(flat), im_.at(flat)}; }
    void set(std::size_t flat, scalar_type z) {
        re_.at(flat) = z.real();
        im_.at(flat) = z.imag();
    }

    /// True when every imaginary component is exactly zero.
    bool is_real() const noexcept;

    void fill(scalar_type z);

    template <typename U>
    BasicComplexTensor<U> cast() const {
        return BasicComplexTensor<U>(shape_, std::vector<U>(re_.begin(), re_.end()),
                                     std::vector<U>(im_.begin(), im_.end()));
    }

    friend bool operator==(const BasicComplexTensor&, const BasicComplexTensor&) = default;

private:
    Shape shape_;
    std::vector<T> re_;
    std::vector<T> im_;
};

using ComplexTensor = BasicComplexTensor<float>;
using ComplexTensorF64 = BasicComplexTensor<double>;

/// Phase in (-pi, pi]; the phase of zero is defined as 0. Signed zeros in the
/// imaginary part do not flip the negative real axis to -pi.
template <typename T>
T phase(T re, T im) noexcept;

enum class BinaryOp { add, sub, mul };
enum class UnaryOp { conj, abs, arg, scale_by_real };

template <typename T>
BasicComplexTensor<T> elementwise_binary(BinaryOp op, const BasicComplexTensor<T>& a,
                                         const BasicComplexTensor<T>& b);

/// `factor` is only read by scale_by_real.
template <typename T>
BasicComplexTensor<T> elementwise_unary(UnaryOp op, const BasicComplexTensor<T>& a, T factor = T(1));

template <typename T>
BasicComplexTensor<T> add(const BasicComplexTensor<T>& a, const BasicComplexTensor<T>& b) {
    return elementwise_binary(BinaryOp::add, a, b);
}
template <typename T>
BasicComplexTensor<T> sub(const BasicComplexTensor<T>& a, const BasicComplexTensor<T>& b) {
    return elementwise_binary(BinaryOp::sub, a, b);
}
template <typename T>
BasicComplexTensor<T> mul(const BasicComplexTensor<T>& a, const BasicComplexTensor<T>& b) {
    return elementwise_binary(BinaryOp::mul, a, b);
}
template <typename T>
BasicComplexTensor<T> conj(const BasicComplexTensor<T>& a) {
    return elementwise_unary(UnaryOp::conj, a);
}
template <typename T>
BasicComplexTensor<T> abs(const BasicComplexTensor<T>& a) {
    return elementwise_unary(UnaryOp::abs, a);
}
template <typename T>
BasicComplexTensor<T> arg(const BasicComplexTensor<T>& a) {
    return elementwise_unary(UnaryOp::arg, a);
}
template <typename T>
BasicComplexTensor<T> scale(const BasicComplexTensor<T>& a, T factor) {
    return elementwise_unary(UnaryOp::scale_by_real, a, factor);
}

/// Same data under a new shape with identical element count.
template <typename T>
BasicComplexTensor<T> reshape(const BasicComplexTensor<T>& a, Shape new_shape);

/// Collapses every axis from `start_axis` onward into one: [N,C,H,W] -> [N,C*H*W].
/// With start_axis 0 the result is one-dimensional.
template <typename T>
BasicComplexTensor<T> flatten(const BasicComplexTensor<T>& a, std::size_t start_axis = 0);

/// Copies rows (slices along axis 0) selected by index into a new tensor.
template <typename T>
BasicComplexTensor<T> gather_rows(const BasicComplexTensor<T>& a, std::span<const std::size_t> rows);

} // namespace fccnn
