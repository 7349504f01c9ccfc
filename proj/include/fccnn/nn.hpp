#pragma once

#include "fccnn/autograd.hpp"
#include "fccnn/tensor.hpp"

#include <optional>
#include <type_traits>

namespace fccnn {

/// Complex layers run four real products per complex product; real layers only
/// touch the real planes and leave imaginary planes at zero.
enum class Arithmetic { complex, real };

enum class ConvAlgorithm { im2col, direct };

struct Conv2dSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    std::size_t groups = 1;
    std::size_t padding = 0;
    bool bias = false;

    void validate() const;
    /// [out_channels, in_channels / groups, kernel_h, kernel_w]
    Shape weight_shape() const;
    std::size_t output_extent(std::size_t in, std::size_t kernel) const;
    /// Output shape for an [N, C, H, W] input.
    Shape output_shape(const Shape& input) const;
};

struct LinearSpec {
    std::size_t in_features = 1;
    std::size_t out_features = 1;
    bool bias = true;

    void validate() const;
    Shape weight_shape() const { return Shape{out_features, in_features}; }
    Shape bias_shape() const { return Shape{out_features}; }
};

/// Grouped strided cross-correlation of a complex [N,C,H,W] input:
/// (W_R*I_R - W_I*I_I) + i(W_R*I_I + W_I*I_R), plus a per-channel bias.
template <typename T>
BasicComplexTensor<T> complex_conv2d(const BasicComplexTensor<T>& input, const Conv2dSpec& spec,
                                     const BasicComplexTensor<T>& weight,
                                     const std::type_identity_t<BasicComplexTensor<T>>* bias = nullptr,
                                     Arithmetic arithmetic = Arithmetic::complex,
                                     ConvAlgorithm algorithm = ConvAlgorithm::im2col);

/// out[n,k] = sum_f weight[k,f] * input[n,f] + bias[k]
template <typename T>
BasicComplexTensor<T> complex_linear(const BasicComplexTensor<T>& input, const LinearSpec& spec,
                                     const BasicComplexTensor<T>& weight,
                                     const std::type_identity_t<BasicComplexTensor<T>>* bias = nullptr,
                                     Arithmetic arithmetic = Arithmetic::complex);

/// 0.5 * (1 + cos(arg z)) * z, with f(0) = 0.
template <typename T>
BasicComplexTensor<T> cardioid(const BasicComplexTensor<T>& z);

/// ReLU(re) + i ReLU(im)
template <typename T>
BasicComplexTensor<T> crelu(const BasicComplexTensor<T>& z);

/// max(0, re) for real-valued tensors; a nonzero imaginary part is an error.
template <typename T>
BasicComplexTensor<T> relu(const BasicComplexTensor<T>& x);

namespace ops {

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, const Conv2dSpec& spec, std::optional<Var> bias = std::nullopt,
           Arithmetic arithmetic = Arithmetic::complex);

template <typename T>
Var linear(Tape<T>& tape, Var input, Var weight, const LinearSpec& spec, std::optional<Var> bias = std::nullopt,
           Arithmetic arithmetic = Arithmetic::complex);

template <typename T> Var cardioid(Tape<T>& tape, Var z);
template <typename T> Var crelu(Tape<T>& tape, Var z);
template <typename T> Var relu(Tape<T>& tape, Var x);

} // namespace ops

} // namespace fccnn
