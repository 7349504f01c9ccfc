#include "fccnn/nn.hpp"

#include <cmath>
#include <cstring>

namespace fccnn {

void Conv2dSpec::validate() const {
    if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0 || groups == 0) {
        throw argument_error("conv2d extents, stride and groups must be positive");
    }
    if (in_channels % groups != 0 || out_channels % groups != 0) {
        throw shape_error("conv2d channels " + std::to_string(in_channels) + "->" + std::to_string(out_channels) +
                          " not divisible by groups " + std::to_string(groups));
    }
}

Shape Conv2dSpec::weight_shape() const { return Shape{out_channels, in_channels / groups, kernel_h, kernel_w}; }

std::size_t Conv2dSpec::output_extent(std::size_t in, std::size_t kernel) const {
    if (in + 2 * padding < kernel) {
        throw shape_error("spatial extent " + std::to_string(in) + " (padding " + std::to_string(padding) +
                          ") smaller than kernel " + std::to_string(kernel));
    }
    return (in + 2 * padding - kernel) / stride + 1;
}

Shape Conv2dSpec::output_shape(const Shape& input) const {
    validate();
    if (input.rank() != 4) throw shape_error("conv2d expects [N,C,H,W], got " + input.to_string());
    if (input[1] != in_channels) {
        throw shape_error("conv2d expects " + std::to_string(in_channels) + " input channels, got " +
                          input.to_string());
    }
    return Shape{input[0], out_channels, output_extent(input[2], kernel_h), output_extent(input[3], kernel_w)};
}

void LinearSpec::validate() const {
    if (in_features == 0 || out_features == 0) throw argument_error("linear extents must be positive");
}

namespace {

struct Geometry {
    std::size_t n, c, h, w, oc, kh, kw, stride, pad, groups, oh, ow;
    std::size_t cin_g, cout_g, k, p;

    Geometry(const Shape& input, const Conv2dSpec& s) {
        const Shape out = s.output_shape(input);
        n = input[0];
        c = input[1];
        h = input[2];
        w = input[3];
        oc = s.out_channels;
        kh = s.kernel_h;
        kw = s.kernel_w;
        stride = s.stride;
        pad = s.padding;
        groups = s.groups;
        oh = out[2];
        ow = out[3];
        cin_g = c / groups;
        cout_g = oc / groups;
        k = cin_g * kh * kw;
        p = oh * ow;
    }
};

// col[k, p] for the channels of group g of one image.
template <typename T>
void im2col(const T* img, std::size_t g, const Geometry& geo, T* col) {
    for (std::size_t ci = 0; ci < geo.cin_g; ++ci) {
        const T* plane = img + (g * geo.cin_g + ci) * geo.h * geo.w;
        for (std::size_t ky = 0; ky < geo.kh; ++ky) {
            for (std::size_t kx = 0; kx < geo.kw; ++kx) {
                T* row = col + ((ci * geo.kh + ky) * geo.kw + kx) * geo.p;
                for (std::size_t oy = 0; oy < geo.oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                                              static_cast<std::ptrdiff_t>(geo.pad);
                    T* dst = row + oy * geo.ow;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) {
                        std::fill(dst, dst + geo.ow, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(iy) * geo.w;
                    for (std::size_t ox = 0; ox < geo.ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(geo.pad);
                        dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) ? T(0)
                                                                                       : src[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, std::size_t g, const Geometry& geo, T* img) {
    for (std::size_t ci = 0; ci < geo.cin_g; ++ci) {
        T* plane = img + (g * geo.cin_g + ci) * geo.h * geo.w;
        for (std::size_t ky = 0; ky < geo.kh; ++ky) {
            for (std::size_t kx = 0; kx < geo.kw; ++kx) {
                const T* row = col + ((ci * geo.kh + ky) * geo.kw + kx) * geo.p;
                for (std::size_t oy = 0; oy < geo.oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                                              static_cast<std::ptrdiff_t>(geo.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) continue;
                    T* dst = plane + static_cast<std::size_t>(iy) * geo.w;
                    for (std::size_t ox = 0; ox < geo.ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(geo.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) continue;
                        dst[static_cast<std::size_t>(ix)] += row[oy * geo.ow + ox];
                    }
                }
            }
        }
    }
}

// C[m,n] += alpha * sum_k A[m,k] B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* __restrict a, const T* __restrict b,
             T* __restrict c) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T av = alpha * a[i * k + kk];
            if (av == T(0)) continue;
            const T* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[k,n] += alpha * sum_m A[m,k] B[m,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* __restrict a, const T* __restrict b,
             T* __restrict c) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* brow = b + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T av = alpha * a[i * k + kk];
            T* crow = c + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += alpha * sum_n A[m,n] B[k,n]
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* __restrict a, const T* __restrict b,
             T* __restrict c) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T* brow = b + kk * n;
            T acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            c[i * k + kk] += alpha * acc;
        }
    }
}

template <typename T>
void check_conv_operands(const BasicComplexTensor<T>& input, const Conv2dSpec& spec,
                         const BasicComplexTensor<T>& weight, const BasicComplexTensor<T>* bias) {
    spec.output_shape(input.shape());
    if (weight.shape() != spec.weight_shape()) {
        throw shape_error("conv2d weight shape " + weight.shape().to_string() + " does not match " +
                          spec.weight_shape().to_string());
    }
    if (bias && bias->shape() != Shape{spec.out_channels}) {
        throw shape_error("conv2d bias shape " + bias->shape().to_string());
    }
}

template <typename T>
void conv_forward_im2col(const BasicComplexTensor<T>& input, const Geometry& geo, const BasicComplexTensor<T>& weight,
                         Arithmetic arithmetic, BasicComplexTensor<T>& out) {
    const bool cplx = arithmetic == Arithmetic::complex;
    std::vector<T> col_r(geo.k * geo.p), col_i(cplx ? geo.k * geo.p : 0);
    const std::size_t in_img = geo.c * geo.h * geo.w, out_img = geo.oc * geo.p;
    for (std::size_t n = 0; n < geo.n; ++n) {
        for (std::size_t g = 0; g < geo.groups; ++g) {
            const T* wr = weight.re().data() + g * geo.cout_g * geo.k;
            const T* wi = weight.im().data() + g * geo.cout_g * geo.k;
            T* yr = out.re().data() + n * out_img + g * geo.cout_g * geo.p;
            T* yi = out.im().data() + n * out_img + g * geo.cout_g * geo.p;
            im2col(input.re().data() + n * in_img, g, geo, col_r.data());
            gemm_nn(geo.cout_g, geo.p, geo.k, T(1), wr, col_r.data(), yr);
            if (!cplx) continue;
            im2col(input.im().data() + n * in_img, g, geo, col_i.data());
            gemm_nn(geo.cout_g, geo.p, geo.k, T(-1), wi, col_i.data(), yr);
            gemm_nn(geo.cout_g, geo.p, geo.k, T(1), wr, col_i.data(), yi);
            gemm_nn(geo.cout_g, geo.p, geo.k, T(1), wi, col_r.data(), yi);
        }
    }
}

template <typename T>
void conv_forward_direct(const BasicComplexTensor<T>& input, const Geometry& geo, const BasicComplexTensor<T>& weight,
                         Arithmetic arithmetic, BasicComplexTensor<T>& out) {
    const bool cplx = arithmetic == Arithmetic::complex;
    for (std::size_t n = 0; n < geo.n; ++n) {
        for (std::size_t o = 0; o < geo.oc; ++o) {
            const std::size_t g = o / geo.cout_g;
            for (std::size_t oy = 0; oy < geo.oh; ++oy) {
                for (std::size_t ox = 0; ox < geo.ow; ++ox) {
                    T acc_r = 0, acc_i = 0;
                    for (std::size_t ci = 0; ci < geo.cin_g; ++ci) {
                        const std::size_t c = g * geo.cin_g + ci;
                        for (std::size_t ky = 0; ky < geo.kh; ++ky) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geo.stride + ky) -
                                                      static_cast<std::ptrdiff_t>(geo.pad);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(geo.h)) continue;
                            for (std::size_t kx = 0; kx < geo.kw; ++kx) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geo.stride + kx) -
                                                          static_cast<std::ptrdiff_t>(geo.pad);
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(geo.w)) continue;
                                const std::size_t xi =
                                    ((n * geo.c + c) * geo.h + static_cast<std::size_t>(iy)) * geo.w +
                                    static_cast<std::size_t>(ix);
                                const std::size_t wi = ((o * geo.cin_g + ci) * geo.kh + ky) * geo.kw + kx;
                                const T a = weight.re()[wi], b = cplx ? weight.im()[wi] : T(0);
                                const T x = input.re()[xi], y = cplx ? input.im()[xi] : T(0);
                                acc_r += a * x - b * y;
                                acc_i += a * y + b * x;
                            }
                        }
                    }
                    const std::size_t yi = ((n * geo.oc + o) * geo.oh + oy) * geo.ow + ox;
                    out.re()[yi] = acc_r;
                    if (cplx) out.im()[yi] = acc_i;
                }
            }
        }
    }
}

template <typename T>
void add_channel_bias(BasicComplexTensor<T>& out, const BasicComplexTensor<T>& bias, std::size_t channels,
                      std::size_t plane, Arithmetic arithmetic) {
    const std::size_t n = out.shape()[0];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            T* yr = out.re().data() + (i * channels + c) * plane;
            T* yi = out.im().data() + (i * channels + c) * plane;
            const T br = bias.re()[c], bi = arithmetic == Arithmetic::complex ? bias.im()[c] : T(0);
            for (std::size_t j = 0; j < plane; ++j) {
                yr[j] += br;
                yi[j] += bi;
            }
        }
    }
}

// Elementwise backward through a real 2x2 Jacobian: g_in = J^T g_out.
template <typename T, typename JacobianFn>
void jacobian_backward(Tape<T>& t, std::size_t self, Var input, JacobianFn jacobian) {
    const auto& g = t.output_grad(self);
    const auto& z = t.value(input);
    auto& dst = t.grad(input.id);
    for (std::size_t i = 0; i < g.numel(); ++i) {
        T ux, uy, vx, vy;
        jacobian(z.re()[i], z.im()[i], ux, uy, vx, vy);
        const T gu = g.re()[i], gv = g.im()[i];
        dst.re()[i] += gu * ux + gv * vx;
        dst.im()[i] += gu * uy + gv * vy;
    }
}

} // namespace

template <typename T>
BasicComplexTensor<T> complex_conv2d(const BasicComplexTensor<T>& input, const Conv2dSpec& spec,
                                     const BasicComplexTensor<T>& weight, const std::type_identity_t<BasicComplexTensor<T>>* bias,
                                     Arithmetic arithmetic, ConvAlgorithm algorithm) {
    check_conv_operands(input, spec, weight, bias);
    const Geometry geo(input.shape(), spec);
    BasicComplexTensor<T> out(spec.output_shape(input.shape()));
    if (algorithm == ConvAlgorithm::im2col) {
        conv_forward_im2col(input, geo, weight, arithmetic, out);
    } else {
        conv_forward_direct(input, geo, weight, arithmetic, out);
    }
    if (bias) add_channel_bias(out, *bias, geo.oc, geo.p, arithmetic);
    return out;
}

template <typename T>
BasicComplexTensor<T> complex_linear(const BasicComplexTensor<T>& input, const LinearSpec& spec,
                                     const BasicComplexTensor<T>& weight, const std::type_identity_t<BasicComplexTensor<T>>* bias,
                                     Arithmetic arithmetic) {
    spec.validate();
    if (input.shape().rank() != 2 || input.shape()[1] != spec.in_features) {
        throw shape_error("linear expects [N," + std::to_string(spec.in_features) + "], got " +
                          input.shape().to_string());
    }
    if (weight.shape() != spec.weight_shape()) {
        throw shape_error("linear weight shape " + weight.shape().to_string() + " does not match " +
                          spec.weight_shape().to_string());
    }
    if (bias && bias->shape() != spec.bias_shape()) throw shape_error("linear bias shape " + bias->shape().to_string());

    const std::size_t n = input.shape()[0], f = spec.in_features, k = spec.out_features;
    const bool cplx = arithmetic == Arithmetic::complex;
    BasicComplexTensor<T> out(Shape{n, k});
    const T* xr = input.re().data();
    const T* xi = input.im().data();
    const T* wr = weight.re().data();
    const T* wi = weight.im().data();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < k; ++o) {
            T acc_r = 0, acc_i = 0;
            const T* a = wr + o * f;
            const T* b = wi + o * f;
            const T* x = xr + s * f;
            const T* y = xi + s * f;
            if (cplx) {
                for (std::size_t j = 0; j < f; ++j) {
                    acc_r += a[j] * x[j] - b[j] * y[j];
                    acc_i += a[j] * y[j] + b[j] * x[j];
                }
            } else {
                for (std::size_t j = 0; j < f; ++j) acc_r += a[j] * x[j];
            }
            if (bias) {
                acc_r += bias->re()[o];
                if (cplx) acc_i += bias->im()[o];
            }
            out.re()[s * k + o] = acc_r;
            out.im()[s * k + o] = acc_i;
        }
    }
    return out;
}

template <typename T>
BasicComplexTensor<T> cardioid(const BasicComplexTensor<T>& z) {
    BasicComplexTensor<T> out(z.shape());
    for (std::size_t i = 0; i < z.numel(); ++i) {
        const T x = z.re()[i], y = z.im()[i];
        const T r = std::hypot(x, y);
        if (r == T(0)) continue;
        const T gain = T(0.5) * (T(1) + x / r);
        out.re()[i] = gain * x;
        out.im()[i] = gain * y;
    }
    return out;
}

template <typename T>
BasicComplexTensor<T> crelu(const BasicComplexTensor<T>& z) {
    BasicComplexTensor<T> out(z.shape());
    for (std::size_t i = 0; i < z.numel(); ++i) {
        out.re()[i] = z.re()[i] > T(0) ? z.re()[i] : T(0);
        out.im()[i] = z.im()[i] > T(0) ? z.im()[i] : T(0);
    }
    return out;
}

template <typename T>
BasicComplexTensor<T> relu(const BasicComplexTensor<T>& x) {
    if (!x.is_real()) throw argument_error("relu applied to a tensor with a nonzero imaginary part");
    BasicComplexTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out.re()[i] = x.re()[i] > T(0) ? x.re()[i] : T(0);
    return out;
}

namespace ops {

template <typename T>
Var conv2d(Tape<T>& tape, Var input, Var weight, const Conv2dSpec& spec, std::optional<Var> bias,
           Arithmetic arithmetic) {
    const auto* bias_value = bias ? &tape.value(*bias) : nullptr;
    auto out = complex_conv2d(tape.value(input), spec, tape.value(weight), bias_value, arithmetic);
    auto backward = [input, weight, bias, spec, arithmetic](Tape<T>& t, std::size_t self) {
        const auto& x = t.value(input);
        const auto& w = t.value(weight);
        const auto& g = t.output_grad(self);
        const Geometry geo(x.shape(), spec);
        const bool cplx = arithmetic == Arithmetic::complex;
        const bool need_x = t.requires_grad(input), need_w = t.requires_grad(weight);
        const std::size_t in_img = geo.c * geo.h * geo.w, out_img = geo.oc * geo.p;
        std::vector<T> col_r(geo.k * geo.p), col_i(geo.k * geo.p);
        BasicComplexTensor<T>* dx = need_x ? &t.grad(input.id) : nullptr;
        BasicComplexTensor<T>* dw = need_w ? &t.grad(weight.id) : nullptr;

        for (std::size_t n = 0; n < geo.n; ++n) {
            for (std::size_t gi = 0; gi < geo.groups; ++gi) {
                const std::size_t woff = gi * geo.cout_g * geo.k;
                const T* wr = w.re().data() + woff;
                const T* wi = w.im().data() + woff;
                const T* gr = g.re().data() + n * out_img + gi * geo.cout_g * geo.p;
                const T* gim = g.im().data() + n * out_img + gi * geo.cout_g * geo.p;
                if (dx) {
                    // g_x = conj(W)^T g_y
                    std::fill(col_r.begin(), col_r.end(), T(0));
                    gemm_tn(geo.cout_g, geo.p, geo.k, T(1), wr, gr, col_r.data());
                    if (cplx) {
                        std::fill(col_i.begin(), col_i.end(), T(0));
                        gemm_tn(geo.cout_g, geo.p, geo.k, T(1), wi, gim, col_r.data());
                        gemm_tn(geo.cout_g, geo.p, geo.k, T(1), wr, gim, col_i.data());
                        gemm_tn(geo.cout_g, geo.p, geo.k, T(-1), wi, gr, col_i.data());
                        col2im_add(col_i.data(), gi, geo, dx->im().data() + n * in_img);
                    }
                    col2im_add(col_r.data(), gi, geo, dx->re().data() + n * in_img);
                }
                if (dw) {
                    // g_W = sum g_y conj(x)
                    T* dwr = dw->re().data() + woff;
                    T* dwi = dw->im().data() + woff;
                    im2col(x.re().data() + n * in_img, gi, geo, col_r.data());
                    gemm_nt(geo.cout_g, geo.p, geo.k, T(1), gr, col_r.data(), dwr);
                    if (cplx) {
                        im2col(x.im().data() + n * in_img, gi, geo, col_i.data());
                        gemm_nt(geo.cout_g, geo.p, geo.k, T(1), gim, col_i.data(), dwr);
                        gemm_nt(geo.cout_g, geo.p, geo.k, T(1), gim, col_r.data(), dwi);
                        gemm_nt(geo.cout_g, geo.p, geo.k, T(-1), gr, col_i.data(), dwi);
                    }
                }
            }
        }
        if (bias && t.requires_grad(*bias)) {
            auto& db = t.grad(bias->id);
            for (std::size_t n = 0; n < geo.n; ++n) {
                for (std::size_t o = 0; o < geo.oc; ++o) {
                    const std::size_t off = n * out_img + o * geo.p;
                    T sr = 0, si = 0;
                    for (std::size_t j = 0; j < geo.p; ++j) {
                        sr += g.re()[off + j];
                        si += g.im()[off + j];
                    }
                    db.re()[o] += sr;
                    if (cplx) db.im()[o] += si;
                }
            }
        }
    };
    if (bias) return tape.record(std::move(out), {input, weight, *bias}, std::move(backward));
    return tape.record(std::move(out), {input, weight}, std::move(backward));
}

template <typename T>
Var linear(Tape<T>& tape, Var input, Var weight, const LinearSpec& spec, std::optional<Var> bias,
           Arithmetic arithmetic) {
    const auto* bias_value = bias ? &tape.value(*bias) : nullptr;
    auto out = complex_linear(tape.value(input), spec, tape.value(weight), bias_value, arithmetic);
    auto backward = [input, weight, bias, spec, arithmetic](Tape<T>& t, std::size_t self) {
        const auto& x = t.value(input);
        const auto& w = t.value(weight);
        const auto& g = t.output_grad(self);
        const std::size_t n = x.shape()[0], f = spec.in_features, k = spec.out_features;
        const bool cplx = arithmetic == Arithmetic::complex;
        if (t.requires_grad(input)) {
            // g_x[n,f] = sum_k conj(W[k,f]) g[n,k]
            auto& dx = t.grad(input.id);
            for (std::size_t s = 0; s < n; ++s) {
                T* dxr = dx.re().data() + s * f;
                T* dxi = dx.im().data() + s * f;
                for (std::size_t o = 0; o < k; ++o) {
                    const T gr = g.re()[s * k + o], gi = cplx ? g.im()[s * k + o] : T(0);
                    const T* a = w.re().data() + o * f;
                    const T* b = w.im().data() + o * f;
                    if (cplx) {
                        for (std::size_t j = 0; j < f; ++j) {
                            dxr[j] += a[j] * gr + b[j] * gi;
                            dxi[j] += a[j] * gi - b[j] * gr;
                        }
                    } else {
                        for (std::size_t j = 0; j < f; ++j) dxr[j] += a[j] * gr;
                    }
                }
            }
        }
        if (t.requires_grad(weight)) {
            // g_W[k,f] = sum_n g[n,k] conj(x[n,f])
            auto& dw = t.grad(weight.id);
            for (std::size_t s = 0; s < n; ++s) {
                const T* xr = x.re().data() + s * f;
                const T* xi = x.im().data() + s * f;
                for (std::size_t o = 0; o < k; ++o) {
                    const T gr = g.re()[s * k + o], gi = cplx ? g.im()[s * k + o] : T(0);
                    T* dwr = dw.re().data() + o * f;
                    T* dwi = dw.im().data() + o * f;
                    if (cplx) {
                        for (std::size_t j = 0; j < f; ++j) {
                            dwr[j] += gr * xr[j] + gi * xi[j];
                            dwi[j] += gi * xr[j] - gr * xi[j];
                        }
                    } else {
                        for (std::size_t j = 0; j < f; ++j) dwr[j] += gr * xr[j];
                    }
                }
            }
        }
        if (bias && t.requires_grad(*bias)) {
            auto& db = t.grad(bias->id);
            for (std::size_t s = 0; s < n; ++s) {
                for (std::size_t o = 0; o < k; ++o) {
                    db.re()[o] += g.re()[s * k + o];
                    if (cplx) db.im()[o] += g.im()[s * k + o];
                }
            }
        }
    };
    if (bias) return tape.record(std::move(out), {input, weight, *bias}, std::move(backward));
    return tape.record(std::move(out), {input, weight}, std::move(backward));
}

template <typename T>
Var cardioid(Tape<T>& tape, Var z) {
    return tape.record(fccnn::cardioid(tape.value(z)), {z}, [z](Tape<T>& t, std::size_t self) {
        // u = x/2 + x^2/(2r), v = y/2 + xy/(2r); all partials are 0 at the origin
        jacobian_backward(t, self, z, [](T x, T y, T& ux, T& uy, T& vx, T& vy) {
            const T r = std::hypot(x, y);
            if (r == T(0)) {
                ux = uy = vx = vy = T(0);
                return;
            }
            const T r3 = r * r * r;
            ux = T(0.5) + x / r - x * x * x / (T(2) * r3);
            uy = -x * x * y / (T(2) * r3);
            vx = y * y * y / (T(2) * r3);
            vy = T(0.5) + x / (T(2) * r) - x * y * y / (T(2) * r3);
        });
    });
}

template <typename T>
Var crelu(Tape<T>& tape, Var z) {
    return tape.record(fccnn::crelu(tape.value(z)), {z}, [z](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        const auto& x = t.value(z);
        auto& dst = t.grad(z.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            if (x.re()[i] > T(0)) dst.re()[i] += g.re()[i];
            if (x.im()[i] > T(0)) dst.im()[i] += g.im()[i];
        }
    });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
    return tape.record(fccnn::relu(tape.value(x)), {x}, [x](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        const auto& v = t.value(x);
        auto& dst = t.grad(x.id);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (v.re()[i] > T(0)) dst.re()[i] += g.re()[i];
    });
}

} // namespace ops

#define FCCNN_INSTANTIATE_NN(T)                                                                                   \
    template BasicComplexTensor<T> complex_conv2d<T>(const BasicComplexTensor<T>&, const Conv2dSpec&,             \
                                                     const BasicComplexTensor<T>&, const BasicComplexTensor<T>*,  \
                                                     Arithmetic, ConvAlgorithm);                                  \
    template BasicComplexTensor<T> complex_linear<T>(const BasicComplexTensor<T>&, const LinearSpec&,             \
                                                     const BasicComplexTensor<T>&, const BasicComplexTensor<T>*,  \
                                                     Arithmetic);                                                 \
    template BasicComplexTensor<T> cardioid<T>(const BasicComplexTensor<T>&);                                     \
    template BasicComplexTensor<T> crelu<T>(const BasicComplexTensor<T>&);                                        \
    template BasicComplexTensor<T> relu<T>(const BasicComplexTensor<T>&);                                         \
    template Var ops::conv2d<T>(Tape<T>&, Var, Var, const Conv2dSpec&, std::optional<Var>, Arithmetic);           \
    template Var ops::linear<T>(Tape<T>&, Var, Var, const LinearSpec&, std::optional<Var>, Arithmetic);           \
    template Var ops::cardioid<T>(Tape<T>&, Var);                                                                 \
    template Var ops::crelu<T>(Tape<T>&, Var);                                                                    \
    template Var ops::relu<T>(Tape<T>&, Var);

FCCNN_INSTANTIATE_NN(float)
FCCNN_INSTANTIATE_NN(double)

#undef FCCNN_INSTANTIATE_NN

} // namespace fccnn
