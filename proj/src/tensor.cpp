#include "fccnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

namespace fccnn {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape: return "shape";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

std::vector<std::size_t> Shape::strides() const {
    std::vector<std::size_t> out(dims_.size(), 1);
    for (std::size_t i = dims_.size(); i-- > 1;) out[i - 1] = out[i] * dims_[i];
    return out;
}

std::size_t Shape::offset(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) {
        throw shape_error("index of rank " + std::to_string(index.size()) + " into shape " + to_string());
    }
    std::size_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (index[i] >= dims_[i]) throw shape_error("index out of bounds for shape " + to_string());
        flat = flat * dims_[i] + index[i];
    }
    return flat;
}

std::string Shape::to_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) os << ',';
        os << dims_[i];
    }
    os << ']';
    return os.str();
}

template <typename T>
BasicComplexTensor<T>::BasicComplexTensor(Shape shape, std::vector<T> re, std::vector<T> im)
    : shape_(std::move(shape)), re_(std::move(re)), im_(std::move(im)) {
    if (re_.size() != shape_.numel() || im_.size() != shape_.numel()) {
        throw shape_error("plane lengths " + std::to_string(re_.size()) + "/" + std::to_string(im_.size()) +
                          " do not match shape " + shape_.to_string());
    }
}

template <typename T>
BasicComplexTensor<T> BasicComplexTensor<T>::from_real(Shape shape, std::vector<T> re) {
    std::vector<T> im(re.size(), T(0));
    return BasicComplexTensor(std::move(shape), std::move(re), std::move(im));
}

template <typename T>
BasicComplexTensor<T> BasicComplexTensor<T>::from_values(Shape shape, std::span<const scalar_type> values) {
    std::vector<T> re(values.size()), im(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        re[i] = values[i].real();
        im[i] = values[i].imag();
    }
    return BasicComplexTensor(std::move(shape), std::move(re), std::move(im));
}

template <typename T>
bool BasicComplexTensor<T>::is_real() const noexcept {
    for (auto v : im_)
        if (v != T(0)) return false;
    return true;
}

template <typename T>
void BasicComplexTensor<T>::fill(scalar_type z) {
    std::fill(re_.begin(), re_.end(), z.real());
    std::fill(im_.begin(), im_.end(), z.imag());
}

template <typename T>
T phase(T re, T im) noexcept {
    if (im == T(0)) return re < T(0) ? std::numbers::pi_v<T> : T(0);
    return std::atan2(im, re);
}

template <typename T>
BasicComplexTensor<T> elementwise_binary(BinaryOp op, const BasicComplexTensor<T>& a,
                                         const BasicComplexTensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw shape_error("elementwise operands have shapes " + a.shape().to_string() + " and " +
                          b.shape().to_string());
    }
    BasicComplexTensor<T> out(a.shape());
    auto ar = a.re(), ai = a.im(), br = b.re(), bi = b.im();
    auto ore = out.re(), oim = out.im();
    const std::size_t n = a.numel();
    switch (op) {
    case BinaryOp::add:
        for (std::size_t i = 0; i < n; ++i) {
            ore[i] = ar[i] + br[i];
            oim[i] = ai[i] + bi[i];
        }
        break;
    case BinaryOp::sub:
        for (std::size_t i = 0; i < n; ++i) {
            ore[i] = ar[i] - br[i];
            oim[i] = ai[i] - bi[i];
        }
        break;
    case BinaryOp::mul:
        for (std::size_t i = 0; i < n; ++i) {
            ore[i] = ar[i] * br[i] - ai[i] * bi[i];
            oim[i] = ar[i] * bi[i] + ai[i] * br[i];
        }
        break;
    }
    return out;
}

template <typename T>
BasicComplexTensor<T> elementwise_unary(UnaryOp op, const BasicComplexTensor<T>& a, T factor) {
    BasicComplexTensor<T> out(a.shape());
    auto ar = a.re(), ai = a.im();
    auto ore = out.re(), oim = out.im();
    const std::size_t n = a.numel();
    switch (op) {
    case UnaryOp::conj:
        for (std::size_t i = 0; i < n; ++i) {
            ore[i] = ar[i];
            oim[i] = -ai[i];
        }
        break;
    case UnaryOp::abs:
        for (std::size_t i = 0; i < n; ++i) ore[i] = std::hypot(ar[i], ai[i]);
        break;
    case UnaryOp::arg:
        for (std::size_t i = 0; i < n; ++i) ore[i] = phase(ar[i], ai[i]);
        break;
    case UnaryOp::scale_by_real:
        for (std::size_t i = 0; i < n; ++i) {
            ore[i] = ar[i] * factor;
            oim[i] = ai[i] * factor;
        }
        break;
    }
    return out;
}

template <typename T>
BasicComplexTensor<T> reshape(const BasicComplexTensor<T>& a, Shape new_shape) {
    if (new_shape.numel() != a.numel()) {
        throw shape_error("cannot reshape " + a.shape().to_string() + " (" + std::to_string(a.numel()) +
                          " elements) to " + new_shape.to_string() + " (" + std::to_string(new_shape.numel()) +
                          " elements)");
    }
    auto re = a.re(), im = a.im();
    return BasicComplexTensor<T>(std::move(new_shape), std::vector<T>(re.begin(), re.end()),
                                 std::vector<T>(im.begin(), im.end()));
}

template <typename T>
BasicComplexTensor<T> flatten(const BasicComplexTensor<T>& a, std::size_t start_axis) {
    const auto& dims = a.shape().dims();
    if (start_axis > dims.size()) throw shape_error("flatten axis beyond rank of " + a.shape().to_string());
    std::vector<std::size_t> out(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(start_axis));
    std::size_t tail = 1;
    for (std::size_t i = start_axis; i < dims.size(); ++i) tail *= dims[i];
    out.push_back(tail);
    return reshape(a, Shape(std::move(out)));
}

template <typename T>
BasicComplexTensor<T> gather_rows(const BasicComplexTensor<T>& a, std::span<const std::size_t> rows) {
    if (a.shape().rank() == 0) throw shape_error("gather_rows on a scalar");
    auto dims = a.shape().dims();
    const std::size_t n = dims[0];
    const std::size_t row = n ? a.numel() / n : 0;
    dims[0] = rows.size();
    BasicComplexTensor<T> out{Shape(dims)};
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= n) throw shape_error("row index " + std::to_string(rows[r]) + " out of range");
        std::memcpy(out.re().data() + r * row, a.re().data() + rows[r] * row, row * sizeof(T));
        std::memcpy(out.im().data() + r * row, a.im().data() + rows[r] * row, row * sizeof(T));
    }
    return out;
}

#define FCCNN_INSTANTIATE(T)                                                                                  \
    template class BasicComplexTensor<T>;                                                                     \
    template T phase<T>(T, T) noexcept;                                                                       \
    template BasicComplexTensor<T> elementwise_binary<T>(BinaryOp, const BasicComplexTensor<T>&,              \
                                                         const BasicComplexTensor<T>&);                       \
    template BasicComplexTensor<T> elementwise_unary<T>(UnaryOp, const BasicComplexTensor<T>&, T);            \
    template BasicComplexTensor<T> reshape<T>(const BasicComplexTensor<T>&, Shape);                           \
    template BasicComplexTensor<T> flatten<T>(const BasicComplexTensor<T>&, std::size_t);                     \
    template BasicComplexTensor<T> gather_rows<T>(const BasicComplexTensor<T>&, std::span<const std::size_t>);

FCCNN_INSTANTIATE(float)
FCCNN_INSTANTIATE(double)

#undef FCCNN_INSTANTIATE

} // namespace fccnn
