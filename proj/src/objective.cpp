#include "fccnn/objective.hpp"

#include <algorithm>
#include <cmath>

namespace fccnn {
namespace {

void check_labels(std::span<const int> labels, std::size_t num_classes) {
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= num_classes) {
            throw argument_error("label " + std::to_string(labels[t]) + " at index " + std::to_string(t) +
                                 " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

std::size_t rows_of(const Shape& s) { return s.rank() == 0 ? 1 : s[0]; }

} // namespace

template <typename T>
ComplexOneHot<T> encode_one_hot(std::span<const int> labels, std::size_t num_classes) {
    if (num_classes == 0) throw argument_error("one-hot encoding needs at least one class");
    check_labels(labels, num_classes);
    BasicComplexTensor<T> codes(Shape{labels.size(), num_classes});
    for (std::size_t t = 0; t < labels.size(); ++t) {
        for (std::size_t k = 0; k < num_classes; ++k) {
            const T v = static_cast<std::size_t>(labels[t]) == k ? T(1) : T(-1);
            codes.re()[t * num_classes + k] = v;
            codes.im()[t * num_classes + k] = v;
        }
    }
    return {std::move(codes)};
}

template <typename T>
BasicComplexTensor<T> hinge_error(const ComplexOneHot<T>& y, const BasicComplexTensor<T>& yhat) {
    if (y.codes.shape() != yhat.shape()) {
        throw shape_error("hinge targets " + y.codes.shape().to_string() + " vs predictions " +
                          yhat.shape().to_string());
    }
    BasicComplexTensor<T> e(yhat.shape());
    for (std::size_t j = 0; j < e.numel(); ++j) {
        const T yr = y.codes.re()[j], pr = yhat.re()[j];
        if (yr * pr > T(1)) continue;
        e.re()[j] = yr - pr;
        e.im()[j] = y.codes.im()[j] - yhat.im()[j];
    }
    return e;
}

double error_threshold(std::size_t epoch, double decay_rate) {
    return std::exp(-decay_rate * static_cast<double>(epoch));
}

std::string_view to_string(GateScope scope) {
    switch (scope) {
    case GateScope::correct_samples: return "correct-samples";
    case GateScope::whole_batch: return "whole-batch";
    case GateScope::margin_components: return "margin-components";
    }
    return "?";
}

GateScope parse_gate_scope(std::string_view text) {
    for (auto s : {GateScope::correct_samples, GateScope::whole_batch, GateScope::margin_components})
        if (to_string(s) == text) return s;
    throw argument_error("unknown gate scope '" + std::string(text) +
                         "' (expected correct-samples, whole-batch or margin-components)");
}

template <typename T>
HingeError<T> gate_error(BasicComplexTensor<T> e, std::span<const int> labels, const BasicComplexTensor<T>& yhat,
                         const HingeState& state, GateScope scope) {
    if (e.shape() != yhat.shape() || e.shape().rank() != 2 || labels.size() != e.shape()[0]) {
        throw shape_error("gate operands disagree: e " + e.shape().to_string() + ", yhat " +
                          yhat.shape().to_string() + ", " + std::to_string(labels.size()) + " labels");
    }
    HingeError<T> out;
    for (std::size_t j = 0; j < e.numel(); ++j) {
        out.e_max = std::max(out.e_max, static_cast<double>(std::hypot(e.re()[j], e.im()[j])));
    }
    const std::size_t n = e.shape()[0], k = e.shape()[1];
    out.row_mask.assign(n, 1);
    out.gated = out.e_max < state.threshold();
    if (out.gated && scope != GateScope::margin_components) {
        const auto predicted = predict_class(yhat);
        for (std::size_t t = 0; t < n; ++t) {
            if (scope == GateScope::correct_samples && predicted[t] != labels[t]) continue;
            out.row_mask[t] = 0;
            std::fill_n(e.re().begin() + static_cast<std::ptrdiff_t>(t * k), k, T(0));
            std::fill_n(e.im().begin() + static_cast<std::ptrdiff_t>(t * k), k, T(0));
        }
    }
    out.e = std::move(e);
    return out;
}

template <typename T>
double hinge_loss_value(const BasicComplexTensor<T>& e) {
    const std::size_t n = rows_of(e.shape());
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < e.numel(); ++j) {
        const double r = e.re()[j], i = e.im()[j];
        acc += r * r + i * i;
    }
    return acc / (2.0 * static_cast<double>(n));
}

template <typename T>
std::vector<int> predict_class(const BasicComplexTensor<T>& yhat) {
    if (yhat.shape().rank() != 2 || yhat.shape()[1] == 0) {
        throw shape_error("predict_class expects [N,K>=1], got " + yhat.shape().to_string());
    }
    const std::size_t n = yhat.shape()[0], k = yhat.shape()[1];
    std::vector<int> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        const T* row = yhat.re().data() + t * k;
        out[t] = static_cast<int>(std::max_element(row, row + k) - row);
    }
    return out;
}

template <typename T>
std::vector<int> predict_class_by_magnitude(const BasicComplexTensor<T>& yhat) {
    return predict_class(abs(yhat));
}

namespace ops {

template <typename T>
Var hinge_loss(Tape<T>& tape, Var yhat, std::span<const int> labels, std::size_t num_classes,
               const HingeState& state, GateScope scope, HingeStats* stats) {
    const auto& pred = tape.value(yhat);
    auto targets = encode_one_hot<T>(labels, num_classes);
    auto gated = gate_error(hinge_error(targets, pred), labels, pred, state, scope);
    if (stats) {
        stats->e_max = gated.e_max;
        stats->gated = gated.gated;
        stats->cleared_rows = static_cast<std::size_t>(std::count(gated.row_mask.begin(), gated.row_mask.end(), 0));
    }
    BasicComplexTensor<T> loss{Shape{}};
    loss.re()[0] = static_cast<T>(hinge_loss_value(gated.e));
    const std::size_t n = rows_of(pred.shape());
    // dE/dyhat_R = -e_R / n and dE/dyhat_I = -e_I / n, with e already masked.
    return tape.record(std::move(loss), {yhat},
                       [yhat, n, e = std::move(gated.e)](Tape<T>& t, std::size_t self) {
                           const T g = t.output_grad(self).re()[0];
                           const T factor = -g / static_cast<T>(n);
                           auto& dst = t.grad(yhat.id);
                           for (std::size_t j = 0; j < e.numel(); ++j) {
                               dst.re()[j] += factor * e.re()[j];
                               dst.im()[j] += factor * e.im()[j];
                           }
                       });
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels) {
    const auto& z = tape.value(logits);
    if (z.shape().rank() != 2 || z.shape()[0] != labels.size()) {
        throw shape_error("cross_entropy logits " + z.shape().to_string() + " vs " + std::to_string(labels.size()) +
                          " labels");
    }
    const std::size_t n = z.shape()[0], k = z.shape()[1];
    check_labels(labels, k);
    std::vector<T> probs(n * k);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const T* row = z.re().data() + t * k;
        const T mx = *std::max_element(row, row + k);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) denom += std::exp(static_cast<double>(row[c] - mx));
        for (std::size_t c = 0; c < k; ++c) {
            probs[t * k + c] = static_cast<T>(std::exp(static_cast<double>(row[c] - mx)) / denom);
        }
        total += std::log(denom) - static_cast<double>(row[labels[t]] - mx);
    }
    BasicComplexTensor<T> loss{Shape{}};
    loss.re()[0] = static_cast<T>(n ? total / static_cast<double>(n) : 0.0);
    std::vector<int> owned(labels.begin(), labels.end());
    return tape.record(std::move(loss), {logits},
                       [logits, n, k, probs = std::move(probs), owned = std::move(owned)](Tape<T>& t, std::size_t self) {
                           const T g = t.output_grad(self).re()[0] / static_cast<T>(n);
                           auto& dst = t.grad(logits.id);
                           for (std::size_t s = 0; s < n; ++s) {
                               for (std::size_t c = 0; c < k; ++c) {
                                   const T onehot = static_cast<std::size_t>(owned[s]) == c ? T(1) : T(0);
                                   dst.re()[s * k + c] += g * (probs[s * k + c] - onehot);
                               }
                           }
                       });
}

} // namespace ops

#define FCCNN_INSTANTIATE_OBJECTIVE(T)                                                                        \
    template ComplexOneHot<T> encode_one_hot<T>(std::span<const int>, std::size_t);                           \
    template BasicComplexTensor<T> hinge_error<T>(const ComplexOneHot<T>&, const BasicComplexTensor<T>&);     \
    template HingeError<T> gate_error<T>(BasicComplexTensor<T>, std::span<const int>,                         \
                                         const BasicComplexTensor<T>&, const HingeState&, GateScope);         \
    template double hinge_loss_value<T>(const BasicComplexTensor<T>&);                                        \
    template std::vector<int> predict_class<T>(const BasicComplexTensor<T>&);                                 \
    template std::vector<int> predict_class_by_magnitude<T>(const BasicComplexTensor<T>&);                    \
    template Var ops::hinge_loss<T>(Tape<T>&, Var, std::span<const int>, std::size_t, const HingeState&,      \
                                    GateScope, HingeStats*);                                                  \
    template Var ops::cross_entropy<T>(Tape<T>&, Var, std::span<const int>);

FCCNN_INSTANTIATE_OBJECTIVE(float)
FCCNN_INSTANTIATE_OBJECTIVE(double)

#undef FCCNN_INSTANTIATE_OBJECTIVE

} // namespace fccnn
