#pragma once

// Complex targets and the regularized complex hinge objective.
//
//   target     y[t,k] = 1+i for the labelled class, -1-i elsewhere
//   hinge      e = 0 where Re(y) Re(yhat) > 1, otherwise y - yhat
//   threshold  e_thr(epoch) = exp(-0.05 epoch)
//   gate       e_M = max |e| over the batch; when e_M < e_thr the rows of
//              correctly predicted samples are zeroed
//   loss       E = 1/(2n) sum |e|^2, n = number of samples in the batch
//
// The class decision compares real components only.

#include "fccnn/autograd.hpp"
#include "fccnn/tensor.hpp"

#include <string_view>
#include <vector>

namespace fccnn {

template <typename T>
struct ComplexOneHot {
    BasicComplexTensor<T> codes;  // [N, K]
};

template <typename T>
ComplexOneHot<T> encode_one_hot(std::span<const int> labels, std::size_t num_classes);

template <typename T>
BasicComplexTensor<T> hinge_error(const ComplexOneHot<T>& y, const BasicComplexTensor<T>& yhat);

inline constexpr double kThresholdDecay = 0.05;

double error_threshold(std::size_t epoch, double decay_rate = kThresholdDecay);

struct HingeState {
    std::size_t epoch = 0;
    double decay_rate = kThresholdDecay;

    double threshold() const { return error_threshold(epoch, decay_rate); }
    void advance() { ++epoch; }
};

/// Which rows the gate clears once the batch error falls below threshold.
enum class GateScope {
    correct_samples,  // only rows whose argmax prediction matches the label
    whole_batch,      // every row, the literal reading of the update condition
    margin_components,  // only components meeting the margin; hinge_error has already zeroed those
};

std::string_view to_string(GateScope scope);
GateScope parse_gate_scope(std::string_view text);

template <typename T>
struct HingeError {
    BasicComplexTensor<T> e;  // [N, K]
    double e_max = 0.0;
    bool gated = false;
    std::vector<unsigned char> row_mask;  // 1 keeps the row, 0 cleared by the gate
};

template <typename T>
HingeError<T> gate_error(BasicComplexTensor<T> e, std::span<const int> labels, const BasicComplexTensor<T>& yhat,
                         const HingeState& state, GateScope scope = GateScope::correct_samples);

/// E = 1/(2N) sum_j |e_j|^2 with N the leading extent of e.
template <typename T>
double hinge_loss_value(const BasicComplexTensor<T>& e);

/// Argmax of the real components per row; ties go to the lowest index.
template <typename T>
std::vector<int> predict_class(const BasicComplexTensor<T>& yhat);

/// Argmax of magnitudes per row.
template <typename T>
std::vector<int> predict_class_by_magnitude(const BasicComplexTensor<T>& yhat);

struct HingeStats {
    double e_max = 0.0;
    bool gated = false;
    std::size_t cleared_rows = 0;
};

namespace ops {

/// hinge -> gate -> loss. The gate is a constant mask during backward.
template <typename T>
Var hinge_loss(Tape<T>& tape, Var yhat, std::span<const int> labels, std::size_t num_classes,
               const HingeState& state, GateScope scope = GateScope::correct_samples, HingeStats* stats = nullptr);

/// Mean softmax cross-entropy over the real components of [N, K] logits.
template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels);

} // namespace ops

} // namespace fccnn
