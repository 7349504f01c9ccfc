#pragma once

// Reverse-mode differentiation of a real scalar loss over complex values.
//
// Gradient convention: every gradient buffer is a complex tensor whose real
// plane holds dE/dx_R and whose imaginary plane holds dE/dx_I, the partials of
// the real loss E with respect to the real and imaginary parts treated as
// independent real variables. The conjugate Wirtinger derivative is
//
//     dE/d(conj x) = 0.5 * (dE/dx_R + i * dE/dx_I),
//
// so the stored pair is 2 * dE/d(conj x). For a holomorphic map y = f(x) the
// backward rule reads g_x = conj(f'(x)) * g_y; non-holomorphic primitives
// apply the transposed 2x2 real Jacobian instead.

#include "fccnn/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fccnn {

template <typename T>
struct Parameter {
    std::string name;
    BasicComplexTensor<T> value;
    BasicComplexTensor<T> grad;  // re plane: dE/dW_R, im plane: dE/dW_I
    bool trainable = true;
    bool decay = true;  // decoupled weight decay applies

    Parameter() = default;
    Parameter(std::string n, BasicComplexTensor<T> v, bool decayed = true)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()), decay(decayed) {}

    std::span<const T> grad_re() const noexcept { return grad.re(); }
    std::span<const T> grad_im() const noexcept { return grad.im(); }

    void zero_grad() {
        if (grad.shape() != value.shape()) grad = BasicComplexTensor<T>(value.shape());
        grad.fill({T(0), T(0)});
    }
};

/// Handle of a node recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

template <typename T>
class Tape {
public:
    using Tensor = BasicComplexTensor<T>;
    /// Called once during backward with the node's own id; reads saved values
    /// through the tape and accumulates into input gradients with grad().
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Var constant(Tensor value);
    Var parameter(Parameter<T>& param);
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }

    /// Gradient buffer of a node, allocated as zeros on first use.
    Tensor& grad(std::size_t id);
    /// Gradient flowing into `id` from downstream; valid inside a BackwardFn.
    const Tensor& output_grad(std::size_t id) const;

    /// Accumulates dE/d(parameter) into every trainable Parameter reached
    /// from `terminal`, which must be a real scalar.
    void backward(Var terminal);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        Parameter<T>* param = nullptr;
        bool requires_grad = false;
        std::unique_ptr<Tensor> grad;
    };
    std::vector<Node> nodes_;
};

/// Result of comparing analytic gradients against central differences.
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
    std::size_t coordinates = 0;
};

/// The program maps registered parameter vars to a real scalar loss var.
template <typename T>
using ScalarProgram = std::function<Var(Tape<T>&, std::span<const Var> params)>;

/// Compares every real coordinate (both planes) of every parameter against
/// (f(x+eps) - f(x-eps)) / (2 eps); the error is |a - n| / max(1, |n|).
GradCheckResult grad_check(const ScalarProgram<double>& program, std::span<Parameter<double>* const> params,
                           double eps);

namespace ops {

template <typename T> Var add(Tape<T>& tape, Var a, Var b);
template <typename T> Var sub(Tape<T>& tape, Var a, Var b);
template <typename T> Var mul(Tape<T>& tape, Var a, Var b);
template <typename T> Var conj(Tape<T>& tape, Var a);
template <typename T> Var scale(Tape<T>& tape, Var a, T factor);
/// Re(a) with a zero imaginary plane.
template <typename T> Var real_part(Tape<T>& tape, Var a);
/// Elementwise magnitude |a| with a zero imaginary plane; gradient 0 at 0.
template <typename T> Var magnitude(Tape<T>& tape, Var a);
/// Sum of all elements as a rank-0 tensor.
template <typename T> Var sum(Tape<T>& tape, Var a);
template <typename T> Var reshape(Tape<T>& tape, Var a, Shape shape);
template <typename T> Var flatten(Tape<T>& tape, Var a, std::size_t start_axis);

} // namespace ops

} // namespace fccnn
