#include "fccnn/autograd.hpp"

#include <cassert>
#include <cmath>

namespace fccnn {

template <typename T>
Var Tape<T>::constant(Tensor value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& param) {
    Node node;
    node.value = param.value;
    node.param = &param;
    node.requires_grad = param.trainable;
    if (param.trainable && param.grad.shape() != param.value.shape()) param.zero_grad();
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    for (Var in : inputs) {
        if (in.id >= nodes_.size()) throw Error(ErrorCode::internal, "tape input recorded out of order");
        node.inputs.push_back(in.id);
        node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
typename Tape<T>::Tensor& Tape<T>::grad(std::size_t id) {
    Node& node = nodes_.at(id);
    if (!node.requires_grad) throw Error(ErrorCode::internal, "gradient requested for a constant node");
    if (!node.grad) node.grad = std::make_unique<Tensor>(node.value.shape());
    return *node.grad;
}

template <typename T>
const typename Tape<T>::Tensor& Tape<T>::output_grad(std::size_t id) const {
    const Node& node = nodes_.at(id);
    if (!node.grad) throw Error(ErrorCode::internal, "no gradient has reached this node");
    return *node.grad;
}

template <typename T>
void Tape<T>::backward(Var terminal) {
    Node& last = nodes_.at(terminal.id);
    if (last.value.numel() != 1 || !last.value.is_real()) {
        throw argument_error("backward needs a real scalar terminal, got shape " + last.value.shape().to_string());
    }
    if (!last.requires_grad) return;
    grad(terminal.id).re()[0] = T(1);

    for (std::size_t id = terminal.id + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.requires_grad || !node.grad) continue;
        if (node.param) {
            auto& dst = node.param->grad;
            auto gr = node.grad->re(), gi = node.grad->im();
            auto dr = dst.re(), di = dst.im();
            for (std::size_t i = 0; i < gr.size(); ++i) {
                dr[i] += gr[i];
                di[i] += gi[i];
            }
        } else if (node.backward) {
            for ([[maybe_unused]] auto in : node.inputs) assert(in < id);
            node.backward(*this, id);
        }
        node.grad.reset();
    }
}

GradCheckResult grad_check(const ScalarProgram<double>& program, std::span<Parameter<double>* const> params,
                           double eps) {
    if (!(eps > 0.0)) throw argument_error("grad_check eps must be positive");

    auto run = [&](bool differentiate) {
        Tape<double> tape;
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (auto* p : params) vars.push_back(tape.parameter(*p));
        Var out = program(tape, vars);
        const double value = tape.value(out).re()[0];
        if (differentiate) tape.backward(out);
        return value;
    };

    for (auto* p : params) p->zero_grad();
    run(true);

    GradCheckResult result;
    for (auto* p : params) {
        for (int plane = 0; plane < 2; ++plane) {
            auto values = plane == 0 ? p->value.re() : p->value.im();
            auto analytic = plane == 0 ? p->grad.re() : p->grad.im();
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double x = values[i];
                values[i] = x + eps;
                const double fp = run(false);
                values[i] = x - eps;
                const double fm = run(false);
                values[i] = x;
                const std::string coord = p->name + (plane == 0 ? ".re[" : ".im[") + std::to_string(i) + "]";
                if (!std::isfinite(fp) || !std::isfinite(fm)) {
                    throw numeric_error("non-finite loss when perturbing " + coord);
                }
                const double numeric = (fp - fm) / (2.0 * eps);
                const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
                ++result.coordinates;
                if (err > result.max_rel_error || result.worst_coordinate.empty()) {
                    result.max_rel_error = err;
                    result.worst_coordinate = coord;
                }
            }
        }
    }
    return result;
}

namespace ops {

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
    return tape.record(fccnn::add(tape.value(a), tape.value(b)), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        for (Var in : {a, b}) {
            if (!t.requires_grad(in)) continue;
            auto& dst = t.grad(in.id);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                dst.re()[i] += g.re()[i];
                dst.im()[i] += g.im()[i];
            }
        }
    });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
    return tape.record(fccnn::sub(tape.value(a), tape.value(b)), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        const T sign[2] = {T(1), T(-1)};
        int k = 0;
        for (Var in : {a, b}) {
            const T s = sign[k++];
            if (!t.requires_grad(in)) continue;
            auto& dst = t.grad(in.id);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                dst.re()[i] += s * g.re()[i];
                dst.im()[i] += s * g.im()[i];
            }
        }
    });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
    return tape.record(fccnn::mul(tape.value(a), tape.value(b)), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        // g_a = conj(b) g, g_b = conj(a) g
        auto accumulate = [&](Var target, Var other) {
            if (!t.requires_grad(target)) return;
            const auto& o = t.value(other);
            auto& dst = t.grad(target.id);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                const T orr = o.re()[i], oi = o.im()[i], gr = g.re()[i], gi = g.im()[i];
                dst.re()[i] += orr * gr + oi * gi;
                dst.im()[i] += orr * gi - oi * gr;
            }
        };
        accumulate(a, b);
        accumulate(b, a);
    });
}

template <typename T>
Var conj(Tape<T>& tape, Var a) {
    return tape.record(fccnn::conj(tape.value(a)), {a}, [a](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            dst.re()[i] += g.re()[i];
            dst.im()[i] -= g.im()[i];
        }
    });
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T factor) {
    return tape.record(fccnn::scale(tape.value(a), factor), {a}, [a, factor](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            dst.re()[i] += factor * g.re()[i];
            dst.im()[i] += factor * g.im()[i];
        }
    });
}

template <typename T>
Var real_part(Tape<T>& tape, Var a) {
    const auto& x = tape.value(a);
    auto re = x.re();
    auto out = BasicComplexTensor<T>::from_real(x.shape(), std::vector<T>(re.begin(), re.end()));
    return tape.record(std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) dst.re()[i] += g.re()[i];
    });
}

template <typename T>
Var magnitude(Tape<T>& tape, Var a) {
    return tape.record(fccnn::abs(tape.value(a)), {a}, [a](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        const auto& x = t.value(a);
        const auto& r = t.value(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const T mag = r.re()[i];
            if (mag == T(0)) continue;
            dst.re()[i] += g.re()[i] * x.re()[i] / mag;
            dst.im()[i] += g.re()[i] * x.im()[i] / mag;
        }
    });
}

template <typename T>
Var sum(Tape<T>& tape, Var a) {
    const auto& x = tape.value(a);
    T sr = 0, si = 0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        sr += x.re()[i];
        si += x.im()[i];
    }
    BasicComplexTensor<T> out{Shape{}};
    out.re()[0] = sr;
    out.im()[0] = si;
    return tape.record(std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < dst.numel(); ++i) {
            dst.re()[i] += g.re()[0];
            dst.im()[i] += g.im()[0];
        }
    });
}

template <typename T>
Var reshape(Tape<T>& tape, Var a, Shape shape) {
    return tape.record(fccnn::reshape(tape.value(a), std::move(shape)), {a}, [a](Tape<T>& t, std::size_t self) {
        const auto& g = t.output_grad(self);
        auto& dst = t.grad(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            dst.re()[i] += g.re()[i];
            dst.im()[i] += g.im()[i];
        }
    });
}

template <typename T>
Var flatten(Tape<T>& tape, Var a, std::size_t start_axis) {
    const auto flat = fccnn::flatten(tape.value(a), start_axis);
    return reshape(tape, a, flat.shape());
}

#define FCCNN_INSTANTIATE_OPS(T)                                     \
    template Var add<T>(Tape<T>&, Var, Var);                         \
    template Var sub<T>(Tape<T>&, Var, Var);                         \
    template Var mul<T>(Tape<T>&, Var, Var);                         \
    template Var conj<T>(Tape<T>&, Var);                             \
    template Var scale<T>(Tape<T>&, Var, T);                         \
    template Var real_part<T>(Tape<T>&, Var);                        \
    template Var magnitude<T>(Tape<T>&, Var);                        \
    template Var sum<T>(Tape<T>&, Var);                              \
    template Var reshape<T>(Tape<T>&, Var, Shape);                   \
    template Var flatten<T>(Tape<T>&, Var, std::size_t);

FCCNN_INSTANTIATE_OPS(float)
FCCNN_INSTANTIATE_OPS(double)

#undef FCCNN_INSTANTIATE_OPS

} // namespace ops

template class Tape<float>;
template class Tape<double>;

} // namespace fccnn
