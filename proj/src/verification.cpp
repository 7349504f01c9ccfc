#include "fccnn/verification.hpp"

#include "fccnn/nn.hpp"
#include "fccnn/objective.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace fccnn {

namespace {

using Tensor = ComplexTensorF64;

double uniform(std::uint64_t& state, double lo, double hi) {
    return lo + (hi - lo) * detail::unit_uniform(state);
}

Tensor random_tensor(const Shape& shape, std::uint64_t& state, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (auto& v : t.re()) v = uniform(state, lo, hi);
    for (auto& v : t.im()) v = uniform(state, lo, hi);
    return t;
}

// keeps |v| >= margin, preserving sign
double push_away_from_zero(double v, double margin) {
    if (std::abs(v) >= margin) return v;
    return v < 0 ? -margin - std::abs(v) : margin + std::abs(v);
}

// sum Re(c * out): a generic real projection so every output coordinate and
// both planes of its Jacobian contribute.
Var project(Tape<double>& tape, Var out, std::uint64_t& state) {
    Var c = tape.constant(random_tensor(tape.value(out).shape(), state));
    return ops::sum(tape, ops::real_part(tape, ops::mul(tape, out, c)));
}

struct Instance {
    std::vector<Parameter<double>> params;
    ScalarProgram<double> program;
};

using CaseFactory = std::function<Instance(std::uint64_t& state)>;

struct Case {
    std::string name;
    CaseFactory make;
};

Case conv_case(std::string name, Conv2dSpec spec, Shape input) {
    return {std::move(name), [spec, input](std::uint64_t& state) {
                Instance in;
                in.params.emplace_back("input", random_tensor(input, state));
                in.params.emplace_back("weight", random_tensor(spec.weight_shape(), state));
                if (spec.bias) in.params.emplace_back("bias", random_tensor(Shape{spec.out_channels}, state));
                const std::uint64_t proj_seed = detail::splitmix64(state);
                in.program = [spec, proj_seed](Tape<double>& tape, std::span<const Var> p) {
                    std::optional<Var> bias;
                    if (spec.bias) bias = p[2];
                    std::uint64_t s = proj_seed;
                    return project(tape, ops::conv2d(tape, p[0], p[1], spec, bias), s);
                };
                return in;
            }};
}

Case linear_case() {
    return {"linear", [](std::uint64_t& state) {
                const LinearSpec spec{5, 3, true};
                Instance in;
                in.params.emplace_back("input", random_tensor(Shape{4, 5}, state));
                in.params.emplace_back("weight", random_tensor(spec.weight_shape(), state));
                in.params.emplace_back("bias", random_tensor(spec.bias_shape(), state));
                const std::uint64_t proj_seed = detail::splitmix64(state);
                in.program = [spec, proj_seed](Tape<double>& tape, std::span<const Var> p) {
                    std::uint64_t s = proj_seed;
                    return project(tape, ops::linear(tape, p[0], p[1], spec, p[2]), s);
                };
                return in;
            }};
}

Case activation_case(std::string name, std::function<Var(Tape<double>&, Var)> op, bool real_input) {
    return {name, [op, real_input](std::uint64_t& state) {
                Instance in;
                Tensor z = random_tensor(Shape{3, 7}, state);
                for (std::size_t j = 0; j < z.numel(); ++j) {
                    // kinks sit on the axes (CReLU, ReLU) and at the origin (cardioid)
                    z.re()[j] = push_away_from_zero(z.re()[j], 1e-2);
                    z.im()[j] = push_away_from_zero(z.im()[j], 1e-2);
                }
                in.params.emplace_back("z", std::move(z));
                const std::uint64_t proj_seed = detail::splitmix64(state);
                in.program = [op, real_input, proj_seed](Tape<double>& tape, std::span<const Var> p) {
                    Var x = real_input ? ops::real_part(tape, p[0]) : p[0];
                    std::uint64_t s = proj_seed;
                    return project(tape, op(tape, x), s);
                };
                return in;
            }};
}

// Redraws until no component sits within `margin` of the hinge boundary and
// the batch maximum is not within `margin` of the threshold.
Tensor hinge_point(std::span<const int> labels, std::size_t k, const HingeState& state_h, bool near_targets,
                   std::uint64_t& state) {
    const auto y = encode_one_hot<double>(labels, k);
    const double margin = 1e-2;
    for (;;) {
        Tensor yhat = near_targets ? y.codes : random_tensor(y.codes.shape(), state, -2.0, 2.0);
        if (near_targets) {
            for (auto& v : yhat.re()) v = 0.8 * v + uniform(state, -0.05, 0.05);
            for (auto& v : yhat.im()) v = 0.8 * v + uniform(state, -0.05, 0.05);
        }
        bool ok = true;
        for (std::size_t j = 0; j < yhat.numel() && ok; ++j)
            ok = std::abs(y.codes.re()[j] * yhat.re()[j] - 1.0) > margin;
        if (!ok) continue;
        const auto e = hinge_error(y, yhat);
        double e_max = 0.0;
        for (std::size_t j = 0; j < e.numel(); ++j) e_max = std::max(e_max, std::hypot(e.re()[j], e.im()[j]));
        if (std::abs(e_max - state_h.threshold()) <= margin) continue;
        return yhat;
    }
}

Case hinge_case() {
    return {"hinge_gate_loss", [](std::uint64_t& state) {
                const std::size_t n = 6, k = 4;
                std::vector<int> labels(n);
                for (auto& l : labels) l = static_cast<int>(detail::splitmix64(state) % k);
                HingeState hs;
                hs.epoch = static_cast<std::size_t>(detail::splitmix64(state) % 40);
                // about one point in three lands in the gated regime
                const bool near = detail::splitmix64(state) % 3 == 0;
                Instance in;
                in.params.emplace_back("yhat", hinge_point(labels, k, hs, near, state));
                in.program = [labels, k, hs](Tape<double>& tape, std::span<const Var> p) {
                    return ops::hinge_loss(tape, p[0], labels, k, hs);
                };
                return in;
            }};
}

Case linear_hinge_case() {
    return {"linear_hinge", [](std::uint64_t& state) {
                const LinearSpec spec{4, 3, true};
                const std::size_t n = 5;
                std::vector<int> labels(n);
                for (auto& l : labels) l = static_cast<int>(detail::splitmix64(state) % spec.out_features);
                Instance in;
                // resample until the head output is clear of hinge margins and
                // the gate switch at epoch 0
                for (;;) {
                    Tensor x = random_tensor(Shape{n, spec.in_features}, state);
                    Tensor w = random_tensor(spec.weight_shape(), state);
                    Tensor b = random_tensor(spec.bias_shape(), state);
                    Tensor out = complex_linear(x, spec, w, &b);
                    const auto y = encode_one_hot<double>(labels, spec.out_features);
                    bool ok = true;
                    for (std::size_t j = 0; j < out.numel() && ok; ++j)
                        ok = std::abs(y.codes.re()[j] * out.re()[j] - 1.0) > 1e-2;
                    const auto e = hinge_error(y, out);
                    double e_max = 0.0;
                    for (std::size_t j = 0; j < e.numel(); ++j)
                        e_max = std::max(e_max, std::hypot(e.re()[j], e.im()[j]));
                    if (!ok || std::abs(e_max - 1.0) <= 1e-2) continue;
                    in.params.emplace_back("input", std::move(x));
                    in.params.emplace_back("weight", std::move(w));
                    in.params.emplace_back("bias", std::move(b));
                    break;
                }
                in.program = [spec, labels](Tape<double>& tape, std::span<const Var> p) {
                    Var out = ops::linear(tape, p[0], p[1], spec, p[2]);
                    return ops::hinge_loss(tape, out, labels, spec.out_features, HingeState{});
                };
                return in;
            }};
}

std::vector<Case> suite_cases() {
    std::vector<Case> cases;
    cases.push_back(conv_case("conv_grouped", Conv2dSpec{4, 6, 3, 3, 1, 2, 1, false}, Shape{2, 4, 5, 5}));
    cases.push_back(conv_case("conv_strided", Conv2dSpec{3, 4, 3, 3, 2, 1, 1, true}, Shape{2, 3, 7, 7}));
    cases.push_back(conv_case("conv_depthwise", Conv2dSpec{4, 8, 4, 4, 2, 4, 0, false}, Shape{2, 4, 6, 6}));
    cases.push_back(linear_case());
    cases.push_back(activation_case(
        "cardioid", [](Tape<double>& t, Var z) { return ops::cardioid(t, z); }, false));
    cases.push_back(activation_case(
        "crelu", [](Tape<double>& t, Var z) { return ops::crelu(t, z); }, false));
    cases.push_back(activation_case(
        "relu", [](Tape<double>& t, Var z) { return ops::relu(t, z); }, true));
    cases.push_back(hinge_case());
    cases.push_back(linear_hinge_case());
    return cases;
}

} // namespace

GradSuiteResult run_gradient_suite(std::size_t points, std::uint64_t seed, double eps, double tolerance) {
    if (points == 0) throw argument_error("gradient suite needs at least one point");
    GradSuiteResult result;
    result.tolerance = tolerance;
    const auto cases = suite_cases();
    for (std::size_t c = 0; c < cases.size(); ++c) {
        GradCaseResult cr;
        cr.name = cases[c].name;
        for (std::size_t p = 0; p < points; ++p) {
            std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ull * (c + 1)) ^ (0xD1B54A32D192ED03ull * (p + 1));
            Instance inst = cases[c].make(state);
            std::vector<Parameter<double>*> ptrs;
            for (auto& param : inst.params) ptrs.push_back(&param);
            const auto r = grad_check(inst.program, ptrs, eps);
            cr.coordinates += r.coordinates;
            if (r.max_rel_error > cr.max_rel_error || cr.worst.empty()) {
                cr.max_rel_error = std::max(cr.max_rel_error, r.max_rel_error);
                cr.worst = std::to_string(p) + ":" + r.worst_coordinate;
            }
            ++cr.points;
        }
        result.max_rel_error = std::max(result.max_rel_error, cr.max_rel_error);
        result.cases.push_back(std::move(cr));
    }
    return result;
}

std::string format_gradient_suite(const GradSuiteResult& result) {
    std::ostringstream out;
    char line[256];
    for (const auto& c : result.cases) {
        std::snprintf(line, sizeof line, "%-16s points=%zu coords=%zu max_rel_error=%.3e worst=%s %s\n",
                      c.name.c_str(), c.points, c.coordinates, c.max_rel_error, c.worst.c_str(),
                      c.max_rel_error < result.tolerance ? "ok" : "FAIL");
        out << line;
    }
    std::snprintf(line, sizeof line, "overall max_rel_error=%.3e tolerance=%.1e %s\n", result.max_rel_error,
                  result.tolerance, result.passed() ? "PASS" : "FAIL");
    out << line;
    return out.str();
}

} // namespace fccnn
