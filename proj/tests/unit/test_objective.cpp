#include "helpers.hpp"

#include "fccnn/objective.hpp"

#include <cmath>

using namespace fccnn;
using testing::error_code_of;
using C = std::complex<double>;

namespace {

ComplexTensorF64 row(std::initializer_list<C> values) {
    std::vector<C> v(values);
    return ComplexTensorF64::from_values(Shape{1, v.size()}, v);
}

ComplexOneHot<double> single_code(C y) { return ComplexOneHot<double>{row({y})}; }

} // namespace

TEST_CASE("one-hot examples") {
    const std::vector<int> l3{3};
    const auto c = encode_one_hot<double>(l3, 10);
    CHECK(c.codes.shape() == Shape{1, 10});
    for (std::size_t k = 0; k < 10; ++k) CHECK(c.codes.at(k) == (k == 3 ? C(1, 1) : C(-1, -1)));

    const std::vector<int> l0{0};
    const auto d = encode_one_hot<double>(l0, 2);
    CHECK(d.codes.at(0) == C(1, 1));
    CHECK(d.codes.at(1) == C(-1, -1));

    const std::vector<int> l01{0, 1};
    const auto e = encode_one_hot<double>(l01, 2);
    CHECK(e.codes.at(0) == C(1, 1));
    CHECK(e.codes.at(1) == C(-1, -1));
    CHECK(e.codes.at(2) == C(-1, -1));
    CHECK(e.codes.at(3) == C(1, 1));

    const std::vector<int> bad{4};
    CHECK(error_code_of([&] { encode_one_hot<double>(bad, 4); }) == ErrorCode::invalid_argument);
    const std::vector<int> neg{-1};
    CHECK(error_code_of([&] { encode_one_hot<double>(neg, 4); }) == ErrorCode::invalid_argument);
}

TEST_CASE("hinge examples") {
    CHECK(hinge_error(single_code({1, 1}), row({{2, 0.5}})).at(0) == C(0, 0));
    CHECK(hinge_error(single_code({1, 1}), row({{0.5, 0.5}})).at(0) == C(0.5, 0.5));
    CHECK(hinge_error(single_code({-1, -1}), row({{-2, 0}})).at(0) == C(0, 0));
    // margin of exactly 1 is not > 1
    CHECK(hinge_error(single_code({1, 1}), row({{1, 0}})).at(0) == C(0, 1));
    CHECK(error_code_of([] { hinge_error(single_code({1, 1}), row({{1, 0}, {1, 0}})); }) == ErrorCode::shape);
}

TEST_CASE("threshold schedule") {
    CHECK(error_threshold(0) == 1.0);
    CHECK(error_threshold(20) == doctest::Approx(0.36788).epsilon(1e-5));
    CHECK(error_threshold(60) == doctest::Approx(0.04979).epsilon(1e-4));
    CHECK(error_threshold(20) == std::exp(-1.0));
    for (std::size_t e = 0; e < 500; ++e) {
        CHECK(error_threshold(e + 1) < error_threshold(e));
        CHECK(error_threshold(e + 1) > 0.0);
    }
    HingeState s;
    CHECK(s.threshold() == 1.0);
    s.advance();
    CHECK(s.epoch == 1);
    CHECK(s.threshold() == std::exp(-0.05));
}

TEST_CASE("gate examples") {
    const std::vector<int> labels{0, 1};
    SUBCASE("zeros stay zero") {
        const auto g = gate_error(ComplexTensorF64(Shape{2, 2}), labels, ComplexTensorF64(Shape{2, 2}), HingeState{});
        CHECK(g.e_max == 0.0);
        CHECK(g.gated);
        CHECK(g.e == ComplexTensorF64(Shape{2, 2}));
    }
    // yhat close to the codes: both rows correct, max |e| = 0.9
    const auto yhat = ComplexTensorF64::from_values(Shape{2, 2}, std::vector<C>{{0.1, 1}, {-1, -1}, {-1, -1}, {1, 0.5}});
    const auto y = encode_one_hot<double>(labels, 2);
    const auto e = hinge_error(y, yhat);
    SUBCASE("epoch 0 zeroes every correct row") {
        const auto g = gate_error(e, labels, yhat, HingeState{0});
        CHECK(g.e_max == doctest::Approx(0.9));
        CHECK(g.gated);
        CHECK(g.e == ComplexTensorF64(Shape{2, 2}));
    }
    SUBCASE("epoch 40 leaves e unchanged") {
        const auto g = gate_error(e, labels, yhat, HingeState{40});
        CHECK_FALSE(g.gated);
        CHECK(g.e == e);
    }
}

TEST_CASE("e_max equal to the threshold leaves e unchanged") {
    const std::vector<int> labels{0};
    const auto yhat = row({{0, 1}, {-1, -1}});
    const auto e = hinge_error(encode_one_hot<double>(labels, 2), yhat);  // |e| = 1 exactly
    const auto g = gate_error(e, labels, yhat, HingeState{0});
    CHECK(g.e_max == 1.0);
    CHECK_FALSE(g.gated);
    CHECK(g.e == e);
}

TEST_CASE("gate never touches misclassified rows") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 6, k = 2 + rng() % 5;
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng() % k);
        auto yhat = testing::random_tensor(Shape{n, k}, rng, -1.5, 1.5);
        const auto e = hinge_error(encode_one_hot<double>(labels, k), yhat);
        const auto pred = predict_class(yhat);
        for (auto scope : {GateScope::correct_samples, GateScope::margin_components}) {
            HingeState s{rng() % 80};
            const auto g = gate_error(e, labels, yhat, s, scope);
            for (std::size_t t = 0; t < n; ++t) {
                if (pred[t] == labels[t]) continue;
                for (std::size_t j = 0; j < k; ++j) CHECK(g.e.at(t * k + j) == e.at(t * k + j));
            }
        }
    }
}

TEST_CASE("gate scopes coincide once the threshold is at most 1") {
    // Any misclassified row has some component with |e| >= 1, so e_max < e_thr <= 1
    // implies every row is correct.
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 4, k = 2 + rng() % 4;
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng() % k);
        const auto y = encode_one_hot<double>(labels, k);
        auto yhat = y.codes;
        std::uniform_real_distribution<double> u(-0.6, 0.6);
        for (auto& v : yhat.re()) v = 0.7 * v + u(rng);
        for (auto& v : yhat.im()) v = 0.7 * v + u(rng);
        const auto e = hinge_error(y, yhat);
        const HingeState s{rng() % 10};
        const auto a = gate_error(e, labels, yhat, s, GateScope::correct_samples);
        const auto b = gate_error(e, labels, yhat, s, GateScope::whole_batch);
        CHECK(a.e == b.e);
    }
}

TEST_CASE("loss examples") {
    CHECK(hinge_loss_value(row({{0.5, 0.5}})) == 0.25);
    CHECK(hinge_loss_value(ComplexTensorF64(Shape{3, 4})) == 0.0);
    std::mt19937_64 rng(43);
    auto e = testing::random_tensor(Shape{5, 3}, rng);
    CHECK(hinge_loss_value(conj(e)) == hinge_loss_value(e));
    // n counts samples, not components
    CHECK(hinge_loss_value(ComplexTensorF64::from_values(Shape{2, 2}, std::vector<C>{{1, 0}, {0, 1}, {1, 1}, {0, 0}})) ==
          doctest::Approx(4.0 / 4.0));
}

TEST_CASE("loss is invariant under a global phase rotation") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        auto e = testing::random_tensor(Shape{4, 5}, rng);
        ComplexTensorF64 rot(e.shape());
        rot.fill(std::polar(1.0, std::uniform_real_distribution<double>(-3.14, 3.14)(rng)));
        CHECK(std::abs(hinge_loss_value(mul(e, rot)) - hinge_loss_value(e)) <= 1e-6);
    }
}

TEST_CASE("predict examples") {
    CHECK(predict_class(row({{0.2, 9}, {0.9, -9}})) == std::vector<int>{1});
    CHECK(predict_class(row({{-1, -1}, {1, 1}, {-1, -1}})) == std::vector<int>{1});
    CHECK(predict_class(row({{0.5, 0}, {0.5, 0}})) == std::vector<int>{0});
    CHECK(predict_class_by_magnitude(row({{0.2, 9}, {0.9, -1}})) == std::vector<int>{0});
}

TEST_CASE("predict inverts one-hot for every class") {
    for (std::size_t k : {2u, 10u, 100u}) {
        std::vector<int> labels(k);
        for (std::size_t c = 0; c < k; ++c) labels[c] = static_cast<int>(c);
        CHECK(predict_class(encode_one_hot<double>(labels, k).codes) == labels);
    }
}

TEST_CASE("hinge error vanishes iff every margin holds, and then so do loss and gradient") {
    const std::vector<int> labels{1, 0};
    auto yhat = ComplexTensorF64::from_values(Shape{2, 2}, std::vector<C>{{-1.5, 0}, {2, 3}, {1.1, -4}, {-3, 0}});
    const auto y = encode_one_hot<double>(labels, 2);
    CHECK(hinge_error(y, yhat) == ComplexTensorF64(Shape{2, 2}));
    Parameter<double> p("yhat", yhat);
    Tape<double> t;
    Var loss = ops::hinge_loss(t, t.parameter(p), labels, 2, HingeState{40});
    CHECK(t.value(loss).re()[0] == 0.0);
    t.backward(loss);
    for (double g : p.grad_re()) CHECK(g == 0.0);
    for (double g : p.grad_im()) CHECK(g == 0.0);

    yhat.re()[2] = 0.9;  // margin 0.9 fails
    CHECK(hinge_error(y, yhat).at(2) == C(1 - 0.9, 1 + 4));
}

TEST_CASE("hinge loss gradient is -e/n with the gate as a constant mask") {
    const std::vector<int> labels{0, 1, 1};
    std::mt19937_64 rng(45);
    Parameter<double> p("yhat", testing::random_tensor(Shape{3, 4}, rng, -2, 2));
    HingeStats stats;
    Tape<double> t;
    Var loss = ops::hinge_loss(t, t.parameter(p), labels, 4, HingeState{30}, GateScope::correct_samples, &stats);
    t.backward(loss);
    const auto e = gate_error(hinge_error(encode_one_hot<double>(labels, 4), p.value), labels, p.value, HingeState{30});
    CHECK(stats.e_max == e.e_max);
    CHECK(t.value(loss).re()[0] == doctest::Approx(hinge_loss_value(e.e)));
    for (std::size_t j = 0; j < 12; ++j) {
        CHECK(p.grad_re()[j] == doctest::Approx(-e.e.re()[j] / 3.0));
        CHECK(p.grad_im()[j] == doctest::Approx(-e.e.im()[j] / 3.0));
    }
}

TEST_CASE("cross entropy on real logits") {
    const std::vector<int> labels{2};
    Parameter<double> p("logits", ComplexTensorF64(Shape{1, 3}, {0.5, -1, 2}, {9, 9, 9}));
    Tape<double> t;
    Var loss = ops::cross_entropy(t, t.parameter(p), labels);
    const double den = std::exp(0.5) + std::exp(-1.0) + std::exp(2.0);
    CHECK(t.value(loss).re()[0] == doctest::Approx(-std::log(std::exp(2.0) / den)).epsilon(1e-12));
    t.backward(loss);
    CHECK(p.grad_re()[0] == doctest::Approx(std::exp(0.5) / den));
    CHECK(p.grad_re()[2] == doctest::Approx(std::exp(2.0) / den - 1));
    for (double g : p.grad_im()) CHECK(g == 0.0);
}

TEST_CASE("gate scope names round trip") {
    for (auto s : {GateScope::correct_samples, GateScope::whole_batch, GateScope::margin_components})
        CHECK(parse_gate_scope(to_string(s)) == s);
    CHECK(error_code_of([] { parse_gate_scope("sometimes"); }) == ErrorCode::invalid_argument);
}
