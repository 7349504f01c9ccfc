#include "helpers.hpp"

#include "fccnn/ctns.hpp"

#include <numbers>
#include <sstream>

using namespace fccnn;
using testing::error_code_of;

using C = std::complex<double>;

namespace {

ComplexTensorF64 one(C z) {
    ComplexTensorF64 t(Shape{1});
    t.set(0, z);
    return t;
}

} // namespace

TEST_CASE("shape basics") {
    Shape s{2, 3, 4};
    CHECK(s.numel() == 24);
    CHECK(s.strides() == std::vector<std::size_t>{12, 4, 1});
    const std::size_t idx[] = {1, 2, 3};
    CHECK(s.offset(idx) == 23);
    CHECK(Shape{}.numel() == 1);
    CHECK(Shape{0, 5}.numel() == 0);
    CHECK(s.to_string() == "[2,3,4]");
}

TEST_CASE("constructor validates plane sizes") {
    CHECK(error_code_of([] { ComplexTensor(Shape{2, 2}, std::vector<float>(4), std::vector<float>(3)); }) ==
          ErrorCode::shape);
}

TEST_CASE("binary examples") {
    CHECK(mul(one({1, 1}), one({1, -1})).at(0) == C(2, 0));
    CHECK(add(one({1, 2}), one({0, 0})).at(0) == C(1, 2));
    CHECK(mul(one({0, 1}), one({0, 1})).at(0) == C(-1, 0));
}

TEST_CASE("binary shape mismatch names both shapes") {
    ComplexTensorF64 a(Shape{2, 3}), b(Shape{3, 2});
    try {
        add(a, b);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::shape);
        CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
        CHECK(std::string(e.what()).find("[3,2]") != std::string::npos);
    }
}

TEST_CASE("unary examples") {
    CHECK(conj(one({3, 4})).at(0) == C(3, -4));
    CHECK(abs(one({3, 4})).at(0) == C(5, 0));
    CHECK(arg(one({0, 1})).at(0).real() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(arg(one({0, 0})).at(0) == C(0, 0));
    CHECK(arg(one({-2, 0})).at(0).real() == std::numbers::pi);
    CHECK(arg(one({-2, -0.0})).at(0).real() == std::numbers::pi);
    CHECK(scale(one({1, -2}), 3.0).at(0) == C(3, -6));
}

TEST_CASE("arg lies in (-pi, pi]") {
    std::mt19937_64 rng(3);
    auto t = testing::random_tensor(Shape{500}, rng);
    auto a = arg(t);
    for (double v : a.re()) {
        CHECK(v > -std::numbers::pi);
        CHECK(v <= std::numbers::pi);
    }
}

TEST_CASE("reshape and flatten") {
    ComplexTensorF64 t(Shape{128, 1, 1});
    CHECK(flatten(t).shape() == Shape{128});
    std::mt19937_64 rng(1);
    auto a = testing::random_tensor(Shape{2, 3}, rng);
    auto b = reshape(reshape(a, Shape{6}), Shape{2, 3});
    CHECK(b == a);
    CHECK(error_code_of([] { reshape(ComplexTensorF64(Shape{4}), Shape{2, 3}); }) == ErrorCode::shape);
    CHECK(flatten(ComplexTensorF64(Shape{5, 64, 2, 1}), 1).shape() == Shape{5, 128});
}

TEST_CASE("conj involution and abs symmetry are exact") {
    std::mt19937_64 rng(2);
    auto a = testing::random_tensor(Shape{7, 5}, rng);
    CHECK(conj(conj(a)) == a);
    CHECK(abs(a) == abs(conj(a)));
}

TEST_CASE("mul commutes and distributes") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testing::random_tensor(Shape{16}, rng);
        auto b = testing::random_tensor(Shape{16}, rng);
        auto c = testing::random_tensor(Shape{16}, rng);
        CHECK(testing::max_abs_diff(mul(a, b), mul(b, a)) <= 1e-12);
        CHECK(testing::max_abs_diff(mul(a, add(b, c)), add(mul(a, b), mul(a, c))) <= 1e-12);
    }
}

TEST_CASE("real embedding closure") {
    std::mt19937_64 rng(5);
    auto a = testing::random_tensor(Shape{32}, rng, -1, 1, true);
    auto b = testing::random_tensor(Shape{32}, rng, -1, 1, true);
    for (auto op : {BinaryOp::add, BinaryOp::sub, BinaryOp::mul}) {
        auto r = elementwise_binary(op, a, b);
        CHECK(r.is_real());
        for (std::size_t j = 0; j < 32; ++j) {
            const double x = a.re()[j], y = b.re()[j];
            const double expect = op == BinaryOp::add ? x + y : op == BinaryOp::sub ? x - y : x * y;
            CHECK(r.re()[j] == expect);
        }
    }
    CHECK(conj(a) == a);
    auto m = abs(a);
    for (std::size_t j = 0; j < 32; ++j) CHECK(m.re()[j] == std::abs(a.re()[j]));
    auto ph = arg(a);
    for (std::size_t j = 0; j < 32; ++j) CHECK(ph.re()[j] == (a.re()[j] < 0 ? std::numbers::pi : 0.0));
}

TEST_CASE("gather_rows picks leading-axis slices") {
    std::mt19937_64 rng(6);
    auto a = testing::random_tensor(Shape{4, 3}, rng);
    const std::size_t rows[] = {2, 0};
    auto g = gather_rows(a, rows);
    CHECK(g.shape() == Shape{2, 3});
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(g.at(j) == a.at(6 + j));
        CHECK(g.at(3 + j) == a.at(j));
    }
}

TEST_CASE("ctns round trip in both dtypes") {
    std::mt19937_64 rng(7);
    auto d = testing::random_tensor(Shape{2, 3, 4}, rng);
    std::stringstream s64;
    write_ctns(s64, d);
    CHECK(read_ctns<double>(s64) == d);

    auto f = d.cast<float>();
    std::stringstream s32;
    write_ctns(s32, f);
    const std::string bytes = s32.str();
    // magic, version, dtype, rank, 3 extents, two planes of 24 floats
    CHECK(bytes.size() == 4 + 3 + 3 * 4 + 2 * 24 * 4);
    CHECK(bytes.substr(0, 4) == "CTNS");
    CHECK(static_cast<int>(bytes[4]) == 1);
    CHECK(static_cast<int>(bytes[5]) == 0);
    CHECK(static_cast<int>(bytes[6]) == 3);
    CHECK(static_cast<unsigned char>(bytes[7]) == 2);
    CHECK(read_ctns<float>(s32) == f);
}

TEST_CASE("ctns byte layout is little endian, re plane first") {
    ComplexTensor t(Shape{1}, {1.0f}, {-2.0f});
    std::stringstream s;
    write_ctns(s, t);
    const std::string b = s.str();
    REQUIRE(b.size() == 4 + 3 + 4 + 8);
    // 1.0f = 0x3F800000, -2.0f = 0xC0000000
    const unsigned char expect[] = {0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0};
    for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(b[11 + i]) == expect[i]);
}

TEST_CASE("ctns rejects bad headers and truncation") {
    std::stringstream bad_magic("CTNX\x01\x00\x01\x01\x00\x00\x00");
    CHECK(error_code_of([&] { read_ctns<float>(bad_magic); }) == ErrorCode::format);

    ComplexTensor t(Shape{4});
    std::stringstream s;
    write_ctns(s, t);
    std::string b = s.str();
    std::string wrong_version = b;
    wrong_version[4] = 2;
    std::stringstream sv(wrong_version);
    CHECK(error_code_of([&] { read_ctns<float>(sv); }) == ErrorCode::format);
    std::string wrong_dtype = b;
    wrong_dtype[5] = 9;
    std::stringstream sd(wrong_dtype);
    CHECK(error_code_of([&] { read_ctns<float>(sd); }) == ErrorCode::format);
    std::stringstream st(b.substr(0, b.size() - 3));
    CHECK(error_code_of([&] { read_ctns<float>(st); }) == ErrorCode::format);
}

TEST_CASE("ctns file io reports the path") {
    testing::TempDir dir("ctns");
    ComplexTensorF64 t(Shape{3});
    t.set(1, {0.5, -0.25});
    save_ctns(dir / "t.ctns", t);
    CHECK(load_ctns<double>(dir / "t.ctns") == t);
    CHECK(load_ctns<float>(dir / "t.ctns") == t.cast<float>());
    try {
        load_ctns<float>(dir / "missing.ctns");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
        CHECK(std::string(e.what()).find("missing.ctns") != std::string::npos);
    }
}
