#pragma once

#include "doctest.h"

#include "fccnn/error.hpp"
#include "fccnn/tensor.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

template <typename T = double>
fccnn::BasicComplexTensor<T> random_tensor(const fccnn::Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                                           double hi = 1.0, bool real = false) {
    std::uniform_real_distribution<double> u(lo, hi);
    fccnn::BasicComplexTensor<T> t(shape);
    for (auto& v : t.re()) v = static_cast<T>(u(rng));
    if (!real)
        for (auto& v : t.im()) v = static_cast<T>(u(rng));
    return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fccnn-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

template <typename Fn>
fccnn::ErrorCode error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const fccnn::Error& e) {
        return e.code();
    }
    FAIL("expected an fccnn::Error");
    return fccnn::ErrorCode::internal;
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    double m = 0;
    for (std::size_t j = 0; j < a.numel(); ++j) {
        m = std::max(m, std::abs(static_cast<double>(a.re()[j]) - static_cast<double>(b.re()[j])));
        m = std::max(m, std::abs(static_cast<double>(a.im()[j]) - static_cast<double>(b.im()[j])));
    }
    return m;
}

} // namespace testing
