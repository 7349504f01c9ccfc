#pragma once

#include "fccnn/autograd.hpp"

#include <cstdint>
#include <filesystem>
#include <map>

namespace fccnn {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.99;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

/// AdamW over complex parameters treated as pairs of real coordinates: the
/// real and imaginary planes each get their own first and second moments.
template <typename T>
class AdamW {
public:
    struct Moments {
        BasicComplexTensor<T> m;  // first moment, re/im planes per coordinate plane
        BasicComplexTensor<T> v;  // second moment
    };

    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    /// One update of every trainable parameter from its accumulated gradient.
    void step(std::span<Parameter<T>* const> params);

    std::uint64_t steps() const noexcept { return step_; }
    const AdamWConfig& config() const noexcept { return config_; }
    const std::map<std::string, Moments>& moments() const noexcept { return moments_; }

    /// Writes <dir>/optimizer.json plus one m/v CTNS pair per parameter.
    void save(const std::filesystem::path& dir) const;
    static AdamW load(const std::filesystem::path& dir);

private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::map<std::string, Moments> moments_;
};

/// The per-coordinate recurrence shared by both planes (exposed for tests).
template <typename T>
void adamw_update(std::span<T> x, std::span<const T> g, std::span<T> m, std::span<T> v, std::uint64_t step,
                  const AdamWConfig& config, bool decay);

} // namespace fccnn
