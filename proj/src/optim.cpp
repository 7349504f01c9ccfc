#include "fccnn/optim.hpp"

#include "fccnn/ctns.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>

namespace fccnn {

template <typename T>
void adamw_update(std::span<T> x, std::span<const T> g, std::span<T> m, std::span<T> v, std::uint64_t step,
                  const AdamWConfig& config, bool decay) {
    const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
    const T c1 = static_cast<T>(1.0 - std::pow(config.beta1, static_cast<double>(step)));
    const T c2 = static_cast<T>(1.0 - std::pow(config.beta2, static_cast<double>(step)));
    const T lr = static_cast<T>(config.lr), eps = static_cast<T>(config.eps);
    const T wd = decay ? static_cast<T>(config.weight_decay) : T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T m_hat = m[i] / c1;
        const T v_hat = v[i] / c2;
        x[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * x[i]);
    }
}

template <typename T>
void AdamW<T>::step(std::span<Parameter<T>* const> params) {
    for (const auto* p : params) {
        if (!p->trainable) continue;
        if (p->grad.shape() != p->value.shape()) throw argument_error("parameter " + p->name + " has no gradient");
        for (auto plane : {p->grad.re(), p->grad.im()}) {
            for (T g : plane) {
                if (!std::isfinite(g)) throw numeric_error("non-finite gradient in parameter " + p->name);
            }
        }
    }
    ++step_;
    for (auto* p : params) {
        if (!p->trainable) continue;
        auto [it, fresh] = moments_.try_emplace(p->name);
        if (fresh || it->second.m.shape() != p->value.shape()) {
            it->second.m = BasicComplexTensor<T>(p->value.shape());
            it->second.v = BasicComplexTensor<T>(p->value.shape());
        }
        auto& mom = it->second;
        adamw_update<T>(p->value.re(), p->grad.re(), mom.m.re(), mom.v.re(), step_, config_, p->decay);
        adamw_update<T>(p->value.im(), p->grad.im(), mom.m.im(), mom.v.im(), step_, config_, p->decay);
    }
}

template <typename T>
void AdamW<T>::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["format"] = "fccnn-adamw";
    meta["version"] = 1;
    meta["step"] = step_;
    meta["lr"] = config_.lr;
    meta["beta1"] = config_.beta1;
    meta["beta2"] = config_.beta2;
    meta["eps"] = config_.eps;
    meta["weight_decay"] = config_.weight_decay;
    meta["parameters"] = nlohmann::json::array();
    for (const auto& [name, mom] : moments_) {
        save_ctns(dir / (name + ".m.ctns"), mom.m);
        save_ctns(dir / (name + ".v.ctns"), mom.v);
        meta["parameters"].push_back(name);
    }
    std::ofstream out(dir / "optimizer.json");
    if (!out) throw io_error("cannot write " + (dir / "optimizer.json").string());
    out << meta.dump(2) << '\n';
}

template <typename T>
AdamW<T> AdamW<T>::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "optimizer.json");
    if (!in) throw io_error("cannot open " + (dir / "optimizer.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("optimizer metadata: ") + e.what());
    }
    if (meta.value("format", "") != "fccnn-adamw") throw format_error("not an optimizer state directory");
    AdamWConfig config;
    config.lr = meta.at("lr");
    config.beta1 = meta.at("beta1");
    config.beta2 = meta.at("beta2");
    config.eps = meta.at("eps");
    config.weight_decay = meta.at("weight_decay");
    AdamW out(config);
    out.step_ = meta.at("step");
    for (const auto& name : meta.at("parameters")) {
        const std::string n = name;
        out.moments_[n] = Moments{load_ctns<T>(dir / (n + ".m.ctns")), load_ctns<T>(dir / (n + ".v.ctns"))};
    }
    return out;
}

template void adamw_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                  std::uint64_t, const AdamWConfig&, bool);
template void adamw_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                   std::uint64_t, const AdamWConfig&, bool);
template class AdamW<float>;
template class AdamW<double>;

} // namespace fccnn
