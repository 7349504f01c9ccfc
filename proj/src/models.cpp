#include "rng.hpp"
#include "fccnn/models.hpp"

#include "fccnn/ctns.hpp"
#include "fccnn/objective.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fccnn {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::fc_cnn: return "fc-cnn";
    case ModelKind::real_cnn: return "real-cnn";
    case ModelKind::dcn: return "dcn";
    }
    return "?";
}

std::string_view to_string(Activation activation) {
    switch (activation) {
    case Activation::cardioid: return "cardioid";
    case Activation::crelu: return "crelu";
    case Activation::relu: return "relu";
    }
    return "?";
}

std::string_view to_string(Head head) {
    switch (head) {
    case Head::complex_hinge: return "complex-hinge";
    case Head::real_crossentropy_on_magnitude: return "real-crossentropy-on-magnitude";
    case Head::real_crossentropy: return "real-crossentropy";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "fc-cnn") return ModelKind::fc_cnn;
    if (text == "real-cnn") return ModelKind::real_cnn;
    if (text == "dcn") return ModelKind::dcn;
    throw argument_error("unknown model kind '" + std::string(text) + "'");
}

Activation parse_activation(std::string_view text) {
    if (text == "cardioid") return Activation::cardioid;
    if (text == "crelu") return Activation::crelu;
    if (text == "relu") return Activation::relu;
    throw argument_error("unknown activation '" + std::string(text) + "'");
}

std::vector<Shape> ModelSpec::shape_chain() const {
    if (input_shape.rank() != 3) throw shape_error("model input must be [C,H,W], got " + input_shape.to_string());
    std::vector<Shape> chain{input_shape};
    Shape cur = input_shape;
    for (const auto& layer : layers) {
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, Conv2dSpec>) {
                    if (cur.rank() != 3) throw shape_error(layer.name + ": convolution after flatten");
                    const Shape out = d.output_shape(Shape{1, cur[0], cur[1], cur[2]});
                    cur = Shape{out[1], out[2], out[3]};
                } else if constexpr (std::is_same_v<D, FlattenLayer>) {
                    cur = Shape{cur.numel()};
                } else if constexpr (std::is_same_v<D, LinearSpec>) {
                    if (cur.rank() != 1 || cur[0] != d.in_features) {
                        throw shape_error(layer.name + ": linear expects [" + std::to_string(d.in_features) +
                                          "], got " + cur.to_string());
                    }
                    cur = Shape{d.out_features};
                }
            },
            layer.desc);
        chain.push_back(cur);
    }
    return chain;
}

ModelSpec make_spec(ModelKind kind, std::size_t num_classes, const ModelOptions& options) {
    if (num_classes < 2) throw argument_error("a classifier needs at least 2 classes");
    ModelSpec spec;
    spec.kind = kind;
    spec.num_classes = num_classes;
    spec.depthwise_activation = options.depthwise_activation;
    switch (kind) {
    case ModelKind::fc_cnn:
        spec.arithmetic = Arithmetic::complex;
        spec.activation = Activation::cardioid;
        spec.head = Head::complex_hinge;
        break;
    case ModelKind::real_cnn:
        spec.arithmetic = Arithmetic::real;
        spec.activation = Activation::relu;
        spec.head = Head::real_crossentropy;
        break;
    case ModelKind::dcn:
        spec.arithmetic = Arithmetic::complex;
        spec.activation = options.dcn_activation;
        if (spec.activation == Activation::relu) throw argument_error("dcn needs a complex activation");
        spec.head = Head::real_crossentropy_on_magnitude;
        break;
    }
    auto conv = [](std::size_t in, std::size_t out, std::size_t k, std::size_t groups, std::size_t pad) {
        Conv2dSpec c;
        c.in_channels = in;
        c.out_channels = out;
        c.kernel_h = c.kernel_w = k;
        c.stride = 2;
        c.groups = groups;
        c.padding = pad;
        return c;
    };
    const ActivationLayer act{spec.activation};
    spec.layers = {
        {"conv1", conv(3, 32, 3, 1, 1)},     {"act1", act},
        {"conv2", conv(32, 64, 3, 2, 1)},    {"act2", act},
        {"conv3", conv(64, 64, 3, 4, 1)},    {"act3", act},
        {"depthwise", conv(64, 128, 4, 64, 0)},
    };
    if (spec.depthwise_activation) spec.layers.push_back({"act4", act});
    spec.layers.push_back({"flatten", FlattenLayer{}});
    spec.layers.push_back({"linear", LinearSpec{128, num_classes, true}});
    spec.shape_chain();
    return spec;
}

namespace {

using detail::splitmix64;
using detail::unit_uniform;



} // namespace

template <typename T>
BasicModel<T>::BasicModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.shape_chain();
    std::size_t count = 0;
    for (const auto& layer : spec_.layers) {
        if (std::holds_alternative<Conv2dSpec>(layer.desc)) count += std::get<Conv2dSpec>(layer.desc).bias ? 2 : 1;
        if (std::holds_alternative<LinearSpec>(layer.desc)) count += std::get<LinearSpec>(layer.desc).bias ? 2 : 1;
    }
    params_.reserve(count);

    std::uint64_t state = seed;
    auto add = [&](const std::string& name, Shape shape, std::size_t fan_in, bool decay, bool random) {
        Parameter<T> p(name, Tensor(std::move(shape)), decay);
        if (random) init_parameter(p, fan_in, state);
        index_[name] = params_.size();
        params_.push_back(std::move(p));
    };
    for (const auto& layer : spec_.layers) {
        if (const auto* c = std::get_if<Conv2dSpec>(&layer.desc)) {
            add(layer.name + ".weight", c->weight_shape(), (c->in_channels / c->groups) * c->kernel_h * c->kernel_w,
                true, true);
            if (c->bias) add(layer.name + ".bias", Shape{c->out_channels}, 0, false, false);
        } else if (const auto* l = std::get_if<LinearSpec>(&layer.desc)) {
            add(layer.name + ".weight", l->weight_shape(), l->in_features, true, true);
            if (l->bias) add(layer.name + ".bias", l->bias_shape(), 0, false, false);
        }
    }
}

template <typename T>
void BasicModel<T>::init_parameter(Parameter<T>& p, std::size_t fan_in, std::uint64_t& state) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : p.value.re()) v = static_cast<T>((2.0 * unit_uniform(state) - 1.0) * bound);
    if (spec_.arithmetic == Arithmetic::complex) {
        for (auto& v : p.value.im()) v = static_cast<T>((2.0 * unit_uniform(state) - 1.0) * bound);
    }
}

template <typename T>
std::size_t BasicModel<T>::flatten_index() const {
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        if (std::holds_alternative<FlattenLayer>(spec_.layers[i].desc)) return i;
    }
    throw Error(ErrorCode::internal, "model spec has no flatten layer");
}

template <typename T>
Var BasicModel<T>::run_layers(Tape<T>& tape, Var x, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const auto& layer = spec_.layers[i];
        if (const auto* c = std::get_if<Conv2dSpec>(&layer.desc)) {
            Var w = tape.parameter(parameter(layer.name + ".weight"));
            std::optional<Var> b;
            if (c->bias) b = tape.parameter(parameter(layer.name + ".bias"));
            x = ops::conv2d(tape, x, w, *c, b, spec_.arithmetic);
        } else if (const auto* a = std::get_if<ActivationLayer>(&layer.desc)) {
            switch (a->kind) {
            case Activation::cardioid: x = ops::cardioid(tape, x); break;
            case Activation::crelu: x = ops::crelu(tape, x); break;
            case Activation::relu: x = ops::relu(tape, x); break;
            }
        } else if (std::holds_alternative<FlattenLayer>(layer.desc)) {
            x = ops::flatten(tape, x, 1);
        } else if (const auto* l = std::get_if<LinearSpec>(&layer.desc)) {
            Var w = tape.parameter(parameter(layer.name + ".weight"));
            std::optional<Var> b;
            if (l->bias) b = tape.parameter(parameter(layer.name + ".bias"));
            x = ops::linear(tape, x, w, *l, b, spec_.arithmetic);
        }
    }
    return x;
}

template <typename T>
Var BasicModel<T>::features(Tape<T>& tape, Var input) {
    const auto& s = tape.value(input).shape();
    if (s.rank() != 4 || Shape{s[1], s[2], s[3]} != spec_.input_shape) {
        throw shape_error("model expects [N," + spec_.input_shape.to_string().substr(1) + " input, got " +
                          s.to_string());
    }
    return run_layers(tape, input, 0, flatten_index() + 1);
}

template <typename T>
Var BasicModel<T>::head(Tape<T>& tape, Var feats) {
    return run_layers(tape, feats, flatten_index() + 1, spec_.layers.size());
}

template <typename T>
Var BasicModel<T>::forward(Tape<T>& tape, Var input) {
    return head(tape, features(tape, input));
}

template <typename T>
typename BasicModel<T>::Tensor BasicModel<T>::infer(const Tensor& input) {
    Tape<T> tape;
    return tape.value(forward(tape, tape.constant(input)));
}

template <typename T>
typename BasicModel<T>::Tensor BasicModel<T>::infer_features(const Tensor& input) {
    Tape<T> tape;
    return tape.value(features(tape, tape.constant(input)));
}

template <typename T>
typename BasicModel<T>::Tensor BasicModel<T>::infer_head(const Tensor& feats) {
    Tape<T> tape;
    return tape.value(head(tape, tape.constant(feats)));
}

template <typename T>
std::vector<int> BasicModel<T>::predict(const Tensor& outputs) const {
    if (spec_.head == Head::real_crossentropy_on_magnitude) return predict_class_by_magnitude(outputs);
    return predict_class(outputs);
}

template <typename T>
std::vector<Parameter<T>*> BasicModel<T>::parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

template <typename T>
std::vector<Parameter<T>*> BasicModel<T>::head_parameters() {
    std::vector<Parameter<T>*> out;
    const std::size_t fi = flatten_index();
    for (std::size_t i = fi + 1; i < spec_.layers.size(); ++i) {
        for (auto& p : params_) {
            if (p.name.rfind(spec_.layers[i].name + ".", 0) == 0) out.push_back(&p);
        }
    }
    return out;
}

template <typename T>
std::vector<Parameter<T>*> BasicModel<T>::body_parameters() {
    auto head_params = head_parameters();
    std::vector<Parameter<T>*> out;
    for (auto& p : params_) {
        if (std::find(head_params.begin(), head_params.end(), &p) == head_params.end()) out.push_back(&p);
    }
    return out;
}

template <typename T>
Parameter<T>& BasicModel<T>::parameter(std::string_view name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw argument_error("no parameter named '" + std::string(name) + "'");
    return params_[it->second];
}

template <typename T>
const Parameter<T>& BasicModel<T>::parameter(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw argument_error("no parameter named '" + std::string(name) + "'");
    return params_[it->second];
}

template <typename T>
void BasicModel<T>::reinit_head(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto* p : head_parameters()) {
        if (p->decay) {
            init_parameter(*p, p->value.shape()[1], state);
        } else {
            p->value.fill({T(0), T(0)});
        }
        p->zero_grad();
    }
}

template <typename T>
std::string BasicModel<T>::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& p : params_) {
        mix(p.name.data(), p.name.size());
        mix(p.value.re().data(), p.value.re().size_bytes());
        mix(p.value.im().data(), p.value.im().size_bytes());
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

template class BasicModel<float>;
template class BasicModel<double>;

Model build_fc_cnn(std::size_t num_classes, std::uint64_t seed, const ModelOptions& options) {
    return Model(make_spec(ModelKind::fc_cnn, num_classes, options), seed);
}

Model build_baseline(ModelKind kind, std::size_t num_classes, std::uint64_t seed, const ModelOptions& options) {
    if (kind == ModelKind::fc_cnn) throw argument_error("fc-cnn is not a baseline kind");
    return Model(make_spec(kind, num_classes, options), seed);
}

CostReport count_params(const ModelSpec& spec) {
    CostReport report;
    report.convention = std::string(kParamConvention);
    for (const auto& layer : spec.layers) {
        std::uint64_t n = 0;
        if (const auto* c = std::get_if<Conv2dSpec>(&layer.desc)) {
            n = c->weight_shape().numel() + (c->bias ? c->out_channels : 0);
        } else if (const auto* l = std::get_if<LinearSpec>(&layer.desc)) {
            n = l->weight_shape().numel() + (l->bias ? l->out_features : 0);
        } else {
            continue;
        }
        report.entries.push_back({layer.name, n});
        report.total += n;
    }
    return report;
}

CostReport count_macs(const ModelSpec& spec, const Shape& input_shape) {
    ModelSpec probe = spec;
    probe.input_shape = input_shape;
    const auto chain = probe.shape_chain();
    CostReport report;
    report.convention = std::string(kMacConvention);
    std::uint64_t activations = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& layer = spec.layers[i];
        const Shape& in = chain[i];
        const Shape& out = chain[i + 1];
        if (const auto* c = std::get_if<Conv2dSpec>(&layer.desc)) {
            const std::uint64_t per_output = (c->in_channels / c->groups) * c->kernel_h * c->kernel_w;
            std::uint64_t n = out.numel() * per_output + (c->bias ? out.numel() : 0);
            report.entries.push_back({layer.name, n});
            report.total += n;
        } else if (std::holds_alternative<ActivationLayer>(layer.desc)) {
            activations += in.numel();
        } else if (std::holds_alternative<FlattenLayer>(layer.desc)) {
            report.entries.push_back({layer.name, in.numel()});
            report.total += in.numel();
        } else if (const auto* l = std::get_if<LinearSpec>(&layer.desc)) {
            std::uint64_t n = l->in_features * l->out_features + (l->bias ? l->out_features : 0);
            report.entries.push_back({layer.name, n});
            report.total += n;
        }
    }
    report.entries.push_back({"activations", activations});
    report.total += activations;
    if (spec.head == Head::real_crossentropy_on_magnitude) {
        report.entries.push_back({"magnitude", spec.num_classes});
        report.total += spec.num_classes;
    }
    return report;
}

CostReport count_macs(const ModelSpec& spec) { return count_macs(spec, spec.input_shape); }

std::string format_cost_summary(const ModelSpec& spec, const CostReport& params, const CostReport& macs) {
    std::ostringstream os;
    os << "model: " << to_string(spec.kind) << "  classes: " << spec.num_classes
       << "  activation: " << to_string(spec.activation) << "  head: " << to_string(spec.head) << "\n\n";
    os << "Parameters (" << params.convention << ")\n";
    os << std::left << std::setw(16) << "layer" << std::right << std::setw(12) << "# param" << '\n';
    for (const auto& e : params.entries) os << std::left << std::setw(16) << e.layer << std::right << std::setw(12) << e.count << '\n';
    os << std::left << std::setw(16) << "total" << std::right << std::setw(12) << params.total << "\n\n";
    os << "Forward MACs (" << macs.convention << ")\n";
    os << std::left << std::setw(16) << "layer" << std::right << std::setw(12) << "MACs" << '\n';
    for (const auto& e : macs.entries) os << std::left << std::setw(16) << e.layer << std::right << std::setw(12) << e.count << '\n';
    os << std::left << std::setw(16) << "total" << std::right << std::setw(12) << macs.total;
    os << "  (" << std::fixed << std::setprecision(2) << static_cast<double>(macs.total) / 1000.0 << "K)\n";
    return os.str();
}

namespace {

nlohmann::json layer_to_json(const NamedLayer& layer) {
    nlohmann::json j;
    j["name"] = layer.name;
    std::visit(
        [&](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, Conv2dSpec>) {
                j["type"] = "conv2d";
                j["in_channels"] = d.in_channels;
                j["out_channels"] = d.out_channels;
                j["kernel"] = {d.kernel_h, d.kernel_w};
                j["stride"] = d.stride;
                j["groups"] = d.groups;
                j["padding"] = d.padding;
                j["bias"] = d.bias;
            } else if constexpr (std::is_same_v<D, ActivationLayer>) {
                j["type"] = "activation";
                j["kind"] = std::string(to_string(d.kind));
            } else if constexpr (std::is_same_v<D, FlattenLayer>) {
                j["type"] = "flatten";
            } else {
                j["type"] = "linear";
                j["in_features"] = d.in_features;
                j["out_features"] = d.out_features;
                j["bias"] = d.bias;
            }
        },
        layer.desc);
    return j;
}

} // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& dir,
                     const std::map<std::string, std::string>& provenance) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
    const auto& spec = model.spec();
    nlohmann::json manifest;
    manifest["format"] = "fccnn-checkpoint";
    manifest["version"] = 1;
    manifest["model"] = {
        {"kind", std::string(to_string(spec.kind))},
        {"num_classes", spec.num_classes},
        {"arithmetic", spec.arithmetic == Arithmetic::complex ? "complex" : "real"},
        {"activation", std::string(to_string(spec.activation))},
        {"head", std::string(to_string(spec.head))},
        {"depthwise_activation", spec.depthwise_activation},
        {"input_shape", spec.input_shape.dims()},
    };
    manifest["layers"] = nlohmann::json::array();
    for (const auto& layer : spec.layers) manifest["layers"].push_back(layer_to_json(layer));
    manifest["seed"] = model.seed();
    manifest["conventions"] = {{"params", std::string(kParamConvention)}, {"macs", std::string(kMacConvention)}};
    manifest["fingerprint"] = model.fingerprint();
    manifest["provenance"] = provenance;
    manifest["parameters"] = nlohmann::json::array();
    for (const auto& p : model.all_parameters()) {
        const std::string file = p.name + ".ctns";
        save_ctns(dir / file, p.value);
        manifest["parameters"].push_back({{"name", p.name}, {"file", file}, {"shape", p.value.shape().dims()}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw io_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Model load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw io_error("cannot open " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        in >> manifest;
        if (manifest.value("format", "") != "fccnn-checkpoint") throw format_error("not a checkpoint manifest");
        const auto& m = manifest.at("model");
        ModelOptions options;
        options.depthwise_activation = m.at("depthwise_activation").get<bool>();
        const ModelKind kind = parse_model_kind(m.at("kind").get<std::string>());
        if (kind == ModelKind::dcn) options.dcn_activation = parse_activation(m.at("activation").get<std::string>());
        ModelSpec spec = make_spec(kind, m.at("num_classes").get<std::size_t>(), options);
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& layer : spec.layers) layers.push_back(layer_to_json(layer));
        if (layers != manifest.at("layers")) throw format_error("checkpoint layer list does not match its model kind");

        Model model(std::move(spec), manifest.at("seed").get<std::uint64_t>());
        for (const auto& entry : manifest.at("parameters")) {
            auto& p = model.parameter(entry.at("name").get<std::string>());
            auto value = load_ctns<float>(dir / entry.at("file").get<std::string>());
            if (value.shape() != p.value.shape()) {
                throw format_error("parameter " + p.name + " has shape " + value.shape().to_string() + ", expected " +
                                   p.value.shape().to_string());
            }
            p.value = std::move(value);
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(dir.string() + ": malformed manifest: " + e.what());
    }
}

} // namespace fccnn
