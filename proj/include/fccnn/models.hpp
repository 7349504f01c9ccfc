#pragma once

#include "fccnn/autograd.hpp"
#include "fccnn/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fccnn {

enum class ModelKind { fc_cnn, real_cnn, dcn };
enum class Activation { cardioid, crelu, relu };
enum class Head { complex_hinge, real_crossentropy_on_magnitude, real_crossentropy };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Activation activation);
std::string_view to_string(Head head);
ModelKind parse_model_kind(std::string_view text);
Activation parse_activation(std::string_view text);

struct ActivationLayer {
    Activation kind = Activation::cardioid;
};
struct FlattenLayer {};

using LayerDesc = std::variant<Conv2dSpec, ActivationLayer, FlattenLayer, LinearSpec>;

struct NamedLayer {
    std::string name;
    LayerDesc desc;
};

/// Declarative layer list shared by FC-CNN and the baselines.
struct ModelSpec {
    ModelKind kind = ModelKind::fc_cnn;
    Arithmetic arithmetic = Arithmetic::complex;
    Activation activation = Activation::cardioid;
    Head head = Head::complex_hinge;
    std::size_t num_classes = 10;
    Shape input_shape{3, 32, 32};  // per sample, [C, H, W]
    bool depthwise_activation = false;
    std::vector<NamedLayer> layers;

    /// Per-sample shape after every layer, starting with input_shape; throws
    /// when adjacent layers do not chain.
    std::vector<Shape> shape_chain() const;
};

struct ModelOptions {
    Activation dcn_activation = Activation::crelu;
    bool depthwise_activation = false;
};

/// conv1 3->32 3x3/2 pad 1, conv2 32->64 groups 2, conv3 64->64 groups 4,
/// depthwise 64->128 4x4/2 groups 64, flatten, linear 128->K. Convolutions
/// carry no bias, the linear head does.
ModelSpec make_spec(ModelKind kind, std::size_t num_classes, const ModelOptions& options = {});

template <typename T>
class BasicModel {
public:
    using Tensor = BasicComplexTensor<T>;

    /// Initializes re and im independently from U(-b, b), b = 1/sqrt(fan_in);
    /// biases start at zero. Real models leave every imaginary plane at zero.
    BasicModel(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Input [N, C, H, W] to head output [N, K].
    Var forward(Tape<T>& tape, Var input);
    /// Input to the flattened depthwise output [N, 128].
    Var features(Tape<T>& tape, Var input);
    /// Flattened features to head output.
    Var head(Tape<T>& tape, Var features);

    /// Forward pass without keeping a graph beyond the call.
    Tensor infer(const Tensor& input);
    Tensor infer_features(const Tensor& input);
    Tensor infer_head(const Tensor& features);

    /// Class decision for head outputs: real components for the complex hinge
    /// head, magnitudes for the DCN head, real logits for the real model.
    std::vector<int> predict(const Tensor& outputs) const;

    std::vector<Parameter<T>*> parameters();
    std::vector<Parameter<T>*> head_parameters();
    std::vector<Parameter<T>*> body_parameters();
    Parameter<T>& parameter(std::string_view name);
    const Parameter<T>& parameter(std::string_view name) const;
    const std::vector<Parameter<T>>& all_parameters() const noexcept { return params_; }

    /// Fresh head weights drawn with `seed`, bias back to zero.
    void reinit_head(std::uint64_t seed);

    /// FNV-1a digest of every parameter name and value, as hex.
    std::string fingerprint() const;

private:
    void init_parameter(Parameter<T>& p, std::size_t fan_in, std::uint64_t& state);
    Var run_layers(Tape<T>& tape, Var x, std::size_t begin, std::size_t end);
    std::size_t flatten_index() const;

    ModelSpec spec_;
    std::uint64_t seed_ = 0;
    std::vector<Parameter<T>> params_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

using Model = BasicModel<float>;

Model build_fc_cnn(std::size_t num_classes, std::uint64_t seed = 0, const ModelOptions& options = {});
Model build_baseline(ModelKind kind, std::size_t num_classes, std::uint64_t seed = 0,
                     const ModelOptions& options = {});

struct CostEntry {
    std::string layer;
    std::uint64_t count = 0;
};

struct CostReport {
    std::string convention;
    std::vector<CostEntry> entries;
    std::uint64_t total = 0;
};

inline constexpr std::string_view kParamConvention =
    "params-v1: one complex weight counts as one parameter; convolutions bias-free; linear head biased";
inline constexpr std::string_view kMacConvention =
    "macs-v1: one complex multiply-accumulate = 1 MAC; one op per activation element, per flattened element, "
    "per bias add and per magnitude projection";

CostReport count_params(const ModelSpec& spec);
/// `input_shape` is the per-sample [C, H, W] extent.
CostReport count_macs(const ModelSpec& spec, const Shape& input_shape);
CostReport count_macs(const ModelSpec& spec);
/// Per-layer parameter and MAC tables plus the counting conventions.
std::string format_cost_summary(const ModelSpec& spec, const CostReport& params, const CostReport& macs);

/// Directory with manifest.json (layer list, seed, conventions, provenance) and
/// one CTNS file per parameter.
void save_checkpoint(const Model& model, const std::filesystem::path& dir,
                     const std::map<std::string, std::string>& provenance = {});
Model load_checkpoint(const std::filesystem::path& dir);

} // namespace fccnn
