#pragma once

#include "fccnn/data.hpp"
#include "fccnn/models.hpp"
#include "fccnn/objective.hpp"
#include "fccnn/optim.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fccnn {

struct RunConfig {
    ModelKind model = ModelKind::fc_cnn;
    std::string dataset = "cifar10";  // cifar10 | cifar100 | svhn-ctns
    std::filesystem::path data_dir;   // empty: FCCNN_DATA_DIR
    Encoding encoding = Encoding::rgb;
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    AdamWConfig optimizer;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "run";
    bool stage2 = true;
    bool stage2_reinit = false;
    GateScope gate_scope = GateScope::correct_samples;
    ModelOptions model_options;
    std::size_t train_limit = 0;  // 0 keeps the whole split, otherwise a seeded subset
    std::size_t test_limit = 0;

    void validate() const;
};

struct MetricsRecord {
    std::size_t epoch = 0;  // 0-based; the hinge threshold used during the epoch is error_threshold(epoch)
    int stage = 1;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double e_thr = 1.0;
    double wall_s = 0.0;
    std::size_t iteration = 0;  // optimizer steps completed at the end of the epoch, across stages
};

/// Flattened depthwise outputs of the whole training set, taken with the
/// weights at the end of the last stage-1 epoch.
struct FeatureStore {
    ComplexTensor features;  // [N, 128]
    std::vector<int> labels;
    std::string checkpoint_id;
    std::size_t epoch = 0;
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

struct Stage1Result {
    Model model;
    FeatureStore store;
    std::vector<MetricsRecord> metrics;
    AdamW<float> optimizer;
};

struct Stage2Result {
    Model model;
    std::vector<MetricsRecord> metrics;
};

using ProgressFn = std::function<void(const MetricsRecord&)>;

/// End-to-end training with the model's own objective. `test` may be null,
/// in which case test_acc is reported as 0.
Stage1Result train_stage1(const RunConfig& config, const LabeledImageSet& train, const LabeledImageSet* test,
                          const ProgressFn& progress = {});

/// Retrains only the linear head on stored features for config.epochs epochs
/// with a fresh threshold schedule; convolution weights stay bitwise fixed.
Stage2Result train_stage2(Model model, const FeatureStore& store, const RunConfig& config,
                          const LabeledImageSet* test, const ProgressFn& progress = {},
                          std::size_t iteration_offset = 0);

FeatureStore capture_features(Model& model, const LabeledImageSet& set, std::size_t batch_size, std::size_t epoch);

/// Accuracy with the model's class rule; loss is the ungated hinge loss for
/// FC-CNN and mean cross-entropy for the baselines.
EvalResult evaluate(Model& model, const LabeledImageSet& set, std::size_t batch_size = 256);
EvalResult evaluate_head(Model& model, const ComplexTensor& features, std::span<const int> labels,
                         std::size_t batch_size = 256);

struct RunSeries {
    std::string label;
    std::vector<MetricsRecord> metrics;
};

inline constexpr std::string_view kMetricsHeader = "epoch,stage,train_loss,train_acc,test_acc,e_thr,wall_s";

std::string metrics_csv(const std::vector<MetricsRecord>& metrics);

/// metrics.csv, summary.txt and curves.svg under out_dir.
void report(const std::vector<RunSeries>& runs, const ModelSpec& spec, const CostReport& params,
            const CostReport& macs, const std::filesystem::path& out_dir);

struct RunData {
    LabeledImageSet train;
    LabeledImageSet test;
};

/// Empty `dir` falls back to FCCNN_DATA_DIR.
std::filesystem::path resolve_data_dir(const std::filesystem::path& dir);

/// One split of cifar10, cifar100 or svhn-ctns, encoded. A nonzero `limit`
/// keeps a seeded subset of that many records.
LabeledImageSet load_split(const std::string& dataset, const std::filesystem::path& dir, Split split,
                           Encoding encoding, std::size_t limit = 0, std::uint64_t seed = 0);

RunData load_run_data(const RunConfig& config);

struct RunOutcome {
    std::vector<MetricsRecord> metrics;
    double stage1_test_acc = 0.0;
    double final_test_acc = 0.0;
    std::filesystem::path final_checkpoint;
};

/// Loads data, runs both stages, writes checkpoints (stage1/, final/) and the
/// report into config.out_dir.
RunOutcome run_training(const RunConfig& config, const ProgressFn& progress = {});
RunOutcome run_training(const RunConfig& config, const RunData& data, const ProgressFn& progress = {});

} // namespace fccnn
