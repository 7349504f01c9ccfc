#include "fccnn/harness.hpp"

#include "rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace fccnn {

namespace {

using Clock = std::chrono::steady_clock;

// Flush-to-zero and denormals-are-zero while training. Once the loss
// saturates, gradients underflow and denormal arithmetic slows epochs several
// times over.
class DenormalGuard {
public:
    DenormalGuard() {
#if defined(__SSE__)
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);
#endif
    }
    ~DenormalGuard() {
#if defined(__SSE__)
        _mm_setcsr(saved_);
#endif
    }
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;

private:
    unsigned saved_ = 0;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int stage, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t state = seed ^ (0xA24BAED4963EE407ull * static_cast<std::uint64_t>(stage)) ^
                          (0x9FB21C651E98DF25ull * (epoch + 1));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(detail::splitmix64(state) % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

ComplexTensor gather(const ComplexTensor& t, std::span<const std::size_t> rows) { return gather_rows(t, rows); }

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

ComplexTensor slice_rows(const ComplexTensor& t, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    return gather_rows(t, rows);
}

Var objective(Tape<float>& tape, const Model& model, Var out, std::span<const int> labels, HingeState& state,
              GateScope scope) {
    switch (model.spec().head) {
    case Head::complex_hinge:
        return ops::hinge_loss(tape, out, labels, model.spec().num_classes, state, scope);
    case Head::real_crossentropy_on_magnitude:
        return ops::cross_entropy(tape, ops::magnitude(tape, out), labels);
    case Head::real_crossentropy:
        return ops::cross_entropy(tape, out, labels);
    }
    throw Error(ErrorCode::internal, "unknown head");
}

// Loss summed over the rows of one batch, so that epoch totals can be divided
// by the sample count.
double batch_loss_sum(const Model& model, const ComplexTensor& out, std::span<const int> labels) {
    const double n = static_cast<double>(labels.size());
    if (model.spec().head == Head::complex_hinge) {
        auto y = encode_one_hot<float>(labels, model.spec().num_classes);
        return hinge_loss_value(hinge_error(y, out)) * n;
    }
    Tape<float> tape;
    Var logits = tape.constant(out);
    if (model.spec().head == Head::real_crossentropy_on_magnitude) logits = ops::magnitude(tape, logits);
    Var loss = ops::cross_entropy(tape, logits, labels);
    return static_cast<double>(tape.value(loss).re()[0]) * n;
}

std::size_t count_correct(std::span<const int> predicted, std::span<const int> labels) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
    return correct;
}

void check_finite(double loss, int stage, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(loss)) {
        throw numeric_error("non-finite loss in stage " + std::to_string(stage) + ", epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch));
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string curves_svg(const std::vector<RunSeries>& runs) {
    constexpr double width = 720, height = 440, left = 70, right = 170, top = 30, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    std::size_t max_iter = 1;
    for (const auto& run : runs)
        for (const auto& m : run.metrics) max_iter = std::max(max_iter, m.iteration);
    auto px = [&](double it) { return left + plot_w * it / static_cast<double>(max_iter); };
    auto py = [&](double acc) { return top + plot_h * (1.0 - acc); };

    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double acc = i / 5.0;
        s << "<line x1=\"" << left - 4 << "\" y1=\"" << py(acc) << "\" x2=\"" << left + plot_w << "\" y2=\""
          << py(acc) << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << left - 8 << "\" y=\"" << py(acc) + 4 << "\" text-anchor=\"end\">" << acc
          << "</text>\n";
        const double it = static_cast<double>(max_iter) * i / 5.0;
        s << "<text x=\"" << px(it) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
          << static_cast<std::size_t>(std::lround(it)) << "</text>\n";
    }
    s << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">iteration</text>\n";
    s << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">test accuracy</text>\n";

    for (std::size_t r = 0; r < runs.size(); ++r) {
        const char* color = colors[r % std::size(colors)];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& m : runs[r].metrics) s << px(static_cast<double>(m.iteration)) << ',' << py(m.test_acc) << ' ';
        s << "\"/>\n";
        const double ly = top + 16 + 18 * static_cast<double>(r);
        s << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
          << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(runs[r].label)
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << text;
    if (!out) throw io_error("write failed: " + path.string());
}

} // namespace

void RunConfig::validate() const {
    if (epochs == 0) throw argument_error("epochs must be at least 1");
    if (batch_size == 0) throw argument_error("batch size must be at least 1");
    if (!(optimizer.lr >= 0.0) || !std::isfinite(optimizer.lr))
        throw argument_error("learning rate must be finite and non-negative");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) || !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0))
        throw argument_error("betas must lie in [0, 1)");
    if (!(optimizer.eps > 0.0)) throw argument_error("eps must be positive");
    if (!(optimizer.weight_decay >= 0.0)) throw argument_error("weight decay must be non-negative");
    if (dataset != "cifar10" && dataset != "cifar100" && dataset != "svhn-ctns")
        throw argument_error("unknown dataset '" + dataset + "' (expected cifar10, cifar100 or svhn-ctns)");
}

FeatureStore capture_features(Model& model, const LabeledImageSet& set, std::size_t batch_size, std::size_t epoch) {
    const DenormalGuard ftz;
    set.validate();
    const std::size_t n = set.size();
    FeatureStore store;
    store.labels = set.labels;
    store.checkpoint_id = model.fingerprint();
    store.epoch = epoch;
    std::size_t width = 0;
    std::vector<float> re, im;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        auto f = model.infer_features(slice_rows(set.images, begin, end));
        width = f.shape()[1];
        re.insert(re.end(), f.re().begin(), f.re().end());
        im.insert(im.end(), f.im().begin(), f.im().end());
    }
    store.features = ComplexTensor(Shape{n, width}, std::move(re), std::move(im));
    return store;
}

Stage1Result train_stage1(const RunConfig& config, const LabeledImageSet& train, const LabeledImageSet* test,
                          const ProgressFn& progress) {
    const DenormalGuard ftz;
    config.validate();
    train.validate();
    ModelOptions options = config.model_options;
    Model model(make_spec(config.model, train.num_classes, options), config.seed);
    const bool real = model.spec().arithmetic == Arithmetic::real;

    AdamW<float> optimizer(config.optimizer);
    HingeState state;
    std::vector<MetricsRecord> metrics;
    const auto start = Clock::now();
    const std::size_t n = train.size();
    auto params = model.parameters();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double thr = state.threshold();
        const auto order = epoch_order(n, config.seed, 1, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0, batch = 0; begin < n; begin += config.batch_size, ++batch) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            std::span<const std::size_t> rows(order.data() + begin, end - begin);
            auto x = gather(train.images, rows);
            if (real) std::fill(x.im().begin(), x.im().end(), 0.0f);
            const auto labels = gather_labels(train.labels, rows);

            Tape<float> tape;
            Var out = model.forward(tape, tape.constant(std::move(x)));
            Var loss = objective(tape, model, out, labels, state, config.gate_scope);
            const double value = tape.value(loss).re()[0];
            check_finite(value, 1, epoch, batch);
            loss_sum += value * static_cast<double>(labels.size());
            correct += count_correct(model.predict(tape.value(out)), labels);

            for (auto* p : params) p->zero_grad();
            tape.backward(loss);
            optimizer.step(params);
        }
        state.advance();

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.stage = 1;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
        rec.test_acc = test ? evaluate(model, *test, config.batch_size).accuracy : 0.0;
        rec.e_thr = thr;
        rec.iteration = optimizer.steps();
        rec.wall_s = seconds_since(start);
        metrics.push_back(rec);
        if (progress) progress(rec);
    }

    auto store = capture_features(model, train, config.batch_size, config.epochs - 1);
    return Stage1Result{std::move(model), std::move(store), std::move(metrics), std::move(optimizer)};
}

Stage2Result train_stage2(Model model, const FeatureStore& store, const RunConfig& config,
                          const LabeledImageSet* test, const ProgressFn& progress, std::size_t iteration_offset) {
    const DenormalGuard ftz;
    if (store.checkpoint_id != model.fingerprint())
        throw argument_error("feature store was captured from checkpoint " + store.checkpoint_id +
                             ", model is " + model.fingerprint());
    if (config.batch_size == 0) throw argument_error("batch size must be at least 1");
    const std::size_t n = store.labels.size();
    if (store.features.shape().rank() != 2 || store.features.shape()[0] != n)
        throw shape_error("feature store holds " + store.features.shape().to_string() + " for " +
                          std::to_string(n) + " labels");

    if (config.stage2_reinit) model.reinit_head(config.seed ^ 0x5851F42D4C957F2Dull);
    AdamW<float> optimizer(config.optimizer);
    HingeState state;
    auto params = model.head_parameters();
    std::vector<MetricsRecord> metrics;
    const auto start = Clock::now();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double thr = state.threshold();
        const auto order = epoch_order(n, config.seed, 2, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0, batch = 0; begin < n; begin += config.batch_size, ++batch) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            std::span<const std::size_t> rows(order.data() + begin, end - begin);
            const auto labels = gather_labels(store.labels, rows);

            Tape<float> tape;
            Var out = model.head(tape, tape.constant(gather(store.features, rows)));
            Var loss = objective(tape, model, out, labels, state, config.gate_scope);
            const double value = tape.value(loss).re()[0];
            check_finite(value, 2, epoch, batch);
            loss_sum += value * static_cast<double>(labels.size());
            correct += count_correct(model.predict(tape.value(out)), labels);

            for (auto* p : params) p->zero_grad();
            tape.backward(loss);
            optimizer.step(params);
        }
        state.advance();

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.stage = 2;
        rec.train_loss = n ? loss_sum / static_cast<double>(n) : 0.0;
        rec.train_acc = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
        rec.test_acc = test ? evaluate(model, *test, config.batch_size).accuracy : 0.0;
        rec.e_thr = thr;
        rec.iteration = iteration_offset + optimizer.steps();
        rec.wall_s = seconds_since(start);
        metrics.push_back(rec);
        if (progress) progress(rec);
    }
    return Stage2Result{std::move(model), std::move(metrics)};
}

EvalResult evaluate(Model& model, const LabeledImageSet& set, std::size_t batch_size) {
    const DenormalGuard ftz;
    set.validate();
    if (set.num_classes != model.spec().num_classes)
        throw argument_error("dataset has " + std::to_string(set.num_classes) + " classes, model has " +
                             std::to_string(model.spec().num_classes));
    if (batch_size == 0) throw argument_error("batch size must be at least 1");
    const bool real = model.spec().arithmetic == Arithmetic::real;
    const std::size_t n = set.size();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        auto x = slice_rows(set.images, begin, end);
        if (real) std::fill(x.im().begin(), x.im().end(), 0.0f);
        std::span<const int> labels(set.labels.data() + begin, end - begin);
        auto out = model.infer(x);
        loss_sum += batch_loss_sum(model, out, labels);
        correct += count_correct(model.predict(out), labels);
    }
    if (n == 0) return {};
    return EvalResult{static_cast<double>(correct) / static_cast<double>(n), loss_sum / static_cast<double>(n)};
}

EvalResult evaluate_head(Model& model, const ComplexTensor& features, std::span<const int> labels,
                         std::size_t batch_size) {
    const DenormalGuard ftz;
    if (batch_size == 0) throw argument_error("batch size must be at least 1");
    const std::size_t n = labels.size();
    if (features.shape().rank() != 2 || features.shape()[0] != n)
        throw shape_error("features " + features.shape().to_string() + " for " + std::to_string(n) + " labels");
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        auto out = model.infer_head(slice_rows(features, begin, end));
        std::span<const int> rows(labels.data() + begin, end - begin);
        loss_sum += batch_loss_sum(model, out, rows);
        correct += count_correct(model.predict(out), rows);
    }
    if (n == 0) return {};
    return EvalResult{static_cast<double>(correct) / static_cast<double>(n), loss_sum / static_cast<double>(n)};
}

std::string metrics_csv(const std::vector<MetricsRecord>& metrics) {
    std::string out(kMetricsHeader);
    out += '\n';
    for (const auto& m : metrics) {
        out += std::to_string(m.epoch) + ',' + std::to_string(m.stage) + ',' + format_double(m.train_loss) + ',' +
               format_double(m.train_acc) + ',' + format_double(m.test_acc) + ',' + format_double(m.e_thr) + ',' +
               format_double(m.wall_s) + '\n';
    }
    return out;
}

void report(const std::vector<RunSeries>& runs, const ModelSpec& spec, const CostReport& params,
            const CostReport& macs, const std::filesystem::path& out_dir) {
    std::size_t records = 0;
    for (const auto& run : runs) records += run.metrics.size();
    if (records == 0) throw argument_error("nothing to report: no metrics recorded");

    std::vector<MetricsRecord> all;
    for (const auto& run : runs) all.insert(all.end(), run.metrics.begin(), run.metrics.end());

    std::ostringstream summary;
    summary << format_cost_summary(spec, params, macs) << '\n';
    for (const auto& run : runs) {
        if (run.metrics.empty()) continue;
        const auto& last = run.metrics.back();
        summary << run.label << ": final test accuracy " << format_double(last.test_acc) << " after "
                << last.iteration << " iterations (train loss " << format_double(last.train_loss) << ")\n";
    }

    // Render everything before touching the filesystem.
    const std::string csv = metrics_csv(all);
    const std::string text = summary.str();
    const std::string svg = curves_svg(runs);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "metrics.csv", csv);
    write_file(out_dir / "summary.txt", text);
    write_file(out_dir / "curves.svg", svg);
}

std::filesystem::path resolve_data_dir(const std::filesystem::path& dir) {
    std::filesystem::path out = dir;
    if (out.empty()) {
        const char* env = std::getenv("FCCNN_DATA_DIR");
        if (!env || !*env) throw argument_error("no data directory given and FCCNN_DATA_DIR is unset");
        out = env;
    }
    if (!std::filesystem::is_directory(out)) throw io_error("data directory not found: " + out.string());
    return out;
}

LabeledImageSet load_split(const std::string& dataset, const std::filesystem::path& dir, Split split,
                           Encoding encoding, std::size_t limit, std::uint64_t seed) {
    const auto root = resolve_data_dir(dir);
    const std::uint64_t salt = split == Split::train ? 0x11 : 0x22;
    LabeledImageSet set;
    if (dataset == "svhn-ctns") {
        set = load_ctns_dataset(root, split, 10);
        if (limit) set = set.subset(seeded_subset(set.size(), std::min(limit, set.size()), seed ^ salt));
    } else if (dataset == "cifar10" || dataset == "cifar100") {
        const auto variant = dataset == "cifar10" ? CifarVariant::cifar10 : CifarVariant::cifar100;
        if (limit) {
            const std::size_t total = cifar_record_count(root, variant, split);
            set = load_cifar(root, variant, split, seeded_subset(total, std::min(limit, total), seed ^ salt));
        } else {
            set = load_cifar(root, variant, split);
        }
    } else {
        throw argument_error("unknown dataset '" + dataset + "' (expected cifar10, cifar100 or svhn-ctns)");
    }
    return encode(set, encoding);
}

RunData load_run_data(const RunConfig& config) {
    config.validate();
    RunData data;
    data.train = load_split(config.dataset, config.data_dir, Split::train, config.encoding, config.train_limit,
                            config.seed);
    data.test = load_split(config.dataset, config.data_dir, Split::test, config.encoding, config.test_limit,
                           config.seed);
    return data;
}

RunOutcome run_training(const RunConfig& config, const ProgressFn& progress) {
    return run_training(config, load_run_data(config), progress);
}

RunOutcome run_training(const RunConfig& config, const RunData& data, const ProgressFn& progress) {
    config.validate();
    if (data.train.num_classes != data.test.num_classes)
        throw argument_error("train and test splits disagree on the class count");

    auto s1 = train_stage1(config, data.train, &data.test, progress);
    const auto out = config.out_dir;
    std::map<std::string, std::string> provenance{
        {"dataset", config.dataset},
        {"encoding", std::string(to_string(config.encoding))},
        {"stage", "1"},
        {"epochs", std::to_string(config.epochs)},
        {"train_samples", std::to_string(data.train.size())},
    };
    save_checkpoint(s1.model, out / "stage1", provenance);
    s1.optimizer.save(out / "stage1" / "optimizer");

    RunOutcome outcome;
    outcome.stage1_test_acc = s1.metrics.back().test_acc;
    std::vector<RunSeries> runs{{std::string(to_string(config.model)) + " stage 1", s1.metrics}};
    outcome.metrics = s1.metrics;

    // the baselines are trained end to end only
    const bool two_stage = config.stage2 && config.model == ModelKind::fc_cnn;
    if (two_stage) {
        const std::size_t offset = s1.metrics.back().iteration;
        auto s2 = train_stage2(s1.model, s1.store, config, &data.test, progress, offset);
        provenance["stage"] = "2";
        provenance["features_from"] = s1.store.checkpoint_id;
        provenance["stage2_reinit"] = config.stage2_reinit ? "true" : "false";
        save_checkpoint(s2.model, out / "final", provenance);
        outcome.final_test_acc = s2.metrics.back().test_acc;
        outcome.metrics.insert(outcome.metrics.end(), s2.metrics.begin(), s2.metrics.end());
        runs.push_back({std::string(to_string(config.model)) + " stage 2", std::move(s2.metrics)});
    } else {
        save_checkpoint(s1.model, out / "final", provenance);
        outcome.final_test_acc = outcome.stage1_test_acc;
    }
    outcome.final_checkpoint = out / "final";

    const auto& spec = s1.model.spec();
    report(runs, spec, count_params(spec), count_macs(spec), out);
    return outcome;
}

} // namespace fccnn
