#include "fccnn/fccnn.h"

#include "fccnn/ctns.hpp"
#include "fccnn/harness.hpp"
#include "fccnn/verification.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct fccnn_model {
    fccnn::Model model;
};

struct fccnn_dataset {
    fccnn::LabeledImageSet set;
};

namespace {

thread_local std::string g_last_error;

fccnn_status fail(fccnn_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
fccnn_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return FCCNN_OK;
    } catch (const fccnn::Error& e) {
        return fail(static_cast<fccnn_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(FCCNN_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(FCCNN_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(FCCNN_ERR_INTERNAL, "unknown exception");
    }
}

void require(const void* p, const char* what) {
    if (!p) throw fccnn::argument_error(std::string(what) + " must not be NULL");
}

std::string text_or(const char* s, const char* fallback) { return s && *s ? s : fallback; }

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

fccnn::ModelOptions model_options(const char* dcn_activation) {
    fccnn::ModelOptions options;
    if (dcn_activation && *dcn_activation) options.dcn_activation = fccnn::parse_activation(dcn_activation);
    return options;
}

fccnn::ComplexTensor input_tensor(const fccnn::Model& model, const float* re, const float* im, std::size_t n) {
    require(re, "in_re");
    const auto& per = model.spec().input_shape;
    fccnn::ComplexTensor x(fccnn::Shape{n, per[0], per[1], per[2]});
    std::copy_n(re, x.numel(), x.re().begin());
    if (im) std::copy_n(im, x.numel(), x.im().begin());
    return x;
}

} // namespace

extern "C" {

const char* fccnn_version(void) { return "0.1.0"; }

const char* fccnn_status_name(fccnn_status status) {
    switch (status) {
    case FCCNN_OK: return "ok";
    case FCCNN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case FCCNN_ERR_SHAPE: return "shape";
    case FCCNN_ERR_IO: return "io";
    case FCCNN_ERR_FORMAT: return "format";
    case FCCNN_ERR_NUMERIC: return "numeric";
    case FCCNN_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* fccnn_last_error(void) { return g_last_error.c_str(); }

void fccnn_string_free(char* text) { std::free(text); }

fccnn_status fccnn_model_create(const char* kind, size_t num_classes, uint64_t seed, const char* dcn_activation,
                                fccnn_model** out) {
    return guarded([&] {
        require(kind, "kind");
        require(out, "out");
        *out = nullptr;
        auto spec = fccnn::make_spec(fccnn::parse_model_kind(kind), num_classes, model_options(dcn_activation));
        *out = new fccnn_model{fccnn::Model(std::move(spec), seed)};
    });
}

fccnn_status fccnn_model_load(const char* checkpoint_dir, fccnn_model** out) {
    return guarded([&] {
        require(checkpoint_dir, "checkpoint_dir");
        require(out, "out");
        *out = nullptr;
        *out = new fccnn_model{fccnn::load_checkpoint(checkpoint_dir)};
    });
}

fccnn_status fccnn_model_save(const fccnn_model* model, const char* checkpoint_dir) {
    return guarded([&] {
        require(model, "model");
        require(checkpoint_dir, "checkpoint_dir");
        fccnn::save_checkpoint(model->model, checkpoint_dir);
    });
}

void fccnn_model_free(fccnn_model* model) { delete model; }

fccnn_status fccnn_model_info_get(const fccnn_model* model, fccnn_model_info* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        const auto& spec = model->model.spec();
        out->kind = fccnn::to_string(spec.kind).data();
        out->num_classes = spec.num_classes;
        out->param_count = fccnn::count_params(spec).total;
        out->mac_count = fccnn::count_macs(spec).total;
    });
}

fccnn_status fccnn_model_fingerprint(const fccnn_model* model, char** out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = dup_string(model->model.fingerprint());
    });
}

fccnn_status fccnn_model_forward(fccnn_model* model, const float* in_re, const float* in_im, size_t n,
                                 float* out_re, float* out_im) {
    return guarded([&] {
        require(model, "model");
        require(out_re, "out_re");
        require(out_im, "out_im");
        auto y = model->model.infer(input_tensor(model->model, in_re, in_im, n));
        std::copy(y.re().begin(), y.re().end(), out_re);
        std::copy(y.im().begin(), y.im().end(), out_im);
    });
}

fccnn_status fccnn_model_predict(fccnn_model* model, const float* in_re, const float* in_im, size_t n,
                                 int* out_classes) {
    return guarded([&] {
        require(model, "model");
        require(out_classes, "out_classes");
        const auto y = model->model.infer(input_tensor(model->model, in_re, in_im, n));
        const auto classes = model->model.predict(y);
        std::copy(classes.begin(), classes.end(), out_classes);
    });
}

fccnn_status fccnn_count(const char* kind, size_t num_classes, uint64_t* params, uint64_t* macs) {
    return guarded([&] {
        require(kind, "kind");
        const auto spec = fccnn::make_spec(fccnn::parse_model_kind(kind), num_classes);
        if (params) *params = fccnn::count_params(spec).total;
        if (macs) *macs = fccnn::count_macs(spec).total;
    });
}

fccnn_status fccnn_cost_summary(const char* kind, size_t num_classes, char** out) {
    return guarded([&] {
        require(kind, "kind");
        require(out, "out");
        const auto spec = fccnn::make_spec(fccnn::parse_model_kind(kind), num_classes);
        *out = dup_string(fccnn::format_cost_summary(spec, fccnn::count_params(spec), fccnn::count_macs(spec)));
    });
}

fccnn_status fccnn_dataset_load(const char* dataset, const char* dir, const char* split, const char* encoding,
                                size_t limit, uint64_t seed, fccnn_dataset** out) {
    return guarded([&] {
        require(dataset, "dataset");
        require(out, "out");
        *out = nullptr;
        auto set = fccnn::load_split(dataset, dir ? dir : "", fccnn::parse_split(text_or(split, "test")),
                                     fccnn::parse_encoding(text_or(encoding, "rgb")), limit, seed);
        *out = new fccnn_dataset{std::move(set)};
    });
}

fccnn_status fccnn_dataset_load_ctns(const char* images_path, const char* labels_path, size_t num_classes,
                                     const char* encoding, fccnn_dataset** out) {
    return guarded([&] {
        require(images_path, "images_path");
        require(labels_path, "labels_path");
        require(out, "out");
        *out = nullptr;
        auto set = fccnn::load_ctns_dataset(images_path, labels_path, num_classes, fccnn::Split::test);
        *out = new fccnn_dataset{fccnn::encode(set, fccnn::parse_encoding(text_or(encoding, "rgb")))};
    });
}

size_t fccnn_dataset_size(const fccnn_dataset* dataset) { return dataset ? dataset->set.size() : 0; }

size_t fccnn_dataset_num_classes(const fccnn_dataset* dataset) { return dataset ? dataset->set.num_classes : 0; }

void fccnn_dataset_free(fccnn_dataset* dataset) { delete dataset; }

fccnn_status fccnn_evaluate(fccnn_model* model, const fccnn_dataset* dataset, size_t batch_size, double* accuracy,
                            double* loss) {
    return guarded([&] {
        require(model, "model");
        require(dataset, "dataset");
        const auto r = fccnn::evaluate(model->model, dataset->set, batch_size ? batch_size : 256);
        if (accuracy) *accuracy = r.accuracy;
        if (loss) *loss = r.loss;
    });
}

fccnn_status fccnn_encode_ctns(const char* in_path, const char* encoding, const char* out_path) {
    return guarded([&] {
        require(in_path, "in_path");
        require(encoding, "encoding");
        require(out_path, "out_path");
        const auto rgb = fccnn::load_ctns<float>(in_path);
        fccnn::save_ctns(out_path, fccnn::encode_images(rgb, fccnn::parse_encoding(encoding)));
    });
}

void fccnn_train_options_init(fccnn_train_options* options) {
    if (!options) return;
    const fccnn::RunConfig defaults;
    *options = fccnn_train_options{};
    options->model = "fc-cnn";
    options->dataset = "cifar10";
    options->data_dir = nullptr;
    options->encoding = "rgb";
    options->out_dir = "run";
    options->epochs = defaults.epochs;
    options->batch_size = defaults.batch_size;
    options->lr = defaults.optimizer.lr;
    options->beta1 = defaults.optimizer.beta1;
    options->beta2 = defaults.optimizer.beta2;
    options->eps = defaults.optimizer.eps;
    options->weight_decay = defaults.optimizer.weight_decay;
    options->seed = defaults.seed;
    options->stage2 = 1;
    options->stage2_reinit = 0;
    options->gate_scope = "correct-samples";
    options->dcn_activation = "crelu";
    options->train_limit = 0;
    options->test_limit = 0;
}

fccnn_status fccnn_train(const fccnn_train_options* options, fccnn_progress_fn progress, void* user,
                         fccnn_train_result* result) {
    return guarded([&] {
        require(options, "options");
        fccnn::RunConfig config;
        config.model = fccnn::parse_model_kind(text_or(options->model, "fc-cnn"));
        config.dataset = text_or(options->dataset, "cifar10");
        config.data_dir = options->data_dir ? options->data_dir : "";
        config.encoding = fccnn::parse_encoding(text_or(options->encoding, "rgb"));
        config.out_dir = text_or(options->out_dir, "run");
        config.epochs = options->epochs;
        config.batch_size = options->batch_size;
        config.optimizer = {options->lr, options->beta1, options->beta2, options->eps, options->weight_decay};
        config.seed = options->seed;
        config.stage2 = options->stage2 != 0;
        config.stage2_reinit = options->stage2_reinit != 0;
        config.gate_scope = fccnn::parse_gate_scope(text_or(options->gate_scope, "correct-samples"));
        config.model_options = model_options(options->dcn_activation);
        config.train_limit = options->train_limit;
        config.test_limit = options->test_limit;

        fccnn::ProgressFn fn;
        if (progress) {
            fn = [progress, user](const fccnn::MetricsRecord& m) {
                const fccnn_epoch_metrics c{m.epoch,  m.stage, m.train_loss, m.train_acc,
                                            m.test_acc, m.e_thr, m.wall_s,     m.iteration};
                progress(&c, user);
            };
        }
        const auto outcome = fccnn::run_training(config, fn);
        if (result) *result = fccnn_train_result{outcome.stage1_test_acc, outcome.final_test_acc};
    });
}

fccnn_status fccnn_gradcheck(size_t points, uint64_t seed, double* max_rel_error, int* passed, char** report) {
    return guarded([&] {
        const auto r = fccnn::run_gradient_suite(points ? points : 10, seed);
        if (max_rel_error) *max_rel_error = r.max_rel_error;
        if (passed) *passed = r.passed() ? 1 : 0;
        if (report) *report = dup_string(fccnn::format_gradient_suite(r));
    });
}

} // extern "C"
