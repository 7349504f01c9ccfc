#ifndef FCCNN_H
#define FCCNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FCCNN_BUILDING)
#    define FCCNN_API __declspec(dllexport)
#  else
#    define FCCNN_API __declspec(dllimport)
#  endif
#else
#  define FCCNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fccnn_status {
    FCCNN_OK = 0,
    FCCNN_ERR_INVALID_ARGUMENT = 1,
    FCCNN_ERR_SHAPE = 2,
    FCCNN_ERR_IO = 3,
    FCCNN_ERR_FORMAT = 4,
    FCCNN_ERR_NUMERIC = 5,
    FCCNN_ERR_INTERNAL = 6
} fccnn_status;

typedef struct fccnn_model fccnn_model;
typedef struct fccnn_dataset fccnn_dataset;

FCCNN_API const char* fccnn_version(void);
/* "ok", "invalid_argument", "shape", ... */
FCCNN_API const char* fccnn_status_name(fccnn_status status);
/* Message of the last failed call on this thread; "" when none. */
FCCNN_API const char* fccnn_last_error(void);
/* Frees strings returned through char** out-parameters. */
FCCNN_API void fccnn_string_free(char* text);

/* kind: "fc-cnn", "real-cnn" or "dcn". dcn_activation may be NULL (crelu). */
FCCNN_API fccnn_status fccnn_model_create(const char* kind, size_t num_classes, uint64_t seed,
                                          const char* dcn_activation, fccnn_model** out);
FCCNN_API fccnn_status fccnn_model_load(const char* checkpoint_dir, fccnn_model** out);
FCCNN_API fccnn_status fccnn_model_save(const fccnn_model* model, const char* checkpoint_dir);
FCCNN_API void fccnn_model_free(fccnn_model* model);

typedef struct fccnn_model_info {
    const char* kind; /* static string */
    size_t num_classes;
    uint64_t param_count;
    uint64_t mac_count;
} fccnn_model_info;

FCCNN_API fccnn_status fccnn_model_info_get(const fccnn_model* model, fccnn_model_info* out);
FCCNN_API fccnn_status fccnn_model_fingerprint(const fccnn_model* model, char** out);

/* Input planes hold n*3*32*32 floats in NCHW order; im may be NULL for a
   real input. Outputs hold n*K floats each. */
FCCNN_API fccnn_status fccnn_model_forward(fccnn_model* model, const float* in_re, const float* in_im, size_t n,
                                           float* out_re, float* out_im);
/* Writes n class ids using the model's decision rule. */
FCCNN_API fccnn_status fccnn_model_predict(fccnn_model* model, const float* in_re, const float* in_im, size_t n,
                                           int* out_classes);

FCCNN_API fccnn_status fccnn_count(const char* kind, size_t num_classes, uint64_t* params, uint64_t* macs);
/* Parameter and MAC tables with per-layer rows and the counting conventions. */
FCCNN_API fccnn_status fccnn_cost_summary(const char* kind, size_t num_classes, char** out);

/* dataset: "cifar10", "cifar100" or "svhn-ctns"; dir NULL or "" falls back to
   FCCNN_DATA_DIR. limit 0 loads the whole split, otherwise a seeded subset. */
FCCNN_API fccnn_status fccnn_dataset_load(const char* dataset, const char* dir, const char* split,
                                          const char* encoding, size_t limit, uint64_t seed, fccnn_dataset** out);
FCCNN_API fccnn_status fccnn_dataset_load_ctns(const char* images_path, const char* labels_path, size_t num_classes,
                                               const char* encoding, fccnn_dataset** out);
FCCNN_API size_t fccnn_dataset_size(const fccnn_dataset* dataset);
FCCNN_API size_t fccnn_dataset_num_classes(const fccnn_dataset* dataset);
FCCNN_API void fccnn_dataset_free(fccnn_dataset* dataset);

FCCNN_API fccnn_status fccnn_evaluate(fccnn_model* model, const fccnn_dataset* dataset, size_t batch_size,
                                      double* accuracy, double* loss);

/* Re-encodes an RGB image tensor file ([N,3,H,W], values in [0,1]). */
FCCNN_API fccnn_status fccnn_encode_ctns(const char* in_path, const char* encoding, const char* out_path);

typedef struct fccnn_train_options {
    const char* model;    /* "fc-cnn" */
    const char* dataset;  /* "cifar10" */
    const char* data_dir; /* NULL: FCCNN_DATA_DIR */
    const char* encoding; /* "rgb" */
    const char* out_dir;  /* "run" */
    size_t epochs;        /* 20 */
    size_t batch_size;    /* 256 */
    double lr, beta1, beta2, eps, weight_decay;
    uint64_t seed;
    int stage2;           /* 1 */
    int stage2_reinit;    /* 0 */
    const char* gate_scope;     /* "correct-samples" */
    const char* dcn_activation; /* "crelu" */
    size_t train_limit;   /* 0: whole split */
    size_t test_limit;
} fccnn_train_options;

FCCNN_API void fccnn_train_options_init(fccnn_train_options* options);

typedef struct fccnn_epoch_metrics {
    size_t epoch;
    int stage;
    double train_loss;
    double train_acc;
    double test_acc;
    double e_thr;
    double wall_s;
    size_t iteration;
} fccnn_epoch_metrics;

typedef void (*fccnn_progress_fn)(const fccnn_epoch_metrics* metrics, void* user);

typedef struct fccnn_train_result {
    double stage1_test_acc;
    double final_test_acc;
} fccnn_train_result;

/* Trains, then writes <out_dir>/stage1, <out_dir>/final, metrics.csv,
   summary.txt and curves.svg. progress and result may be NULL. */
FCCNN_API fccnn_status fccnn_train(const fccnn_train_options* options, fccnn_progress_fn progress, void* user,
                                   fccnn_train_result* result);

/* Runs the gradient verification suite; report may be NULL. */
FCCNN_API fccnn_status fccnn_gradcheck(size_t points, uint64_t seed, double* max_rel_error, int* passed,
                                       char** report);

#ifdef __cplusplus
}
#endif

#endif
