/* C interface to the fair-representation library.
 *
 * Every entry point returns fd_status; on failure fd_last_error() holds a
 * message for the calling thread. Handles are opaque and must be released
 * with their matching _free function. Strings returned through char** are
 * owned by the caller and released with fd_string_free.
 */
#ifndef FAIRDISC_H
#define FAIRDISC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FD_API __declspec(dllexport)
#else
#define FD_API __attribute__((visibility("default")))
#endif

typedef enum fd_status {
    FD_OK = 0,
    FD_ERR_INVALID = 1, /* precondition violated (null pointer, bad shape, ...) */
    FD_ERR_CONFIG = 2,  /* configuration failed validation */
    FD_ERR_DATA = 3,    /* malformed or inconsistent input data */
    FD_ERR_NUMERIC = 4, /* non-finite values during computation */
    FD_ERR_IO = 5,      /* filesystem or serialization failure */
    FD_ERR_INTERNAL = 6 /* unexpected failure; report a bug */
} fd_status;

FD_API const char* fd_version(void);

/* Message from the last failing call on this thread; "" when none. */
FD_API const char* fd_last_error(void);

FD_API void fd_string_free(char* s);

/* ---- datasets ------------------------------------------------------- */

typedef struct fd_dataset fd_dataset;

FD_API fd_status fd_dataset_load_cache(const char* path, fd_dataset** out);
FD_API fd_status fd_dataset_rows(const fd_dataset* d, size_t* out);
FD_API fd_status fd_dataset_dim(const fd_dataset* d, size_t* out);
FD_API fd_status fd_dataset_classes(const fd_dataset* d, size_t* target, size_t* sensitive);
FD_API void fd_dataset_free(fd_dataset* d);

/* ---- models --------------------------------------------------------- */

typedef struct fd_model fd_model;

FD_API fd_status fd_model_load(const char* checkpoint_path, fd_model** out);
FD_API fd_status fd_model_save(const fd_model* m, const char* checkpoint_path);
FD_API fd_status fd_model_code_dim(const fd_model* m, size_t* out);
/* Static string; do not free. */
FD_API fd_status fd_model_variant(const fd_model* m, const char** out);
/* Posterior means for `rows` samples of width `dim`. mu_t receives
 * rows*code_dim doubles; mu_s may be NULL and requires a sensitive branch. */
FD_API fd_status fd_model_encode(const fd_model* m, const double* x, size_t rows, size_t dim,
                                 double* mu_t, double* mu_s);
FD_API void fd_model_free(fd_model* m);

/* ---- configs -------------------------------------------------------- */

/* Reads a run-config file and returns the fully resolved document. */
FD_API fd_status fd_config_load(const char* path, char** out_json);
/* Applies optional overrides (variant name, seed) and re-validates. */
FD_API fd_status fd_config_override(const char* config_json, const char* variant, int has_seed,
                                    uint64_t seed, char** out_json);

/* ---- run orchestration ---------------------------------------------- */
/* Each command writes its artifacts plus manifest.json into out_dir and,
 * when report_json is non-NULL, returns a small summary document. */

FD_API fd_status fd_preprocess(const char* schema_path, const char* train_csv,
                               const char* test_csv, double test_fraction, uint64_t split_seed,
                               const char* out_dir, char** report_json);
FD_API fd_status fd_train_run(const char* config_json, const char* out_dir, char** report_json);
FD_API fd_status fd_evaluate_run(const char* config_json, const char* out_dir,
                                 const char* checkpoint_path, char** report_json);
FD_API fd_status fd_ablate_run(const char* config_json, const char* out_dir, size_t parallel,
                               char** report_json);
FD_API fd_status fd_sweep_run(const char* config_json, const char* out_dir, size_t parallel,
                              char** report_json);
FD_API fd_status fd_export_embeddings(const char* config_json, const char* out_dir,
                                      const char* embedding, const char* split,
                                      const char* checkpoint_path, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* FAIRDISC_H */
