// Copyright 2026 The fsadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the fsadapt few-shot embedding classifiers.
 *
 * All objects are opaque handles created by a *_load / *_build / *_init /
 * *_run call and released with the matching *_free. Every fallible call
 * returns an fsa_status; on failure fsa_last_error_message() describes the
 * problem (thread-local, valid until the next failing call on the thread).
 * Strings returned through char** are owned by the caller and released with
 * fsa_string_free.
 */
#ifndef FSADAPT_H_
#define FSADAPT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FSADAPT_BUILDING_LIBRARY)
#define FSADAPT_API __declspec(dllexport)
#else
#define FSADAPT_API __declspec(dllimport)
#endif
#else
#define FSADAPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fsa_status {
  FSA_OK = 0,
  FSA_ERR_BAD_MAGIC = 1,
  FSA_ERR_TRUNCATED_FILE = 2,
  FSA_ERR_DIM_MISMATCH = 3,
  FSA_ERR_LABEL_OUT_OF_RANGE = 4,
  FSA_ERR_NON_FINITE_VALUE = 5,
  FSA_ERR_IO = 6,
  FSA_ERR_ZERO_VECTOR = 7,
  FSA_ERR_INSUFFICIENT_SHOTS = 8,
  FSA_ERR_DEGENERATE_OUTPUT = 9,
  FSA_ERR_MISSING_ADAPTER = 10,
  FSA_ERR_MISSING_SUPPORT = 11,
  FSA_ERR_VARIANT_CONSTRAINT = 12,
  FSA_ERR_EMPTY_GRID = 13,
  FSA_ERR_BAD_DIMENSION = 14,
  FSA_ERR_LABEL_SPACE_MISMATCH = 15,
  FSA_ERR_BAD_FORMAT = 16,
  FSA_ERR_INVALID_ARGUMENT = 17,
  FSA_ERR_INTERNAL = 99
} fsa_status;

typedef enum fsa_split {
  FSA_SPLIT_TRAIN = 0,
  FSA_SPLIT_VAL = 1,
  FSA_SPLIT_TEST = 2
} fsa_split;

typedef enum fsa_variant {
  FSA_VARIANT_ZS_CLAP = 0,
  FSA_VARIANT_CLAP_S = 1,
  FSA_VARIANT_TIP_ADAPTER = 2,
  FSA_VARIANT_TIP_ADAPTER_F = 3,
  FSA_VARIANT_ADAPTER = 4,
  FSA_VARIANT_ADAPTER_ZS = 5,
  FSA_VARIANT_ADAPTER_SUPPORT = 6,
  FSA_VARIANT_CLAP_S_PLUS = 7
} fsa_variant;

typedef struct fsa_dataset fsa_dataset;
typedef struct fsa_weights fsa_weights;
typedef struct fsa_support fsa_support;
typedef struct fsa_adapter fsa_adapter;
typedef struct fsa_result fsa_result;

typedef struct fsa_predictor_config {
  fsa_variant variant;
  double alpha;
  double beta;
  double scale;
} fsa_predictor_config;

typedef struct fsa_train_config {
  double lr;
  uint32_t batch_size;
  uint32_t epochs;
  double weight_decay;
  uint64_t seed;
} fsa_train_config;

typedef struct fsa_adapter_shape {
  uint32_t hidden; /* 0 selects dim / 4 */
  double residual_ratio;
} fsa_adapter_shape;

typedef struct fsa_shift_options {
  uint32_t num_classes;
  uint32_t dim;
  uint32_t shots_available;
  double shift;
  double noise;
  uint64_t seed;
  int has_domain_seed;
  uint64_t domain_seed;
} fsa_shift_options;

typedef struct fsa_grid_result {
  double alpha;
  double beta;
  double val_accuracy;
} fsa_grid_result;

typedef struct fsa_timing {
  double train_seconds;
  double infer_ms_per_query;
  uint64_t params;
} fsa_timing;

/* ---- library ---------------------------------------------------------- */

FSADAPT_API const char* fsa_version(void);
FSADAPT_API const char* fsa_status_name(fsa_status status);
FSADAPT_API const char* fsa_last_error_message(void);
FSADAPT_API void fsa_string_free(char* s);

FSADAPT_API fsa_status fsa_variant_parse(const char* name, fsa_variant* out);
FSADAPT_API const char* fsa_variant_name(fsa_variant variant);
FSADAPT_API int fsa_variant_uses_adapter(fsa_variant variant);
FSADAPT_API int fsa_variant_uses_support(fsa_variant variant);
/* Returns 1 and stores the forced alpha when the variant pins it. */
FSADAPT_API int fsa_variant_forced_alpha(fsa_variant variant, double* alpha);

FSADAPT_API void fsa_predictor_config_default(fsa_variant variant, fsa_predictor_config* out);
FSADAPT_API fsa_status fsa_predictor_config_validate(const fsa_predictor_config* cfg);
FSADAPT_API void fsa_train_config_default(fsa_train_config* out);
FSADAPT_API void fsa_adapter_shape_default(fsa_adapter_shape* out);
FSADAPT_API void fsa_shift_options_default(fsa_shift_options* out);
/* Copy up to `capacity` values; return the full grid length. */
FSADAPT_API size_t fsa_default_alpha_grid(double* out, size_t capacity);
FSADAPT_API size_t fsa_default_beta_grid(double* out, size_t capacity);

/* ---- embedding datasets ---------------------------------------------- */

FSADAPT_API fsa_status fsa_dataset_load(const char* path, fsa_dataset** out);
FSADAPT_API fsa_status fsa_dataset_save(const fsa_dataset* ds, const char* path);
FSADAPT_API void fsa_dataset_free(fsa_dataset* ds);
FSADAPT_API uint32_t fsa_dataset_dim(const fsa_dataset* ds);
FSADAPT_API uint32_t fsa_dataset_num_classes(const fsa_dataset* ds);
FSADAPT_API size_t fsa_dataset_size(const fsa_dataset* ds);
FSADAPT_API size_t fsa_dataset_split_count(const fsa_dataset* ds, fsa_split split);
FSADAPT_API const char* fsa_dataset_class_name(const fsa_dataset* ds, uint32_t index);
/* Copies record `index`'s vector (dim floats) and label. */
FSADAPT_API fsa_status fsa_dataset_record(const fsa_dataset* ds, size_t index, float* vector,
                                          uint32_t* label, fsa_split* split);
FSADAPT_API fsa_status fsa_dataset_normalize(const fsa_dataset* ds, fsa_dataset** out);
FSADAPT_API fsa_status fsa_dataset_select_split(const fsa_dataset* ds, fsa_split split,
                                                fsa_dataset** out);

/* ---- class weights ---------------------------------------------------- */

FSADAPT_API fsa_status fsa_weights_load(const char* path, fsa_weights** out);
FSADAPT_API fsa_status fsa_weights_save(const fsa_weights* w, const char* path);
FSADAPT_API void fsa_weights_free(fsa_weights* w);
FSADAPT_API uint32_t fsa_weights_dim(const fsa_weights* w);
FSADAPT_API uint32_t fsa_weights_num_classes(const fsa_weights* w);
FSADAPT_API const char* fsa_weights_prompt_template(const fsa_weights* w);
FSADAPT_API const char* fsa_weights_class_name(const fsa_weights* w, uint32_t index);

/* ---- heads ------------------------------------------------------------ */

FSADAPT_API fsa_status fsa_clap_logits(const fsa_weights* w, const double* u, size_t dim,
                                       double scale, double* scores, size_t num_classes);
FSADAPT_API fsa_status fsa_zero_shot_accuracy(const fsa_dataset* test, const fsa_weights* w,
                                              double scale, double* accuracy);

/* shots == 0 builds the full-shot cache from every record. */
FSADAPT_API fsa_status fsa_support_build(const fsa_dataset* train, uint32_t shots, uint64_t seed,
                                         fsa_support** out);
FSADAPT_API void fsa_support_free(fsa_support* s);
FSADAPT_API size_t fsa_support_rows(const fsa_support* s);
FSADAPT_API fsa_status fsa_support_logits(const fsa_support* s, const double* u, size_t dim,
                                          double beta, double* scores, size_t num_classes);
FSADAPT_API fsa_status fsa_support_accuracy(const fsa_dataset* test, const fsa_support* s,
                                            double beta, double* accuracy);

/* ---- adapter ---------------------------------------------------------- */

FSADAPT_API fsa_status fsa_adapter_init(uint32_t dim, const fsa_adapter_shape* shape,
                                        uint64_t seed, fsa_adapter** out);
FSADAPT_API fsa_status fsa_adapter_load(const char* path, fsa_adapter** out);
FSADAPT_API fsa_status fsa_adapter_save(const fsa_adapter* a, const char* path);
FSADAPT_API void fsa_adapter_free(fsa_adapter* a);
FSADAPT_API uint32_t fsa_adapter_dim(const fsa_adapter* a);
FSADAPT_API uint32_t fsa_adapter_hidden(const fsa_adapter* a);
FSADAPT_API double fsa_adapter_residual_ratio(const fsa_adapter* a);
FSADAPT_API uint64_t fsa_adapter_parameter_count(const fsa_adapter* a);
FSADAPT_API fsa_status fsa_adapter_forward(const fsa_adapter* a, const double* u0, size_t dim,
                                           double* out);
/* Trains `adapter` in place. `epoch_loss` (nullable) receives cfg->epochs values. */
FSADAPT_API fsa_status fsa_adapter_train(fsa_adapter* adapter, const fsa_support* support,
                                         const fsa_weights* w, const fsa_predictor_config* cfg,
                                         const fsa_train_config* train, double* epoch_loss);

/* ---- prediction ------------------------------------------------------- */

/* `adapter` and `support` may be NULL when the configuration does not use them. */
FSADAPT_API fsa_status fsa_final_logits(const fsa_predictor_config* cfg, const double* u0,
                                        size_t dim, const fsa_adapter* adapter,
                                        const fsa_support* support, const fsa_weights* w,
                                        double* scores, size_t num_classes);
FSADAPT_API fsa_status fsa_evaluate(const fsa_predictor_config* cfg, const fsa_dataset* ds,
                                    const fsa_adapter* adapter, const fsa_support* support,
                                    const fsa_weights* w, double* accuracy);
FSADAPT_API fsa_status fsa_grid_search(const fsa_predictor_config* cfg_template,
                                       const fsa_dataset* val, const fsa_adapter* adapter,
                                       const fsa_support* support, const fsa_weights* w,
                                       const double* alphas, size_t num_alphas,
                                       const double* betas, size_t num_betas,
                                       fsa_grid_result* out);

/* ---- experiments ------------------------------------------------------ */

FSADAPT_API fsa_status fsa_make_shift_benchmark(const fsa_shift_options* options,
                                                fsa_dataset** ds, fsa_weights** w);
/* Fills defaults into a JSON experiment spec and returns the result. */
FSADAPT_API fsa_status fsa_experiment_spec_resolve(const char* spec_json, char** out_json);
FSADAPT_API fsa_status fsa_experiment_run(const char* spec_json, fsa_result** out);
FSADAPT_API fsa_status fsa_joint_run(const char* spec_json, fsa_result** out);
FSADAPT_API void fsa_result_free(fsa_result* r);
FSADAPT_API size_t fsa_result_run_count(const fsa_result* r);
FSADAPT_API fsa_status fsa_result_csv(const fsa_result* r, int include_timing, char** out);
FSADAPT_API fsa_status fsa_result_markdown(const fsa_result* r, char** out);
/* Summary rows as a JSON array of objects. */
FSADAPT_API fsa_status fsa_result_summary_json(const fsa_result* r, char** out);

/* `settings_json` (nullable) is an experiment spec supplying train/adapter settings. */
FSADAPT_API fsa_status fsa_time_variant(fsa_variant variant, const fsa_dataset* ds,
                                        const fsa_weights* w, uint32_t shots,
                                        const char* settings_json, int repetitions,
                                        fsa_timing* out);

#ifdef __cplusplus
}
#endif

#endif /* FSADAPT_H_ */
