#ifndef TYPEDMOOD_H
#define TYPEDMOOD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TmStatus {
  TM_STATUS_OK = 0,
  TM_STATUS_NULL_POINTER = 1,
  TM_STATUS_INVALID_ARGUMENT = 2,
  TM_STATUS_IO = 3,
  TM_STATUS_PARSE = 4,
  TM_STATUS_DIMENSION_MISMATCH = 5,
  TM_STATUS_SINGLE_CLASS = 6,
  TM_STATUS_BUFFER_TOO_SMALL = 7,
  TM_STATUS_RUNTIME = 8,
  TM_STATUS_PANIC = 9,
} TmStatus;

/*
 Opaque dataset handle.
 */
typedef struct TmDataset TmDataset;

/*
 Opaque fitted-model handle.
 */
typedef struct TmModel TmModel;

typedef struct TmSignedRank {
  double w_plus;
  double w_minus;
  /*
   Non-zero differences used.
   */
  size_t n;
  double p_less;
  double p_greater;
  double p_value;
  bool exact;
} TmSignedRank;

typedef struct TmRankSum {
  double u;
  double rank_sum;
  double p_less;
  double p_greater;
  double p_value;
  bool exact;
} TmRankSum;

typedef struct TmGenConfig {
  size_t n_users;
  /*
   Days per user, used when `total_days` is 0.
   */
  size_t n_days_per_user;
  size_t total_days;
  size_t vocab_size;
  size_t n_apps;
  double identity_strength;
  double mood_strength;
  uint64_t seed;
} TmGenConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *tm_version(void);

/*
 Copy the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length in bytes.
 */
size_t tm_last_error(char *buf, size_t len);

/*
 Map a 0-100 mood score to 0 (negative), 1 (neutral) or 2 (positive).
 */
enum TmStatus tm_bin_mood(int64_t score, uint32_t *class_out);

enum TmStatus tm_macro_f1(const uint32_t *predicted,
                          const uint32_t *labels,
                          size_t n,
                          size_t n_classes,
                          double *f1_out);

/*
 Paired signed-rank test of `a - b`.
 */
enum TmStatus tm_wilcoxon_signed_rank(const double *a,
                                      const double *b,
                                      size_t n,
                                      struct TmSignedRank *result);

/*
 Two-sample rank-sum test; `p_less` is the probability that `a` tends to
 be smaller.
 */
enum TmStatus tm_wilcoxon_rank_sum(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   struct TmRankSum *result);

/*
 Privacy gained per unit of performance lost; `negative_out` flags
 ratios excluded from selection.
 */
enum TmStatus tm_compute_r(double s_mlp,
                           double s_nimlp,
                           double t_mlp,
                           double t_nimlp,
                           double *r_out,
                           bool *negative_out);

/*
 Mark the points (`t` higher is better, `s` lower is better) that no
 other point dominates.
 */
enum TmStatus tm_pareto_front(const double *t, const double *s, size_t n, bool *on_front);

/*
 Default generator settings.
 */
enum TmStatus tm_gen_config_default(struct TmGenConfig *config);

/*
 Generate a synthetic featurized dataset.
 */
enum TmStatus tm_generate(const struct TmGenConfig *config, struct TmDataset **dataset);

/*
 Read a dataset file written by the `featurize` stage.
 */
enum TmStatus tm_dataset_load(const char *path, struct TmDataset **dataset);

enum TmStatus tm_dataset_save(const struct TmDataset *dataset, const char *path);

void tm_dataset_free(struct TmDataset *dataset);

enum TmStatus tm_dataset_len(const struct TmDataset *dataset, size_t *len_out);

enum TmStatus tm_dataset_n_users(const struct TmDataset *dataset, size_t *n_out);

/*
 Number of feature columns for a modality code such as `"tka"`.
 */
enum TmStatus tm_dataset_input_dim(const struct TmDataset *dataset,
                                   const char *modalities,
                                   size_t *dim_out);

/*
 Row-major feature matrix; `capacity` must be at least rows times columns.
 */
enum TmStatus tm_dataset_features(const struct TmDataset *dataset,
                                  const char *modalities,
                                  double *buf,
                                  size_t capacity);

/*
 Mood classes (0, 1, 2) and user indices per row.
 */
enum TmStatus tm_dataset_labels(const struct TmDataset *dataset,
                                uint32_t *moods,
                                uint32_t *users,
                                size_t capacity);

/*
 Load a model artifact written by `train` or `nimlp`.
 */
enum TmStatus tm_model_load(const char *path, struct TmModel **model);

void tm_model_free(struct TmModel *model);

enum TmStatus tm_model_input_dim(const struct TmModel *model, size_t *dim_out);

enum TmStatus tm_model_n_classes(const struct TmModel *model, size_t *n_out);

/*
 Predict classes for `n_rows` row-major feature rows of width `n_cols`.
 */
enum TmStatus tm_model_predict(const struct TmModel *model,
                               const double *x,
                               size_t n_rows,
                               size_t n_cols,
                               uint32_t *classes_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TYPEDMOOD_H */
