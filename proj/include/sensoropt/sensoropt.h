/*
 * sensoropt C API.
 *
 * Every fallible call returns a sensoropt_status. On failure a description is
 * available from sensoropt_last_error() on the calling thread until the next
 * failing call on that thread. Objects are opaque handles released with the
 * matching *_free function; passing NULL to a *_free function is a no-op.
 * Index arguments past the end of a collection give SENSOROPT_ERR_DOMAIN.
 */
#ifndef SENSOROPT_H
#define SENSOROPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SENSOROPT_BUILDING_LIBRARY)
#    define SENSOROPT_API __declspec(dllexport)
#  else
#    define SENSOROPT_API __declspec(dllimport)
#  endif
#else
#  define SENSOROPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sensoropt_status {
  SENSOROPT_OK = 0,
  SENSOROPT_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad enum value */
  SENSOROPT_ERR_CONFIG = 2,
  SENSOROPT_ERR_DOMAIN = 3,
  SENSOROPT_ERR_RANGE = 4,
  SENSOROPT_ERR_SHAPE = 5,
  SENSOROPT_ERR_PARSE = 6,
  SENSOROPT_ERR_LOAD = 7,
  SENSOROPT_ERR_IO = 8,
  SENSOROPT_ERR_FIT = 9,
  SENSOROPT_ERR_OVERFLOW = 10,
  SENSOROPT_ERR_DIVERGED = 11,
  SENSOROPT_ERR_NOT_FOUND = 12,
  SENSOROPT_ERR_INTERNAL = 13
} sensoropt_status;

SENSOROPT_API const char* sensoropt_version(void);
SENSOROPT_API const char* sensoropt_last_error(void);
SENSOROPT_API const char* sensoropt_status_string(sensoropt_status status);

/* One choice of Input1, Input2, Input3, Input4, Input6. */
typedef struct sensoropt_settings {
  double input1;
  double input2;
  double input3;
  double input4;
  double input6;
} sensoropt_settings;

typedef struct sensoropt_row {
  double input1;
  double input2;
  double input3;
  double input4;
  int32_t input5;
  double input6;
  int32_t category;
  double signal;
  double snr;
  double output3;
} sensoropt_row;

/* ---- synthetic sensor ------------------------------------------------- */

typedef struct sensoropt_oracle sensoropt_oracle;

/* Default coefficients with the given seed and SNR noise (dB, 0 = exact). */
SENSOROPT_API sensoropt_status sensoropt_oracle_create(uint64_t seed, double noise_db, sensoropt_oracle** out);
/* JSON coefficient file; missing keys keep their defaults. */
SENSOROPT_API sensoropt_status sensoropt_oracle_load(const char* path, sensoropt_oracle** out);
SENSOROPT_API sensoropt_status sensoropt_oracle_save(const sensoropt_oracle* oracle, const char* path);
SENSOROPT_API sensoropt_status sensoropt_oracle_set_seed(sensoropt_oracle* oracle, uint64_t seed);
SENSOROPT_API sensoropt_status sensoropt_oracle_set_noise(sensoropt_oracle* oracle, double noise_db);
SENSOROPT_API sensoropt_status sensoropt_oracle_simulate(const sensoropt_oracle* oracle,
                                                         const sensoropt_settings* settings, int32_t input5,
                                                         int32_t category, double* signal, double* snr,
                                                         double* output3);
/* True SNR dip depth (dB) of a settings combination. */
SENSOROPT_API sensoropt_status sensoropt_oracle_dip_depth(const sensoropt_oracle* oracle,
                                                          const sensoropt_settings* settings, double* depth_db);
SENSOROPT_API void sensoropt_oracle_free(sensoropt_oracle* oracle);

/* Combinations in the grid kept by `scale` (1 = all 3125, 0.2 = 2 values per input). */
SENSOROPT_API sensoropt_status sensoropt_grid_combination_count(double scale, uint64_t* out);
/* resolution ^ n_inputs; SENSOROPT_ERR_OVERFLOW instead of wrapping. */
SENSOROPT_API sensoropt_status sensoropt_count_experiments(uint64_t resolution, uint64_t n_inputs, uint64_t* out);

/* ---- tables ----------------------------------------------------------- */

typedef struct sensoropt_table sensoropt_table;

SENSOROPT_API sensoropt_status sensoropt_table_generate(const sensoropt_oracle* oracle, double scale,
                                                        sensoropt_table** out);
SENSOROPT_API sensoropt_status sensoropt_table_read_csv(const char* path, sensoropt_table** out);
SENSOROPT_API sensoropt_status sensoropt_table_write_csv(const sensoropt_table* table, const char* path);
SENSOROPT_API size_t sensoropt_table_row_count(const sensoropt_table* table);
SENSOROPT_API sensoropt_status sensoropt_table_get_row(const sensoropt_table* table, size_t index, sensoropt_row* out);
SENSOROPT_API void sensoropt_table_free(sensoropt_table* table);

typedef enum sensoropt_partition {
  SENSOROPT_PARTITION_TRAIN = 0,
  SENSOROPT_PARTITION_VALIDATION = 1,
  SENSOROPT_PARTITION_TEST = 2,
  SENSOROPT_PARTITION_ALL = 3
} sensoropt_partition;

/* Sizes of the seeded 81/9/10 split of n_rows rows. */
SENSOROPT_API sensoropt_status sensoropt_split_sizes(size_t n_rows, uint64_t seed, size_t* train, size_t* validation,
                                                     size_t* test);

/* ---- training --------------------------------------------------------- */

typedef enum sensoropt_optimizer { SENSOROPT_OPTIMIZER_SGD = 0, SENSOROPT_OPTIMIZER_ADAM = 1 } sensoropt_optimizer;

#define SENSOROPT_MAX_HIDDEN_LAYERS 16

typedef struct sensoropt_train_options {
  uint32_t epochs;          /* 100 */
  uint32_t batch_size;      /* 20 */
  double learning_rate;     /* 0.0005 */
  uint32_t patience;        /* 5 */
  double reduction_factor;  /* 2 */
  uint64_t seed;            /* split, initialization and shuffling */
  int32_t optimizer;        /* sensoropt_optimizer, Adam by default */
  uint32_t hidden_count;    /* 3 */
  uint32_t hidden[SENSOROPT_MAX_HIDDEN_LAYERS]; /* 64, 64, 64 */
  double leaky_slope;       /* 0.3 */
  int32_t leaky_output;     /* 0: identity output layer */
} sensoropt_train_options;

SENSOROPT_API void sensoropt_train_options_init(sensoropt_train_options* options);

typedef struct sensoropt_epoch {
  uint32_t epoch;
  double train_mse;
  double val_mse;
  double learning_rate;
} sensoropt_epoch;

typedef void (*sensoropt_epoch_callback)(const sensoropt_epoch* epoch, void* user);

typedef struct sensoropt_model sensoropt_model;
typedef struct sensoropt_history sensoropt_history;

/* Splits the table with options->seed, fits normalization on the training
 * partition and trains. Either output pointer may be NULL. */
SENSOROPT_API sensoropt_status sensoropt_train(const sensoropt_table* table, const sensoropt_train_options* options,
                                               sensoropt_epoch_callback on_epoch, void* user,
                                               sensoropt_model** model, sensoropt_history** history);

SENSOROPT_API size_t sensoropt_history_length(const sensoropt_history* history);
SENSOROPT_API sensoropt_status sensoropt_history_get(const sensoropt_history* history, size_t index,
                                                     sensoropt_epoch* out);
SENSOROPT_API sensoropt_status sensoropt_history_write_csv(const sensoropt_history* history, const char* path);
SENSOROPT_API void sensoropt_history_free(sensoropt_history* history);

/* ---- model ------------------------------------------------------------ */

SENSOROPT_API sensoropt_status sensoropt_model_load(const char* path, sensoropt_model** out);
SENSOROPT_API sensoropt_status sensoropt_model_save(const sensoropt_model* model, const char* path);
/* n encoded rows (n x 10, row-major) to n x 3 normalized outputs. */
SENSOROPT_API sensoropt_status sensoropt_model_predict_normalized(const sensoropt_model* model, const double* inputs,
                                                                  size_t n, double* outputs);
/* One sample in physical units. */
SENSOROPT_API sensoropt_status sensoropt_model_predict(const sensoropt_model* model, const sensoropt_settings* settings,
                                                       int32_t input5, int32_t category, double* signal,
                                                       double* snr, double* output3);
/* Predicted curve of a combination: signal,snr_pred,snr_ideal,snr_line. */
SENSOROPT_API sensoropt_status sensoropt_model_write_curve_csv(const sensoropt_model* model,
                                                               const sensoropt_settings* settings, const char* path);
SENSOROPT_API void sensoropt_model_free(sensoropt_model* model);

typedef struct sensoropt_metrics {
  size_t rows;
  double mse[3]; /* signal (log), snr, output3; normalized units */
  double r2[3];  /* NaN when r2_defined is 0 */
  int32_t r2_defined[3];
} sensoropt_metrics;

/* Metrics on one partition of the seed's split. When pairs_directory is not
 * NULL, writes <prefix>signal.csv, <prefix>snr.csv, <prefix>output3.csv there. */
SENSOROPT_API sensoropt_status sensoropt_evaluate(const sensoropt_model* model, const sensoropt_table* table,
                                                  uint64_t split_seed, sensoropt_partition partition,
                                                  const char* pairs_directory, const char* pairs_prefix,
                                                  sensoropt_metrics* out);

/* ---- optimization ----------------------------------------------------- */

#define SENSOROPT_CRITERION_IDEAL_MAE 0x1u
#define SENSOROPT_CRITERION_PROMINENCE 0x2u
#define SENSOROPT_CRITERION_LINE_MAE 0x4u
#define SENSOROPT_CRITERION_OUTPUT3 0x8u
#define SENSOROPT_CRITERIA_ALL 0xFu

/* Arithmetic progression per setting, in sensoropt_settings field order. */
typedef struct sensoropt_interpolation {
  double min[5];
  double max[5];
  double step[5];
  uint64_t row_budget; /* combinations x 200 must not exceed this */
} sensoropt_interpolation;

SENSOROPT_API void sensoropt_interpolation_init(sensoropt_interpolation* spec);
SENSOROPT_API sensoropt_status sensoropt_interpolation_count(const sensoropt_interpolation* spec, uint64_t* out);

typedef void (*sensoropt_progress_callback)(uint64_t done, uint64_t total, void* user);

typedef struct sensoropt_sweep sensoropt_sweep;

SENSOROPT_API sensoropt_status sensoropt_sweep_run(const sensoropt_model* model, const sensoropt_interpolation* spec,
                                                   uint32_t threads, sensoropt_progress_callback progress, void* user,
                                                   sensoropt_sweep** out);

typedef struct sensoropt_candidate {
  sensoropt_settings settings;
  double criteria[4];          /* criteria[1] is NaN when prominence_defined is 0 */
  int32_t prominence_defined;
  int32_t ranks[4];            /* dense ascending; -1 when not ranked */
} sensoropt_candidate;

typedef struct sensoropt_selection {
  size_t index;
  sensoropt_candidate candidate;
  size_t depth; /* K of the top-K intersection */
  uint32_t subset;
} sensoropt_selection;

SENSOROPT_API size_t sensoropt_sweep_candidate_count(const sensoropt_sweep* sweep);
SENSOROPT_API sensoropt_status sensoropt_sweep_get_candidate(const sensoropt_sweep* sweep, size_t index,
                                                             sensoropt_candidate* out);
/* `subset` is a nonzero combination of the SENSOROPT_CRITERION_* bits.
 * SENSOROPT_ERR_NOT_FOUND when no candidate is ranked on every criterion. */
SENSOROPT_API sensoropt_status sensoropt_sweep_select(const sensoropt_sweep* sweep, uint32_t subset,
                                                      sensoropt_selection* out);
/* Candidate table with selected_full and selected_no_c4 columns. */
SENSOROPT_API sensoropt_status sensoropt_sweep_write_report(const sensoropt_sweep* sweep, const char* path);
SENSOROPT_API void sensoropt_sweep_free(sensoropt_sweep* sweep);

#ifdef __cplusplus
}
#endif

#endif /* SENSOROPT_H */
