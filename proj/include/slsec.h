/* SPDX-License-Identifier: Apache-2.0
 *
 * slsec C API: a split-learning label-privacy laboratory behind a stable
 * extern-C surface. Handles are opaque; every fallible call returns a
 * slsec_status and leaves a human-readable message in slsec_last_error().
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with slsec_string_free().
 */

#ifndef SLSEC_H
#define SLSEC_H

#include <stddef.h>

#if defined(_WIN32)
#define SLSEC_API __declspec(dllexport)
#else
#define SLSEC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slsec_status {
  SLSEC_OK = 0,
  SLSEC_ERR_ARGUMENT = 1,    /* caller violated a precondition */
  SLSEC_ERR_DEGENERATE = 2,  /* input carries no usable signal */
  SLSEC_ERR_CONVERGENCE = 3, /* iteration budget exhausted */
  SLSEC_ERR_FORMAT = 4,      /* malformed file, frame, or config */
  SLSEC_ERR_PROTOCOL = 5,    /* parties disagree on shapes */
  SLSEC_ERR_TRAINING = 6,    /* non-finite loss or gradient */
  SLSEC_ERR_UNSUPPORTED = 7, /* operation undefined for this input */
  SLSEC_ERR_IO = 8,          /* filesystem failure */
  SLSEC_ERR_INTERNAL = 9     /* unexpected failure */
} slsec_status;

typedef struct slsec_config slsec_config; /* experiment configuration */
typedef struct slsec_run slsec_run;       /* one finished run's record */

SLSEC_API const char* slsec_version(void);

/* Message describing the most recent failure on this thread. */
SLSEC_API const char* slsec_last_error(void);

SLSEC_API void slsec_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

SLSEC_API slsec_config* slsec_config_new(void);
SLSEC_API void slsec_config_free(slsec_config* cfg);

/* key = value sections; see the config reference in the README. */
SLSEC_API slsec_status slsec_config_load_file(slsec_config* cfg,
                                              const char* path);

/* Apply one "section.key" override; overrides win over the loaded file. */
SLSEC_API slsec_status slsec_config_set(slsec_config* cfg, const char* key,
                                        const char* value);

/* Run every precondition check the training pipeline would. */
SLSEC_API slsec_status slsec_config_validate(slsec_config* cfg);

SLSEC_API slsec_status slsec_config_json(const slsec_config* cfg,
                                         char** out_json);

/* --- single run --------------------------------------------------------- */

/* Train (defended or not), run the configured attacks, evaluate utility. */
SLSEC_API slsec_status slsec_train(const slsec_config* cfg,
                                   slsec_run** out_run);

SLSEC_API void slsec_run_free(slsec_run* run);

/* Content-addressed id (hash of config + seed); owned by the run handle. */
SLSEC_API const char* slsec_run_id(const slsec_run* run);

/* Full run record as a JSON document. */
SLSEC_API slsec_status slsec_run_json(const slsec_run* run, char** out_json);

/* Write run_<id>.json plus per-attack CSVs under out_dir (atomically);
 * returns the record path. */
SLSEC_API slsec_status slsec_run_write(const slsec_run* run,
                                       const char* out_dir,
                                       char** out_record_path);

/* --- campaigns ---------------------------------------------------------- */

typedef enum slsec_sweep_axis {
  SLSEC_SWEEP_DIMENSION = 0,
  SLSEC_SWEEP_NOISE = 1
} slsec_sweep_axis;

/* One run per value with a shared seed. Every value is validated before the
 * first run. When out_dir is non-NULL each run record is written there. The
 * summary CSV (value, test utility, per-attack leak) is returned. */
SLSEC_API slsec_status slsec_sweep(const slsec_config* cfg,
                                   slsec_sweep_axis axis, const double* values,
                                   size_t n_values, const char* out_dir,
                                   char** out_summary_csv);

/* Repeat train + K-inference over `trials` derived seeds; returns the
 * histogram CSV (guessed_dimension, count, frequency). */
SLSEC_API slsec_status slsec_infer_k(const slsec_config* cfg, int trials,
                                     char** out_histogram_csv);

/* Aggregate run_*.json under records_dir into a plot-ready CSV. */
SLSEC_API slsec_status slsec_report(const char* records_dir, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* SLSEC_H */
