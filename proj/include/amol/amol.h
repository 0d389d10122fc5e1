#ifndef AMOL_AMOL_H
#define AMOL_AMOL_H

/* C interface to the treatment-regimen library. Objects are opaque handles
 * released with the matching *_free call; strings returned through char**
 * are released with amol_string_free. Every call returns an amol_status; the
 * message of the most recent failure on the calling thread is available from
 * amol_last_error(). Configuration is passed as JSON text (NULL = defaults). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AMOL_BUILDING_LIBRARY)
#    define AMOL_API __declspec(dllexport)
#  else
#    define AMOL_API __declspec(dllimport)
#  endif
#else
#  define AMOL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amol_status {
  AMOL_OK = 0,
  AMOL_ERR_INVALID_ARGUMENT = 1,
  AMOL_ERR_DIMENSION = 2,
  AMOL_ERR_IO = 3,
  AMOL_ERR_PARSE = 4,
  AMOL_ERR_SCHEMA = 5,
  AMOL_ERR_DEGENERATE = 6,
  AMOL_ERR_NUMERICAL = 7,
  AMOL_ERR_INTERNAL = 99
} amol_status;

typedef struct amol_dataset amol_dataset;
typedef struct amol_model amol_model;
typedef struct amol_benchmark amol_benchmark;

AMOL_API const char* amol_version(void);
AMOL_API const char* amol_last_error(void);
AMOL_API const char* amol_status_name(amol_status status);
AMOL_API void amol_string_free(char* s);

/* Datasets ---------------------------------------------------------------- */

AMOL_API amol_status amol_dataset_load_csv(const char* csv_path, const char* schema_path,
                                           amol_dataset** out);
/* setting: 1 or 2. */
AMOL_API amol_status amol_dataset_simulate(int setting, size_t n, uint64_t seed,
                                           amol_dataset** out);
/* Writes the wide CSV and, when schema_path is non-NULL, its schema JSON. */
AMOL_API amol_status amol_dataset_write(const amol_dataset* data, const char* csv_path,
                                        const char* schema_path);
AMOL_API size_t amol_dataset_size(const amol_dataset* data);
AMOL_API size_t amol_dataset_stages(const amol_dataset* data);
AMOL_API void amol_dataset_free(amol_dataset* data);

/* Fitting and evaluation ---------------------------------------------------- */

/* method: "qlearn", "olearn", "amol" or "amol-eff". */
AMOL_API amol_status amol_fit(const amol_dataset* data, const char* method,
                              const char* config_json, amol_model** out);
AMOL_API amol_status amol_model_load(const char* path, amol_model** out);
/* Fit report JSON (or regimen JSON for models loaded from a bare regimen). */
AMOL_API amol_status amol_model_to_json(const amol_model* model, char** out_json);
AMOL_API amol_status amol_model_save(const amol_model* model, const char* path);
AMOL_API amol_status amol_model_decide(const amol_model* model, size_t stage,
                                       const double* history, size_t len, int* out_action);
AMOL_API void amol_model_free(amol_model* model);

/* ValueEstimate JSON: {"value", "matched_fraction", "n"}. */
AMOL_API amol_status amol_evaluate(const amol_model* model, const amol_dataset* data,
                                   char** out_json);

/* Cost-selection curves for every weighted stage of the method. */
AMOL_API amol_status amol_cv_cost(const amol_dataset* data, const char* method,
                                  const char* config_json, char** out_json);

/* Benchmarks ---------------------------------------------------------------- */

/* spec_json: {"setting", "n_train", "n_test", "replicates", "seed", "methods": [...],
 *             "threads", "config": {...}} */
AMOL_API amol_status amol_benchmark_run(const char* spec_json, amol_benchmark** out);
AMOL_API amol_status amol_benchmark_summary_json(const amol_benchmark* report,
                                                 int include_runtime, char** out_json);
AMOL_API amol_status amol_benchmark_write(const amol_benchmark* report, const char* csv_path,
                                          const char* json_path);
AMOL_API double amol_benchmark_runtime(const amol_benchmark* report);
AMOL_API void amol_benchmark_free(amol_benchmark* report);

#ifdef __cplusplus
}
#endif

#endif /* AMOL_AMOL_H */
