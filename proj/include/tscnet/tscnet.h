#ifndef TSCNET_TSCNET_H
#define TSCNET_TSCNET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define TSCNET_API __declspec(dllexport)
#else
#define TSCNET_API __attribute__((visibility("default")))
#endif

/* Status codes double as the CLI exit codes. */
typedef enum tscnet_status {
  TSCNET_OK = 0,
  TSCNET_ERR_USAGE = 1,   /* bad config key/value, bad argument */
  TSCNET_ERR_DATA = 2,    /* missing or malformed file, size mismatch */
  TSCNET_ERR_NUMERIC = 3, /* NaN/Inf during training, failed gradient check */
  TSCNET_ERR_INTERNAL = 4
} tscnet_status;

typedef struct tscnet_config tscnet_config;
typedef struct tscnet_model tscnet_model;

/* Receives one progress line (no trailing newline). */
typedef void (*tscnet_log_fn)(const char* line, void* user);

TSCNET_API const char* tscnet_version(void);

/* Message of the last failed call on this thread; empty after a success. */
TSCNET_API const char* tscnet_last_error(void);

/* Process-wide; pass NULL to silence. */
TSCNET_API void tscnet_set_log_callback(tscnet_log_fn fn, void* user);

/* Strings returned through char** out-parameters are owned by the caller. */
TSCNET_API void tscnet_string_free(char* s);

TSCNET_API tscnet_status tscnet_config_new(tscnet_config** out);
TSCNET_API void tscnet_config_free(tscnet_config* cfg);
/* key=value lines, '#' comments. Later calls override earlier ones. */
TSCNET_API tscnet_status tscnet_config_load_file(tscnet_config* cfg, const char* path);
TSCNET_API tscnet_status tscnet_config_set(tscnet_config* cfg, const char* key, const char* value);
/* Every resolved setting as key=value lines. */
TSCNET_API tscnet_status tscnet_config_dump(const tscnet_config* cfg, char** text);

/* Writes <dir>/images, <dir>/masks and <dir>/manifest.txt at the model input size.
   count <= 0 uses synth.count. */
TSCNET_API tscnet_status tscnet_gen_data(const tscnet_config* cfg, const char* dir, int count);

typedef struct tscnet_train_summary {
  int steps;
  double first_loss;
  double last_loss;
} tscnet_train_summary;

/* Uses the manifest, checkpoint and log paths of the config. On divergence
   the last good checkpoint is still written and TSCNET_ERR_NUMERIC returned. */
TSCNET_API tscnet_status tscnet_train(const tscnet_config* cfg, tscnet_train_summary* summary);

typedef struct tscnet_metrics {
  double s_alpha;
  double f_mean;
  double e_mean;
  double mae;
} tscnet_metrics;

/* `csv` (may be NULL) receives the per-image report with a MEAN row. */
TSCNET_API tscnet_status tscnet_evaluate(const tscnet_config* cfg, const char* checkpoint, const char* manifest,
                                         tscnet_metrics* mean, char** csv);

/* Writes S2 to `out`; with `laterals` also <stem>_s3.png and <stem>_s4.png. */
TSCNET_API tscnet_status tscnet_infer(const tscnet_config* cfg, const char* checkpoint, const char* image,
                                      const char* out, int laterals);

typedef struct tscnet_gradcheck_result {
  double max_error;
  double threshold;
  int passed;
} tscnet_gradcheck_result;

/* Returns TSCNET_ERR_NUMERIC when the check fails; `report` is filled either way. */
TSCNET_API tscnet_status tscnet_gradcheck(const tscnet_config* cfg, tscnet_gradcheck_result* result, char** report);

/* CSV of scratch element counts and median timings for the configured sizes. */
TSCNET_API tscnet_status tscnet_bench_attention(const tscnet_config* cfg, char** csv);

TSCNET_API tscnet_status tscnet_model_load(const tscnet_config* cfg, const char* checkpoint, tscnet_model** out);
TSCNET_API void tscnet_model_free(tscnet_model* model);
TSCNET_API int tscnet_model_input_size(const tscnet_model* model);
/* rgb: 3 x S x S planar values in [0, 1]; s2: S x S output in (0, 1). */
TSCNET_API tscnet_status tscnet_model_predict(const tscnet_model* model, const float* rgb, float* s2);

#ifdef __cplusplus
}
#endif

#endif
