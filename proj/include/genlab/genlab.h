#ifndef GENLAB_H
#define GENLAB_H

/* C interface to the genlab core. All entry points return a status code;
 * out-parameters are only written on GENLAB_OK. Objects returned through
 * handle out-parameters are owned by the caller and released with the
 * matching *_free function. Strings returned through genlab_last_error and
 * the *_text functions live in thread-local / handle-owned storage and stay
 * valid until the next call on the same thread (or handle). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum genlab_status {
  GENLAB_OK = 0,
  GENLAB_ERR_INVALID_ARGUMENT = 1, /* bad pointer, bad value, bad config text */
  GENLAB_ERR_IO = 2,               /* file could not be read or written */
  GENLAB_ERR_RUNTIME = 3,          /* experiment ran but reported failures */
  GENLAB_ERR_INTERNAL = 4          /* unexpected exception; see last_error */
} genlab_status;

/* Human-readable message for the most recent failing call on this thread.
 * Empty string when the last call succeeded. */
const char* genlab_last_error(void);

const char* genlab_version(void);

/* ---- configuration ---------------------------------------------------- */

typedef struct genlab_config genlab_config;

/* Built-in defaults for every key. */
genlab_status genlab_config_default(genlab_config** out);

/* Parse a `key = value` config file. Every key must be present; errors name
 * the offending file and line. */
genlab_status genlab_config_load(const char* path, genlab_config** out);

/* Set one key on an existing config, same syntax as a file line's value. */
genlab_status genlab_config_set(genlab_config* cfg, const char* key,
                                const char* value);

/* Replace the seed list (used by ablation and sweep). */
genlab_status genlab_config_set_seeds(genlab_config* cfg, const uint64_t* seeds,
                                      size_t count);

/* Canonical serialized form; stable across key reordering in the source. */
genlab_status genlab_config_emit(genlab_config* cfg, const char** out_text);

/* 16 hex characters identifying the canonical form. */
genlab_status genlab_config_fingerprint(genlab_config* cfg, const char** out_text);

void genlab_config_free(genlab_config* cfg);

/* ---- experiments ------------------------------------------------------ */

/* Full 8-cell ablation (method toggles crossed) plus the real-data reference
 * row. Writes per-run records, a flat CSV, and provenance into out_dir.
 * Returns GENLAB_ERR_RUNTIME when any cell failed; the summary text lists
 * the failures. */
genlab_status genlab_run_ablation(genlab_config* cfg, const char* out_dir,
                                  int threads, const char** out_summary);

/* Replacement-fraction sweep over sweep.r_grid, with and without statistics
 * adaptation at each point. */
genlab_status genlab_run_r_sweep(genlab_config* cfg, const char* out_dir,
                                 int threads, const char** out_summary);

/* Train one cell: toggles taken from methods.hsm / methods.ds / methods.bna.
 * Writes a model checkpoint to model_path when non-NULL. out_accuracy gets
 * the real-test accuracy of the selected variant. */
genlab_status genlab_train_cell(genlab_config* cfg, uint64_t seed,
                                const char* model_path, double* out_accuracy,
                                const char** out_summary);

/* Gradient verification across every primitive and the composed paths.
 * corrupt may be NULL; naming a check injects an error into it (a harness
 * self-test). out_all_pass gets 1 or 0. */
genlab_status genlab_gradcheck(const char* corrupt, uint64_t seed,
                               int* out_all_pass, const char** out_report);

/* Describe the frozen world; when dump_path is non-NULL also write the
 * generator weights there in the documented text layout. */
genlab_status genlab_world_inspect(genlab_config* cfg, const char* dump_path,
                                   const char** out_text);

/* ---- models ------------------------------------------------------------ */

typedef struct genlab_classifier genlab_classifier;

genlab_status genlab_classifier_load(const char* path, genlab_classifier** out);
genlab_status genlab_classifier_save(genlab_classifier* c, const char* path);
void genlab_classifier_free(genlab_classifier* c);

#ifdef __cplusplus
}
#endif

#endif /* GENLAB_H */
