/* C interface to the successor-map engine: opaque handles, integer status
 * codes, thread-local error messages. The CLI and other language bindings
 * link against this surface only. */
#ifndef BSR_C_H
#define BSR_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BSR_API __declspec(dllexport)
#else
#define BSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bsr_status {
  BSR_OK = 0,
  BSR_ERR_INVALID_ARGUMENT = 1,
  BSR_ERR_CONFIG = 2,
  BSR_ERR_IO = 3,
  BSR_ERR_NUMERIC = 4,
  BSR_ERR_INTERNAL = 5
} bsr_status;

typedef struct bsr_config bsr_config;
typedef struct bsr_result bsr_result;

BSR_API const char* bsr_status_name(int status);

/* Message for the last failing call on this thread; empty string if none. */
BSR_API const char* bsr_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* Experiment-profile defaults for an agent; profile in {exp1, exp2, exp3,
 * forage, ymaze}, agent in {bsr, bsr2, gsr, ssr, ssr_plus, ew, kq, gpi}. */
BSR_API bsr_config* bsr_config_create(const char* profile, const char* agent);

/* Full config from a JSON file ("profile"/"agent" keys select defaults,
 * remaining keys override them; unknown keys are an error). */
BSR_API bsr_config* bsr_config_load(const char* path);

BSR_API int bsr_config_set(bsr_config* cfg, const char* key, const char* value);
BSR_API int bsr_config_apply_file(bsr_config* cfg, const char* path);

/* JSON dump of the full configuration; free with bsr_string_free. */
BSR_API char* bsr_config_to_json(const bsr_config* cfg);

BSR_API void bsr_config_free(bsr_config* cfg);
BSR_API void bsr_string_free(char* s);

/* --- running ------------------------------------------------------------ */

/* Runs one experiment. out_dir may be NULL (no artifact files); on success
 * *result holds totals and per-episode records. */
BSR_API int bsr_run(const bsr_config* cfg, const char* out_dir, bsr_result** result);

BSR_API int64_t bsr_result_episodes(const bsr_result* r);
BSR_API double bsr_result_total_steps(const bsr_result* r);
BSR_API double bsr_result_total_return(const bsr_result* r);
BSR_API int bsr_result_episode_steps(const bsr_result* r, int64_t episode);
BSR_API double bsr_result_episode_return(const bsr_result* r, int64_t episode);
BSR_API void bsr_result_free(bsr_result* r);

/* Parameter sweep described by a JSON object:
 *   {"profile": "exp1", "agents": ["bsr","ssr"], "epsilons": [0,0.05],
 *    "alphas": [0.005], "seeds": 10, "base_seed": 1, "overrides": {...}}
 * Writes sweep_summary.txt (and per-cell totals) under out_dir. */
BSR_API int bsr_sweep(const char* spec_json, const char* out_dir, int jobs);

/* kind in {flicker, splitter, summary}; scans in_dir recursively for the
 * corresponding artifact CSVs and writes a report to out_path. */
BSR_API int bsr_analyze(const char* kind, const char* in_dir, const char* out_path);

/* Self-check of the independent numerical oracles; returns BSR_OK when all
 * pass. report (optional) receives a printable summary. */
BSR_API int bsr_oracle_check(char** report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BSR_C_H */
