#ifndef SBMAI_C_API_H
#define SBMAI_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SBMAI_API __declspec(dllexport)
#else
#define SBMAI_API __attribute__((visibility("default")))
#endif

typedef enum sbmai_status {
  SBMAI_OK = 0,
  SBMAI_ERR_PARAMETER = 1,
  SBMAI_ERR_DOMAIN = 2,
  SBMAI_ERR_SIZE = 3,
  SBMAI_ERR_IO = 4,
  SBMAI_ERR_ESTIMATOR = 5,
  SBMAI_ERR_UNKNOWN_COMMAND = 6,
  SBMAI_ERR_INTERNAL = 7
} sbmai_status;

typedef struct sbmai_config sbmai_config;
typedef struct sbmai_result sbmai_result;
typedef struct sbmai_params sbmai_params;

/* Message of the last failed call on this thread; "" after a success.
   Valid until the next call on the same thread. */
SBMAI_API const char* sbmai_last_error(void);
/* "ok", "parameter", "domain", "size", "io", "estimator",
   "unknown_command" or "internal". */
SBMAI_API const char* sbmai_status_name(sbmai_status status);
SBMAI_API const char* sbmai_version(void);

/* Space-separated command names. */
SBMAI_API const char* sbmai_commands(void);
/* Option list and output columns of a command; free with sbmai_string_free. */
SBMAI_API sbmai_status sbmai_command_help(const char* command, char** out);
/* JSON array of {"key", "default", "help"} objects, the last one being
   "format" with its allowed values under "choices". */
SBMAI_API sbmai_status sbmai_command_options(const char* command, char** out);

/* ---- settings ---- */

SBMAI_API sbmai_config* sbmai_config_new(void);
/* Accepts a flat JSON object of settings, or the text of a JSON or CSV
   output whose embedded config is reused. *command_out (may be NULL)
   receives the command named in the text, or NULL; free it with
   sbmai_string_free. */
SBMAI_API sbmai_status sbmai_config_from_text(const char* text, sbmai_config** out,
                                              char** command_out);
/* value_json is a JSON value: 12, 0.5, "mcmc", true, [8,10]. */
SBMAI_API sbmai_status sbmai_config_set(sbmai_config* cfg, const char* key,
                                        const char* value_json);
SBMAI_API sbmai_status sbmai_config_remove(sbmai_config* cfg, const char* key);
/* Settings as given (resolved = 0) or with defaults filled in for
   `command` (resolved = 1). */
SBMAI_API sbmai_status sbmai_config_to_json(const sbmai_config* cfg, const char* command,
                                            int resolved, char** out);
SBMAI_API void sbmai_config_free(sbmai_config* cfg);

/* ---- commands ---- */

/* Runs `command`. On SBMAI_OK and SBMAI_ERR_ESTIMATOR *out holds the
   artifacts (partial ones for an estimator failure, possibly none);
   otherwise *out is NULL. */
SBMAI_API sbmai_status sbmai_run(const char* command, const sbmai_config* cfg,
                                 sbmai_result** out);
SBMAI_API size_t sbmai_result_artifact_count(const sbmai_result* res);
/* Suffix appended to the output path; "" for the main artifact. */
SBMAI_API const char* sbmai_result_artifact_suffix(const sbmai_result* res, size_t i);
SBMAI_API const char* sbmai_result_artifact_data(const sbmai_result* res, size_t i,
                                                 size_t* size);
SBMAI_API const char* sbmai_result_console(const sbmai_result* res);
SBMAI_API int sbmai_result_partial(const sbmai_result* res);
SBMAI_API void sbmai_result_free(sbmai_result* res);

SBMAI_API void sbmai_string_free(char* s);

/* ---- model parameters ---- */

SBMAI_API sbmai_status sbmai_params_from_channel(int n, double r, double p_bar, double lambda,
                                                 int sign, sbmai_params** out);
SBMAI_API sbmai_status sbmai_params_from_delta(int n, double r, double p_bar, double delta,
                                               sbmai_params** out);
SBMAI_API sbmai_status sbmai_params_from_degrees(int n, double r, double d_n, double b_n,
                                                 sbmai_params** out);
SBMAI_API void sbmai_params_free(sbmai_params* p);

typedef struct sbmai_params_record {
  int n;
  double r;
  double p_bar;
  double delta;
  double d_n;
  double b_n;
  double a_n;
  double c_n;
  double lambda_n;
} sbmai_params_record;

SBMAI_API sbmai_status sbmai_params_get(const sbmai_params* p, sbmai_params_record* out);

/* ---- numerics ---- */

/* Replica potential at q; quad_order 0 selects the default rule. */
SBMAI_API sbmai_status sbmai_psi(double q, double lambda, double r, int quad_order, double* out);
SBMAI_API sbmai_status sbmai_replica_minimize(double lambda, double r, double tol,
                                              double* q_star, double* psi_star);
/* Per-node mutual information, summing over all graphs (n <= 5). */
SBMAI_API sbmai_status sbmai_exact_mi(const sbmai_params* p, double t, double* out);
/* Per-node mutual information from `samples` exact free energies. */
SBMAI_API sbmai_status sbmai_mi_free_energy(const sbmai_params* p, size_t samples, uint64_t seed,
                                            double* mean, double* stderr_out);

/* Worker threads for parallel loops; 0 selects the hardware count. Results
   do not depend on it. */
SBMAI_API sbmai_status sbmai_set_threads(int threads);

#ifdef __cplusplus
}
#endif

#endif
