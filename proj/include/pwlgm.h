/*
 *  Copyright 2026 The pwlgm Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

/*
 * C interface of libpwlgm: bilinear-spline latent growth models with a random
 * knot. Objects are opaque handles released with the matching _free call.
 * Strings returned through char** are heap-allocated and must be released with
 * pwlgm_string_free. On failure every call leaves a message retrievable with
 * pwlgm_last_error (per thread, valid until the next failing call).
 *
 * Configuration and parameter exchange use JSON text; see README.md for the
 * accepted keys.
 */

#ifndef PWLGM_H
#define PWLGM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PWLGM_BUILDING)
#    define PWLGM_API __declspec(dllexport)
#  else
#    define PWLGM_API __declspec(dllimport)
#  endif
#else
#  define PWLGM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes of the command-line tool. */
typedef enum pwlgm_status {
    PWLGM_OK = 0,
    PWLGM_ERR_INPUT = 1,         /* bad argument, data, config or file */
    PWLGM_ERR_NOT_CONVERGED = 2, /* fit returned but did not converge */
    PWLGM_ERR_NUMERIC = 3        /* internal numeric failure */
} pwlgm_status;

typedef struct pwlgm_dataset pwlgm_dataset;
typedef struct pwlgm_fit pwlgm_fit;

PWLGM_API const char* pwlgm_version(void);
PWLGM_API const char* pwlgm_last_error(void);
PWLGM_API void pwlgm_string_free(char* s);

/* ---- datasets ---- */

/* Reads a wide CSV (id,y1..yJ,t1..tJ,x1..xc) or, with long_layout != 0, a
 * long CSV (id,t,y,x1..xc). */
PWLGM_API pwlgm_status pwlgm_dataset_read_csv(const char* path, int long_layout, pwlgm_dataset** out);
PWLGM_API pwlgm_status pwlgm_dataset_write_csv(const pwlgm_dataset* data, const char* path);
PWLGM_API pwlgm_status pwlgm_dataset_to_csv(const pwlgm_dataset* data, char** csv);
PWLGM_API pwlgm_status pwlgm_dataset_dims(const pwlgm_dataset* data, size_t* n, size_t* waves,
                                          size_t* covariates);
PWLGM_API void pwlgm_dataset_free(pwlgm_dataset* data);

/* Draws one dataset for the config's condition; truth_json (may be NULL)
 * receives the generating parameters. */
PWLGM_API pwlgm_status pwlgm_simulate(const char* config_json, uint64_t seed, pwlgm_dataset** out,
                                      char** truth_json);

/* ---- fitting ---- */

/* Fits config.model (full, reduced, linear or quadratic). The handle is
 * produced even when the fit does not converge; the status then is
 * PWLGM_ERR_NOT_CONVERGED. */
PWLGM_API pwlgm_status pwlgm_fit_run(const pwlgm_dataset* data, const char* config_json, pwlgm_fit** out);
PWLGM_API pwlgm_status pwlgm_fit_report(const pwlgm_fit* fit, char** report_json);
PWLGM_API int pwlgm_fit_converged(const pwlgm_fit* fit);
PWLGM_API double pwlgm_fit_loglik(const pwlgm_fit* fit);
PWLGM_API void pwlgm_fit_free(pwlgm_fit* fit);

/* Fits every identified model and returns them ordered by AIC. */
PWLGM_API pwlgm_status pwlgm_compare(const pwlgm_dataset* data, const char* config_json, char** table_json);

/* direction: "toReparam", "fromReparam" or "cellwise". exact_inverse != 0
 * uses the exact inverse Jacobian for "fromReparam". */
PWLGM_API pwlgm_status pwlgm_transform(const char* params_json, const char* direction, int exact_inverse,
                                       char** out_json);

/* ---- Monte Carlo ---- */

/* Runs config.S convergent replications for the condition (or every cell of
 * config.grid). workers > 0 overrides config.workers. Any output pointer may
 * be NULL. */
PWLGM_API pwlgm_status pwlgm_mc_run(const char* config_json, int workers, char** metrics_json,
                                    char** metrics_csv, char** replications_csv);

#ifdef __cplusplus
}
#endif

#endif /* PWLGM_H */
