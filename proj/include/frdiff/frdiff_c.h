/* Copyright 2026 The frdiff Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef FRDIFF_C_H
#define FRDIFF_C_H

#include <stddef.h>

#if defined(_WIN32)
#define FRDIFF_API __declspec(dllexport)
#else
#define FRDIFF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum frdiff_status {
  FRDIFF_OK = 0,
  FRDIFF_ERR_INTERNAL = 1,
  FRDIFF_ERR_CONFIG = 2,
  FRDIFF_ERR_NUMERIC = 3,
  FRDIFF_ERR_IO = 4,
  FRDIFF_ERR_ARGUMENT = 5
} frdiff_status;

typedef struct frdiff_config frdiff_config;
typedef struct frdiff_result frdiff_result;

FRDIFF_API const char* frdiff_version(void);
/* Message of the last failed call on this thread; empty when none. */
FRDIFF_API const char* frdiff_last_error(void);
FRDIFF_API void frdiff_string_free(char* s);

/* Commands accepted by frdiff_run, in display order. */
FRDIFF_API size_t frdiff_command_count(void);
FRDIFF_API const char* frdiff_command_name(size_t index);

/* Defaults, with FRDIFF_OUT applied to io.out_dir. */
FRDIFF_API frdiff_status frdiff_config_create(frdiff_config** out);
FRDIFF_API void frdiff_config_destroy(frdiff_config* config);
FRDIFF_API frdiff_status frdiff_config_load_file(frdiff_config* config, const char* path);
/* `value` is typed by the key: strings are taken verbatim, arrays accept a
 * comma-separated list, everything else is parsed as JSON. */
FRDIFF_API frdiff_status frdiff_config_set(frdiff_config* config, const char* key, const char* value);
/* Newly allocated JSON text; release with frdiff_string_free. */
FRDIFF_API frdiff_status frdiff_config_dump(const frdiff_config* config, char** out_json);
FRDIFF_API frdiff_status frdiff_config_get(const frdiff_config* config, const char* key,
                                           char** out_json);
FRDIFF_API frdiff_status frdiff_defaults_dump(char** out_json);

FRDIFF_API frdiff_status frdiff_run(const frdiff_config* config, const char* command,
                                    frdiff_result** out);
/* Views valid until frdiff_result_destroy. */
FRDIFF_API const char* frdiff_result_summary(const frdiff_result* result);
FRDIFF_API const char* frdiff_result_run_dir(const frdiff_result* result);
FRDIFF_API void frdiff_result_destroy(frdiff_result* result);

/* Speedup of uniform-interval reuse with one skippable fraction. */
FRDIFF_API frdiff_status frdiff_speedup(double skippable, int steps, int interval, double* out);
FRDIFF_API frdiff_status frdiff_mixing_lambda(int iteration, int steps, double tau, double bias,
                                              double* out);
/* Writes up to `capacity` members; *count receives the full size. */
FRDIFF_API frdiff_status frdiff_uniform_keyframes(int steps, int interval, int* out,
                                                  size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif /* FRDIFF_C_H */
