/* C interface to the film-control workbench. All functions are thread-safe
 * with respect to distinct handles; the last-error message is thread-local. */
#ifndef FILMCTL_FILMCTL_H
#define FILMCTL_FILMCTL_H

#include <stddef.h>

#if defined(FILMCTL_BUILDING_LIBRARY)
#define FILMCTL_API __attribute__((visibility("default")))
#else
#define FILMCTL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct filmctl_config filmctl_config;
typedef struct filmctl_result filmctl_result;

typedef enum filmctl_status {
  FILMCTL_OK = 0,
  FILMCTL_ERR_ARGUMENT = 1,  /* null handle, bad value, inconsistent sizes */
  FILMCTL_ERR_CONFIG = 2,    /* unreadable or malformed configuration */
  FILMCTL_ERR_SYNTHESIS = 3, /* controller synthesis failed */
  FILMCTL_ERR_NUMERICAL = 4, /* stiffness, domain or stability failure */
  FILMCTL_ERR_RUNTIME = 5,   /* I/O and other runtime failures */
  FILMCTL_ERR_INTERNAL = 6   /* unexpected exception */
} filmctl_status;

typedef enum filmctl_command {
  FILMCTL_SIMULATE = 0,
  FILMCTL_SYNTHESIZE = 1,
  FILMCTL_SPECTRUM = 2,
  FILMCTL_SWEEP = 3
} filmctl_command;

/* Process exit codes reported by filmctl_result_exit_code. */
enum {
  FILMCTL_EXIT_OK = 0,
  FILMCTL_EXIT_USAGE = 1,
  FILMCTL_EXIT_NOT_STABILISED = 2,
  FILMCTL_EXIT_SYNTHESIS_FAILED = 3
};

FILMCTL_API const char* filmctl_version(void);

/* Message of the most recent failure on this thread ("" if none). */
FILMCTL_API const char* filmctl_last_error(void);
/* 1-based config line of the most recent FILMCTL_ERR_CONFIG, 0 if unknown. */
FILMCTL_API int filmctl_last_error_line(void);

/* Build a configuration from the file at `path` (or from nothing when `path`
 * is NULL) followed by `count` key/value overrides. */
FILMCTL_API filmctl_status filmctl_config_create(const char* path, const char* const* keys,
                                                 const char* const* values, size_t count, filmctl_config** out);
/* Same, from configuration text instead of a file. */
FILMCTL_API filmctl_status filmctl_config_parse(const char* text, const char* const* keys,
                                                const char* const* values, size_t count, filmctl_config** out);
FILMCTL_API filmctl_status filmctl_config_set(filmctl_config* config, const char* key, const char* value);
FILMCTL_API void filmctl_config_free(filmctl_config* config);

/* Strings owned by the handle, valid until it is modified or freed. */
FILMCTL_API filmctl_status filmctl_config_text(const filmctl_config* config, const char** out);
FILMCTL_API filmctl_status filmctl_config_hash(const filmctl_config* config, const char** out);
FILMCTL_API filmctl_status filmctl_config_out_dir(const filmctl_config* config, const char** out);

/* Run a command, writing its files below `out_dir`. A run that completes but
 * does not stabilise still returns FILMCTL_OK; inspect the exit code. */
FILMCTL_API filmctl_status filmctl_run(filmctl_command command, const filmctl_config* config, const char* out_dir,
                                       filmctl_result** out);

FILMCTL_API int filmctl_result_exit_code(const filmctl_result* result);
FILMCTL_API const char* filmctl_result_message(const filmctl_result* result);
/* JSON summary, identical to the summary.json written by the command. */
FILMCTL_API const char* filmctl_result_summary(const filmctl_result* result);
FILMCTL_API size_t filmctl_result_file_count(const filmctl_result* result);
FILMCTL_API const char* filmctl_result_file(const filmctl_result* result, size_t index);
FILMCTL_API void filmctl_result_free(filmctl_result* result);

#ifdef __cplusplus
}
#endif

#endif /* FILMCTL_FILMCTL_H */
