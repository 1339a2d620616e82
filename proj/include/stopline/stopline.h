#ifndef STOPLINE_STOPLINE_H
#define STOPLINE_STOPLINE_H

/*
 * C interface of the stopline library.
 *
 * Every function returning int reports one of the status codes below. On a
 * non-zero status, stopline_last_error() returns a JSON object
 * {"code": ..., "kind": ..., "message": ...} describing the failure of the
 * most recent failing call on the calling thread.
 *
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with stopline_string_free().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define STOPLINE_API __declspec(dllexport)
#else
#define STOPLINE_API __attribute__((visibility("default")))
#endif

enum {
  STOPLINE_OK = 0,
  STOPLINE_ERR_CONFIG = 2,
  STOPLINE_ERR_SOLVER = 3
};

typedef struct stopline_run stopline_run;
typedef struct stopline_surface stopline_surface;

STOPLINE_API const char* stopline_version(void);
STOPLINE_API const char* stopline_last_error(void);
STOPLINE_API void stopline_string_free(char* s);

/* Number of built-in problems and the id of entry k. */
STOPLINE_API int stopline_catalog_size(void);
STOPLINE_API const char* stopline_catalog_id(int k);

/* A run configuration. config_json may be NULL or "" for an empty object;
   the configuration is validated on every change. */
STOPLINE_API int stopline_run_create(const char* config_json, stopline_run** out);
STOPLINE_API void stopline_run_destroy(stopline_run* run);

/* problem is a catalog id or an inline problem object as JSON text. */
STOPLINE_API int stopline_run_set_problem(stopline_run* run, const char* problem);
STOPLINE_API int stopline_run_set_grid(stopline_run* run, int M, int N);
STOPLINE_API int stopline_run_set_seed(stopline_run* run, uint64_t seed);
STOPLINE_API int stopline_run_set_refinements(stopline_run* run, int k);
STOPLINE_API int stopline_run_set_output(stopline_run* run, const char* directory);

/* The configuration with every default explicit. */
STOPLINE_API int stopline_run_resolved_config(const stopline_run* run, char** json_out);

/* Pipelines. Artifacts go to the output directory; json_out, when not NULL,
   receives the stage result (report, mc or summary object). */
STOPLINE_API int stopline_run_solve(const stopline_run* run);
STOPLINE_API int stopline_run_check(const stopline_run* run, char** json_out);
STOPLINE_API int stopline_run_mc(const stopline_run* run, char** json_out);
STOPLINE_API int stopline_run_report(const stopline_run* run, char** json_out);

/* Solved value surface at the configured grid, without writing files. */
STOPLINE_API int stopline_surface_solve(const stopline_run* run, stopline_surface** out);
STOPLINE_API void stopline_surface_destroy(stopline_surface* s);
STOPLINE_API int stopline_surface_shape(const stopline_surface* s, int* M, int* N);
/* Bilinear interpolation of V at (t, x). */
STOPLINE_API int stopline_surface_value(const stopline_surface* s, double t, double x, double* v);
/* Refined boundary b(t_i), i < N; infinite values mark slices of one phase. */
STOPLINE_API int stopline_surface_boundary(const stopline_surface* s, int i, double* t, double* b);

#ifdef __cplusplus
}
#endif

#endif
