// Copyright 2026 The t1mc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the t1mc shared library. All handles are opaque; every
 * function returning t1mc_status leaves a message for t1mc_last_error() on
 * failure. Strings returned through char** must be released with
 * t1mc_string_free. */
#ifndef T1MC_H
#define T1MC_H

#include <stddef.h>
#include <stdint.h>

#if defined(T1MC_BUILDING_LIBRARY)
#define T1MC_API __attribute__((visibility("default")))
#else
#define T1MC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum t1mc_status {
  T1MC_OK = 0,
  T1MC_ERR_ARGUMENT = 2,
  T1MC_ERR_IO = 3,
  T1MC_ERR_NUMERICAL = 4,
  T1MC_ERR_INTERNAL = 5
} t1mc_status;

typedef struct t1mc_volume t1mc_volume;
typedef struct t1mc_field t1mc_field;
typedef struct t1mc_series t1mc_series;
typedef struct t1mc_maps t1mc_maps;

T1MC_API const char *t1mc_version(void);
/* Message of the last failure on the calling thread ("" if none). */
T1MC_API const char *t1mc_last_error(void);
T1MC_API void t1mc_string_free(char *s);

/* 0 selects the hardware concurrency. */
T1MC_API t1mc_status t1mc_set_threads(int n);

/* Volumes */
T1MC_API t1mc_status t1mc_volume_create(int nx, int ny, int nz, const double *data,
                                        t1mc_volume **out);
T1MC_API t1mc_status t1mc_volume_load(const char *path, t1mc_volume **out);
T1MC_API t1mc_status t1mc_volume_save(const t1mc_volume *vol, const char *base);
T1MC_API t1mc_status t1mc_volume_dims(const t1mc_volume *vol, int dims[3]);
/* Copies nx*ny*nz values, x-fastest. */
T1MC_API t1mc_status t1mc_volume_read(const t1mc_volume *vol, double *out, size_t count);
T1MC_API void t1mc_volume_free(t1mc_volume *vol);

/* Displacement fields */
T1MC_API t1mc_status t1mc_field_load(const char *path, t1mc_field **out);
T1MC_API t1mc_status t1mc_field_save(const t1mc_field *field, const char *base);
T1MC_API t1mc_status t1mc_field_dims(const t1mc_field *field, int dims[3]);
/* Copies the ux, uy and uz planes back to back (3*nx*ny*nz values). */
T1MC_API t1mc_status t1mc_field_read(const t1mc_field *field, double *out, size_t count);
T1MC_API t1mc_status t1mc_warp(const t1mc_volume *vol, const t1mc_field *field, t1mc_volume **out);
T1MC_API void t1mc_field_free(t1mc_field *field);

/* Series */
T1MC_API t1mc_status t1mc_series_load(const char *manifest, t1mc_series **out);
/* Writes frames and series.json into dir; *manifest_out may be NULL. */
T1MC_API t1mc_status t1mc_series_save(const t1mc_series *series, const char *dir, char **manifest_out);
T1MC_API t1mc_status t1mc_series_size(const t1mc_series *series, size_t *out);
/* Time in ms of frame k; the infinite time point reports HUGE_VAL. */
T1MC_API t1mc_status t1mc_series_time(const t1mc_series *series, size_t k, double *ms);
T1MC_API t1mc_status t1mc_series_frame(const t1mc_series *series, size_t k, t1mc_volume **out);
T1MC_API void t1mc_series_free(t1mc_series *series);

/* Registration. config_json uses the pipeline config layout; only its
 * "registration" section is read. NULL or "" selects the defaults. */
T1MC_API t1mc_status t1mc_register_pair(const t1mc_volume *fixed, const t1mc_volume *moving,
                                        const char *config_json, t1mc_field **field_out,
                                        char **report_json_out);

/* Voxel-wise fits; mask may be NULL. */
T1MC_API t1mc_status t1mc_fit(const t1mc_series *series, const uint8_t *mask, size_t mask_len,
                              t1mc_maps **out);
T1MC_API t1mc_status t1mc_maps_save(const t1mc_maps *maps, const char *dir);
/* Mean and standard deviation of R^2 over the mask (all voxels if NULL). */
T1MC_API t1mc_status t1mc_maps_r2(const t1mc_maps *maps, const uint8_t *mask, size_t mask_len,
                                  double *mean, double *stddev);
T1MC_API void t1mc_maps_free(t1mc_maps *maps);

/* File-level commands. Each writes its artifacts and, when report_out is not
 * NULL, returns the report JSON. */
T1MC_API t1mc_status t1mc_cmd_phantom(const char *config_json, const char *out_dir, char **report_out);
T1MC_API t1mc_status t1mc_cmd_register(const char *fixed_path, const char *moving_path,
                                       const char *config_json, int normalize,
                                       const char *out_field, const char *out_warped,
                                       const char *report_path, char **report_out);
T1MC_API t1mc_status t1mc_cmd_mocorr(const char *manifest, const char *strategy,
                                     const char *config_json, const char *mask_path,
                                     const char *out_dir, char **report_out);
T1MC_API t1mc_status t1mc_cmd_fit(const char *manifest, const char *mask_path, const char *out_dir,
                                  char **report_out);
T1MC_API t1mc_status t1mc_cmd_eval(const char *before_series, const char *before_fit,
                                   const char *after_series, const char *after_fit,
                                   const char *mask_path, size_t scatter_voxels,
                                   const char *out_dir, char **report_out);
/* Runs the whole pipeline; a non-NULL out_dir overrides the config's. */
T1MC_API t1mc_status t1mc_run_pipeline(const char *config_json, const char *out_dir,
                                       char **report_out);

/* Resolved config (defaults merged) as JSON. */
T1MC_API t1mc_status t1mc_config_resolve(const char *config_json, char **out);

#ifdef __cplusplus
}
#endif

#endif /* T1MC_H */
