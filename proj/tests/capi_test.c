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

/* Exercises the C interface from plain C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "t1mc/t1mc.h"

static int failures = 0;

#define EXPECT(cond)                                                       \
  do {                                                                     \
    if (!(cond)) {                                                         \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
              t1mc_last_error());                                          \
      ++failures;                                                          \
    }                                                                      \
  } while (0)

static char *join(const char *a, const char *b) {
  size_t n = strlen(a) + strlen(b) + 2;
  char *s = malloc(n);
  snprintf(s, n, "%s/%s", a, b);
  return s;
}

int main(int argc, char **argv) {
  const char *work = argc > 1 ? argv[1] : "capi_work";
  EXPECT(strlen(t1mc_version()) > 0);
  EXPECT(t1mc_set_threads(2) == T1MC_OK);

  /* Volume handles and warping. */
  double ramp[4 * 3 * 2];
  for (int i = 0; i < 24; ++i) ramp[i] = (double)(i % 4);
  t1mc_volume *vol = NULL;
  EXPECT(t1mc_volume_create(4, 3, 2, ramp, &vol) == T1MC_OK);
  int dims[3] = {0, 0, 0};
  EXPECT(t1mc_volume_dims(vol, dims) == T1MC_OK);
  EXPECT(dims[0] == 4 && dims[1] == 3 && dims[2] == 2);
  double back[24];
  EXPECT(t1mc_volume_read(vol, back, 24) == T1MC_OK);
  EXPECT(memcmp(back, ramp, sizeof ramp) == 0);
  EXPECT(t1mc_volume_read(vol, back, 5) == T1MC_ERR_ARGUMENT);
  EXPECT(strlen(t1mc_last_error()) > 0);

  t1mc_volume *bad = NULL;
  double nan_data[1] = {NAN};
  EXPECT(t1mc_volume_create(1, 1, 1, nan_data, &bad) == T1MC_ERR_ARGUMENT);
  EXPECT(bad == NULL);
  EXPECT(t1mc_volume_create(0, 1, 1, NULL, &bad) == T1MC_ERR_ARGUMENT);

  t1mc_volume *missing = NULL;
  EXPECT(t1mc_volume_load("/nonexistent/t1mc/volume", &missing) == T1MC_ERR_IO);
  t1mc_field *unused = NULL;
  EXPECT(t1mc_register_pair(vol, vol, "{\"registration\": {\"lambda\": -1}}", &unused, NULL) ==
         T1MC_ERR_ARGUMENT);
  EXPECT(t1mc_volume_dims(NULL, dims) == T1MC_ERR_ARGUMENT);

  /* Phantom, fit and registration through the file-level commands. */
  const char *cfg =
      "{\"phantom\": {\"dims\": [48, 48, 8]}, \"registration\": {\"max_iters\": 10}}";
  char *ph_dir = join(work, "phantom");
  char *report = NULL;
  EXPECT(t1mc_cmd_phantom(cfg, ph_dir, &report) == T1MC_OK);
  EXPECT(report != NULL && strstr(report, "gradient_bound") != NULL);
  t1mc_string_free(report);

  char *manifest = join(ph_dir, "series.json");
  t1mc_series *series = NULL;
  EXPECT(t1mc_series_load(manifest, &series) == T1MC_OK);
  size_t n = 0;
  EXPECT(t1mc_series_size(series, &n) == T1MC_OK);
  EXPECT(n == 11);
  double ms = 0.0;
  EXPECT(t1mc_series_time(series, 0, &ms) == T1MC_OK && ms == 135.0);
  EXPECT(t1mc_series_time(series, 10, &ms) == T1MC_OK && ms == HUGE_VAL);
  EXPECT(t1mc_series_time(series, 11, &ms) == T1MC_ERR_ARGUMENT);

  t1mc_maps *maps = NULL;
  EXPECT(t1mc_fit(series, NULL, 0, &maps) == T1MC_OK);
  double mean = 0.0, sd = 0.0;
  EXPECT(t1mc_maps_r2(maps, NULL, 0, &mean, &sd) == T1MC_OK);
  EXPECT(mean > 0.5 && mean <= 1.0 && sd >= 0.0);
  char *maps_dir = join(work, "maps");
  EXPECT(t1mc_maps_save(maps, maps_dir) == T1MC_OK);
  t1mc_maps_free(maps);

  t1mc_volume *f0 = NULL, *f3 = NULL;
  EXPECT(t1mc_series_frame(series, 0, &f0) == T1MC_OK);
  EXPECT(t1mc_series_frame(series, 3, &f3) == T1MC_OK);
  t1mc_field *field = NULL;
  char *reg = NULL;
  /* Raw intensities exceed 1, so the pair must be normalized first. */
  EXPECT(t1mc_register_pair(f0, f3, cfg, &field, &reg) == T1MC_ERR_ARGUMENT);
  char *f0p = join(ph_dir, "frame_00");
  char *f3p = join(ph_dir, "frame_03");
  char *fieldp = join(work, "field");
  EXPECT(t1mc_cmd_register(f0p, f3p, cfg, 1, fieldp, NULL, NULL, &reg) == T1MC_OK);
  EXPECT(reg != NULL && strstr(reg, "energy_trace") != NULL);
  t1mc_string_free(reg);
  EXPECT(t1mc_field_load(fieldp, &field) == T1MC_OK);
  EXPECT(t1mc_field_dims(field, dims) == T1MC_OK && dims[0] == 48);
  t1mc_volume *warped = NULL;
  EXPECT(t1mc_warp(f3, field, &warped) == T1MC_OK);
  EXPECT(t1mc_warp(vol, field, &warped) == T1MC_ERR_ARGUMENT);

  char *resolved = NULL;
  EXPECT(t1mc_config_resolve("{}", &resolved) == T1MC_OK);
  EXPECT(resolved != NULL && strstr(resolved, "\"lambda\"") != NULL);
  t1mc_string_free(resolved);
  EXPECT(t1mc_config_resolve("{\"bogus\": 1}", &resolved) == T1MC_ERR_ARGUMENT);

  t1mc_volume_free(warped);
  t1mc_field_free(field);
  t1mc_volume_free(f0);
  t1mc_volume_free(f3);
  t1mc_series_free(series);
  t1mc_volume_free(vol);
  free(ph_dir);
  free(manifest);
  free(maps_dir);
  free(f0p);
  free(f3p);
  free(fieldp);

  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
