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

#include "t1mc/t1mc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/io.hpp"
#include "t1mc/parallel.hpp"
#include "t1mc/pipeline.hpp"

struct t1mc_volume {
  t1mc::Volume3 v;
};
struct t1mc_field {
  t1mc::DisplacementField f;
};
struct t1mc_series {
  t1mc::T1Series s;
};
struct t1mc_maps {
  t1mc::ParameterMaps m;
};

namespace {

thread_local std::string g_last_error;

t1mc_status status_for(t1mc::ErrorKind k) {
  switch (k) {
    case t1mc::ErrorKind::InvalidArgument: return T1MC_ERR_ARGUMENT;
    case t1mc::ErrorKind::Io: return T1MC_ERR_IO;
    case t1mc::ErrorKind::Numerical: return T1MC_ERR_NUMERICAL;
  }
  return T1MC_ERR_INTERNAL;
}

template <class Fn>
t1mc_status guard(Fn &&fn) {
  try {
    g_last_error.clear();
    fn();
    return T1MC_OK;
  } catch (const t1mc::Error &e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return T1MC_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error &e) {
    g_last_error = e.what();
    return T1MC_ERR_IO;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return T1MC_ERR_INTERNAL;
  }
}

void need(const void *p, const char *name) {
  if (p == nullptr) t1mc::fail(t1mc::ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char **out, const std::string &s) {
  if (out != nullptr) *out = dup_string(s);
}

t1mc::PipelineConfig config_of(const char *json) {
  return t1mc::parse_pipeline_config(json == nullptr ? std::string() : std::string(json));
}

t1mc::Mask mask_of(const uint8_t *mask, size_t n) {
  if (mask == nullptr) return {};
  return t1mc::Mask(mask, mask + n);
}

std::optional<std::filesystem::path> opt_path(const char *p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

}  // namespace

extern "C" {

const char *t1mc_version(void) { return T1MC_VERSION; }
const char *t1mc_last_error(void) { return g_last_error.c_str(); }
void t1mc_string_free(char *s) { std::free(s); }

t1mc_status t1mc_set_threads(int n) {
  return guard([&] {
    t1mc::require(n >= 0, "thread count must be >= 0");
    t1mc::set_thread_count(static_cast<unsigned>(n));
  });
}

t1mc_status t1mc_volume_create(int nx, int ny, int nz, const double *data, t1mc_volume **out) {
  return guard([&] {
    need(out, "out");
    const t1mc::Dims d{nx, ny, nz};
    t1mc::require(d.valid(), "volume dims must be positive");
    auto *v = new t1mc_volume{data == nullptr ? t1mc::Volume3(d)
                                              : t1mc::Volume3(d, std::vector<double>(data, data + d.count()))};
    *out = v;
  });
}

t1mc_status t1mc_volume_load(const char *path, t1mc_volume **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new t1mc_volume{t1mc::load_volume(path)};
  });
}

t1mc_status t1mc_volume_save(const t1mc_volume *vol, const char *base) {
  return guard([&] {
    need(vol, "vol");
    need(base, "base");
    t1mc::save_volume(vol->v, base);
  });
}

t1mc_status t1mc_volume_dims(const t1mc_volume *vol, int dims[3]) {
  return guard([&] {
    need(vol, "vol");
    need(dims, "dims");
    dims[0] = vol->v.dims().nx;
    dims[1] = vol->v.dims().ny;
    dims[2] = vol->v.dims().nz;
  });
}

t1mc_status t1mc_volume_read(const t1mc_volume *vol, double *out, size_t count) {
  return guard([&] {
    need(vol, "vol");
    need(out, "out");
    t1mc::require(count == vol->v.size(), "count does not match the volume size");
    std::memcpy(out, vol->v.values().data(), count * sizeof(double));
  });
}

void t1mc_volume_free(t1mc_volume *vol) { delete vol; }

t1mc_status t1mc_field_load(const char *path, t1mc_field **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new t1mc_field{t1mc::load_field(path)};
  });
}

t1mc_status t1mc_field_save(const t1mc_field *field, const char *base) {
  return guard([&] {
    need(field, "field");
    need(base, "base");
    t1mc::save_field(field->f, base);
  });
}

t1mc_status t1mc_field_dims(const t1mc_field *field, int dims[3]) {
  return guard([&] {
    need(field, "field");
    need(dims, "dims");
    dims[0] = field->f.dims().nx;
    dims[1] = field->f.dims().ny;
    dims[2] = field->f.dims().nz;
  });
}

t1mc_status t1mc_field_read(const t1mc_field *field, double *out, size_t count) {
  return guard([&] {
    need(field, "field");
    need(out, "out");
    const size_t n = field->f.dims().count();
    t1mc::require(count == 3 * n, "count must be 3 * voxel count");
    for (int c = 0; c < 3; ++c) {
      std::memcpy(out + static_cast<size_t>(c) * n, field->f.component(c).data(), n * sizeof(double));
    }
  });
}

t1mc_status t1mc_warp(const t1mc_volume *vol, const t1mc_field *field, t1mc_volume **out) {
  return guard([&] {
    need(vol, "vol");
    need(field, "field");
    need(out, "out");
    *out = new t1mc_volume{t1mc::warp(vol->v, field->f)};
  });
}

void t1mc_field_free(t1mc_field *field) { delete field; }

t1mc_status t1mc_series_load(const char *manifest, t1mc_series **out) {
  return guard([&] {
    need(manifest, "manifest");
    need(out, "out");
    *out = new t1mc_series{t1mc::load_series(manifest)};
  });
}

t1mc_status t1mc_series_save(const t1mc_series *series, const char *dir, char **manifest_out) {
  return guard([&] {
    need(series, "series");
    need(dir, "dir");
    give(manifest_out, t1mc::save_series(series->s, dir).string());
  });
}

t1mc_status t1mc_series_size(const t1mc_series *series, size_t *out) {
  return guard([&] {
    need(series, "series");
    need(out, "out");
    *out = series->s.size();
  });
}

t1mc_status t1mc_series_time(const t1mc_series *series, size_t k, double *ms) {
  return guard([&] {
    need(series, "series");
    need(ms, "ms");
    t1mc::require(k < series->s.size(), "frame index out of range");
    *ms = series->s.times[k].is_infinite() ? HUGE_VAL : series->s.times[k].ms();
  });
}

t1mc_status t1mc_series_frame(const t1mc_series *series, size_t k, t1mc_volume **out) {
  return guard([&] {
    need(series, "series");
    need(out, "out");
    t1mc::require(k < series->s.size(), "frame index out of range");
    *out = new t1mc_volume{series->s.frames[k]};
  });
}

void t1mc_series_free(t1mc_series *series) { delete series; }

t1mc_status t1mc_register_pair(const t1mc_volume *fixed, const t1mc_volume *moving, const char *config_json,
                               t1mc_field **field_out, char **report_json_out) {
  return guard([&] {
    need(fixed, "fixed");
    need(moving, "moving");
    need(field_out, "field_out");
    const t1mc::PipelineConfig cfg = config_of(config_json);
    t1mc::RegistrationResult r = t1mc::register_pair(fixed->v, moving->v, cfg.registration);
    if (report_json_out != nullptr) {
      std::string trace = "[";
      for (std::size_t i = 0; i < r.energy_trace.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", r.energy_trace[i]);
        trace += buf;
      }
      trace += "]";
      char head[256];
      std::snprintf(head, sizeof head,
                    "{\"final_energy\":%.17g,\"final_mi\":%.17g,\"final_reg\":%.17g,\"iterations\":%d,"
                    "\"converged\":%s,\"energy_trace\":",
                    r.final_energy, r.final_mi, r.final_reg, r.iterations, r.converged ? "true" : "false");
      *report_json_out = dup_string(std::string(head) + trace + "}");
    }
    *field_out = new t1mc_field{std::move(r.field)};
  });
}

t1mc_status t1mc_fit(const t1mc_series *series, const uint8_t *mask, size_t mask_len, t1mc_maps **out) {
  return guard([&] {
    need(series, "series");
    need(out, "out");
    *out = new t1mc_maps{t1mc::fit_volume(series->s, mask_of(mask, mask_len))};
  });
}

t1mc_status t1mc_maps_save(const t1mc_maps *maps, const char *dir) {
  return guard([&] {
    need(maps, "maps");
    need(dir, "dir");
    t1mc::save_maps(maps->m, dir);
  });
}

t1mc_status t1mc_maps_r2(const t1mc_maps *maps, const uint8_t *mask, size_t mask_len, double *mean,
                         double *stddev) {
  return guard([&] {
    need(maps, "maps");
    const t1mc::Mask m = mask_of(mask, mask_len);
    t1mc::require(m.empty() || m.size() == maps->m.dims.count(), "mask size does not match the maps");
    const t1mc::R2Stats s = t1mc::r2_stats(maps->m, m);
    if (mean != nullptr) *mean = s.mean;
    if (stddev != nullptr) *stddev = s.stddev;
  });
}

void t1mc_maps_free(t1mc_maps *maps) { delete maps; }

t1mc_status t1mc_cmd_phantom(const char *config_json, const char *out_dir, char **report_out) {
  return guard([&] {
    need(out_dir, "out_dir");
    give(report_out, t1mc::phantom_command(config_of(config_json).phantom, out_dir));
  });
}

t1mc_status t1mc_cmd_register(const char *fixed_path, const char *moving_path, const char *config_json,
                              int normalize, const char *out_field, const char *out_warped,
                              const char *report_path, char **report_out) {
  return guard([&] {
    need(fixed_path, "fixed_path");
    need(moving_path, "moving_path");
    t1mc::RegisterPaths p;
    p.fixed = fixed_path;
    p.moving = moving_path;
    if (out_field) p.out_field = out_field;
    if (out_warped) p.out_warped = out_warped;
    if (report_path) p.report = report_path;
    give(report_out, t1mc::register_command(p, config_of(config_json).registration, normalize != 0));
  });
}

t1mc_status t1mc_cmd_mocorr(const char *manifest, const char *strategy, const char *config_json,
                            const char *mask_path, const char *out_dir, char **report_out) {
  return guard([&] {
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    const t1mc::PipelineConfig cfg = config_of(config_json);
    const t1mc::Strategy s = strategy ? t1mc::parse_strategy(strategy) : cfg.strategy;
    give(report_out, t1mc::mocorr_command(manifest, cfg.registration, s, out_dir, opt_path(mask_path)));
  });
}

t1mc_status t1mc_cmd_fit(const char *manifest, const char *mask_path, const char *out_dir, char **report_out) {
  return guard([&] {
    need(manifest, "manifest");
    need(out_dir, "out_dir");
    give(report_out, t1mc::fit_command(manifest, out_dir, opt_path(mask_path)));
  });
}

t1mc_status t1mc_cmd_eval(const char *before_series, const char *before_fit, const char *after_series,
                          const char *after_fit, const char *mask_path, size_t scatter_voxels,
                          const char *out_dir, char **report_out) {
  return guard([&] {
    need(before_series, "before_series");
    need(before_fit, "before_fit");
    need(after_series, "after_series");
    need(after_fit, "after_fit");
    need(out_dir, "out_dir");
    t1mc::require(scatter_voxels >= 1, "scatter_voxels must be >= 1");
    t1mc::EvalInputs in;
    in.before_series = before_series;
    in.before_fit = before_fit;
    in.after_series = after_series;
    in.after_fit = after_fit;
    in.mask = opt_path(mask_path);
    in.scatter_voxels = scatter_voxels;
    give(report_out, t1mc::eval_command(in, out_dir));
  });
}

t1mc_status t1mc_run_pipeline(const char *config_json, const char *out_dir, char **report_out) {
  return guard([&] {
    t1mc::PipelineConfig cfg = config_of(config_json);
    if (out_dir != nullptr && *out_dir != '\0') cfg.output_dir = out_dir;
    give(report_out, t1mc::run_pipeline(cfg));
  });
}

t1mc_status t1mc_config_resolve(const char *config_json, char **out) {
  return guard([&] {
    need(out, "out");
    *out = dup_string(t1mc::pipeline_config_json(config_of(config_json)));
  });
}

}  // extern "C"
