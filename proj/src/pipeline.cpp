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

#include "t1mc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "json_util.hpp"
#include "t1mc/error.hpp"
#include "t1mc/io.hpp"
#include "t1mc/metrics.hpp"

namespace t1mc {

using detail::dump_json;
using detail::json;
using detail::number_or_null;

namespace {

// ---------------------------------------------------------------- config

void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
  if (!obj.is_object()) fail(ErrorKind::InvalidArgument, "config: '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(ErrorKind::InvalidArgument, "config: unknown key '" + where + "." + it.key() + "'");
    }
  }
}

template <class T>
void read(const json &obj, const char *key, T &dst, const std::string &where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception &) {
    fail(ErrorKind::InvalidArgument,
         "config: '" + where + "." + key + "' has the wrong type (" + obj.at(key).dump() + ")");
  }
}

Dims read_dims(const json &obj, const char *key, Dims dflt, const std::string &where) {
  if (!obj.contains(key)) return dflt;
  std::array<int, 3> v{};
  read(obj, key, v, where);
  return Dims{v[0], v[1], v[2]};
}

void parse_phantom(const json &j, PhantomSpec &p) {
  check_keys(j,
             {"dims", "blood_t1", "myo_t1", "background_t1", "blood_m0", "myo_m0", "background_m0",
              "inner_radius", "outer_radius", "noise_sigma", "motion_amplitude",
              "motion_smoothness", "ti1", "ti2", "rr", "seed"},
             "phantom");
  const std::string w = "phantom";
  p.dims = read_dims(j, "dims", p.dims, w);
  read(j, "blood_t1", p.blood_t1, w);
  read(j, "myo_t1", p.myo_t1, w);
  read(j, "background_t1", p.background_t1, w);
  read(j, "blood_m0", p.blood_m0, w);
  read(j, "myo_m0", p.myo_m0, w);
  read(j, "background_m0", p.background_m0, w);
  read(j, "inner_radius", p.inner_radius, w);
  read(j, "outer_radius", p.outer_radius, w);
  read(j, "noise_sigma", p.noise_sigma, w);
  read(j, "motion_amplitude", p.motion_amplitude, w);
  read(j, "motion_smoothness", p.motion_smoothness, w);
  read(j, "ti1", p.ti1, w);
  read(j, "ti2", p.ti2, w);
  read(j, "rr", p.rr, w);
  read(j, "seed", p.seed, w);
}

void parse_registration(const json &j, RegistrationConfig &r) {
  check_keys(j,
             {"lambda", "bins", "block", "parzen_sigma", "epsilon", "histogram", "max_iters", "step",
              "step_decay", "step_growth", "min_step", "pyramid_levels", "tolerance",
              "gradient_sigma", "image_sigma", "seed"},
             "registration");
  const std::string w = "registration";
  read(j, "lambda", r.lambda, w);
  read(j, "bins", r.mi.bins, w);
  read(j, "block", r.mi.block, w);
  read(j, "parzen_sigma", r.mi.parzen_sigma, w);
  read(j, "epsilon", r.mi.epsilon, w);
  if (j.contains("histogram")) {
    std::string mode;
    read(j, "histogram", mode, w);
    if (mode == "soft") {
      r.mi.mode = HistogramMode::Soft;
    } else if (mode == "hard") {
      r.mi.mode = HistogramMode::Hard;
    } else {
      fail(ErrorKind::InvalidArgument, "config: registration.histogram must be 'soft' or 'hard'");
    }
  }
  read(j, "max_iters", r.max_iters, w);
  read(j, "step", r.step, w);
  read(j, "step_decay", r.step_decay, w);
  read(j, "step_growth", r.step_growth, w);
  read(j, "min_step", r.min_step, w);
  read(j, "pyramid_levels", r.pyramid_levels, w);
  read(j, "tolerance", r.tolerance, w);
  read(j, "gradient_sigma", r.gradient_sigma, w);
  read(j, "image_sigma", r.image_sigma, w);
  read(j, "seed", r.seed, w);
}

json phantom_json(const PhantomSpec &p) {
  return json{{"dims", {p.dims.nx, p.dims.ny, p.dims.nz}},
              {"blood_t1", p.blood_t1},
              {"myo_t1", p.myo_t1},
              {"background_t1", p.background_t1},
              {"blood_m0", p.blood_m0},
              {"myo_m0", p.myo_m0},
              {"background_m0", p.background_m0},
              {"inner_radius", p.inner_radius},
              {"outer_radius", p.outer_radius},
              {"noise_sigma", p.noise_sigma},
              {"motion_amplitude", p.motion_amplitude},
              {"motion_smoothness", p.motion_smoothness},
              {"ti1", p.ti1},
              {"ti2", p.ti2},
              {"rr", p.rr},
              {"seed", p.seed}};
}

json registration_json(const RegistrationConfig &r) {
  return json{{"lambda", r.lambda},
              {"bins", r.mi.bins},
              {"block", r.mi.block},
              {"parzen_sigma", r.mi.parzen_sigma},
              {"epsilon", r.mi.epsilon},
              {"histogram", r.mi.mode == HistogramMode::Soft ? "soft" : "hard"},
              {"max_iters", r.max_iters},
              {"step", r.step},
              {"step_decay", r.step_decay},
              {"step_growth", r.step_growth},
              {"min_step", r.min_step},
              {"pyramid_levels", r.pyramid_levels},
              {"tolerance", r.tolerance},
              {"gradient_sigma", r.gradient_sigma},
              {"image_sigma", r.image_sigma},
              {"seed", r.seed}};
}

json config_json(const PipelineConfig &c) {
  return json{{"phantom", phantom_json(c.phantom)},
              {"registration", registration_json(c.registration)},
              {"strategy", to_string(c.strategy)},
              {"output_dir", c.output_dir},
              {"report", {{"scatter_voxels", c.scatter_voxels}}}};
}

// ---------------------------------------------------------------- report pieces

json dims_json(Dims d) { return json::array({d.nx, d.ny, d.nz}); }

json time_json(const TimePoint &t) { return t.is_infinite() ? json("inf") : json(t.ms()); }

json times_json(const std::vector<TimePoint> &times) {
  json a = json::array();
  for (const auto &t : times) a.push_back(time_json(t));
  return a;
}

json stats_json(const R2Stats &s) {
  return json{{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
}

json r2_json(const R2Report &r) {
  return json{{"mask", {{"before", stats_json(r.before_mask)}, {"after", stats_json(r.after_mask)}}},
              {"all", {{"before", stats_json(r.before_all)}, {"after", stats_json(r.after_all)}}},
              {"delta_mask_mean", r.after_mask.mean - r.before_mask.mean},
              {"delta_all_mean", r.after_all.mean - r.before_all.mean}};
}

json curves_json(const MseCurves &c, const std::vector<TimePoint> &times) {
  json t = json::array();
  for (std::size_t i : c.index) t.push_back(time_json(times[i]));
  return json{{"reference", c.reference},
              {"index", c.index},
              {"time_ms", t},
              {"before", c.before},
              {"after", c.after},
              {"crossover", c.crossover ? json(*c.crossover) : json(nullptr)}};
}

json pair_json(const PairSummary &p) {
  return json{{"moving", p.moving_index},
              {"fixed", p.fixed_index},
              {"iterations", p.iterations},
              {"converged", p.converged},
              {"monotone", p.monotone},
              {"final_energy", p.final_energy},
              {"final_mi", p.final_mi},
              {"final_reg", p.final_reg},
              {"energy_trace", p.energy_trace},
              {"trace_level", p.trace_level}};
}

std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string curves_csv(const MseCurves &c, const std::vector<TimePoint> &times) {
  std::string s = "index,time_ms,mse_before,mse_after\n";
  for (std::size_t i = 0; i < c.index.size(); ++i) {
    s += std::to_string(c.index[i]) + "," + fmt17(times[c.index[i]].ms()) + "," + fmt17(c.before[i]) +
         "," + fmt17(c.after[i]) + "\n";
  }
  return s;
}

std::string scatter_csv(const std::vector<ScatterRow> &rows) {
  std::string s = "time_ms,observed,fitted,voxel_id\n";
  for (const auto &r : rows) {
    s += fmt17(r.time_ms) + "," + fmt17(r.observed) + "," + fmt17(r.fitted) + "," +
         std::to_string(r.voxel_id) + "\n";
  }
  return s;
}

std::string field_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "field_%02zu", k);
  return buf;
}

double mean_endpoint_error(const DisplacementField &a, const DisplacementField &b, const Mask &mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.dims().count(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const auto p = a.at(i);
    const auto q = b.at(i);
    sum += std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                     (p[2] - q[2]) * (p[2] - q[2]));
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// ---------------------------------------------------------------- shared steps

struct PhantomArtifacts {
  GroundTruth truth;
  T1Series clean;
  MotionResult motion;
};

PhantomArtifacts generate_phantom(const PhantomSpec &spec) {
  PhantomArtifacts a;
  a.truth = make_phantom(spec);
  a.clean = synth_series(a.truth, inversion_schedule(spec.ti1, spec.ti2, spec.rr));
  a.motion = apply_motion(a.clean, spec);
  a.truth.fields = a.motion.fields;
  a.truth.gradient_bound = a.motion.gradient_bound;
  const std::string prov = dump_json(json{{"generator", "phantom"}, {"spec", phantom_json(spec)}}, -1);
  a.clean.provenance = prov;
  a.motion.series.provenance = prov;
  return a;
}

json write_phantom(const PhantomArtifacts &a, const PhantomSpec &spec, const fs::path &out) {
  save_series(a.motion.series, out, a.truth.mask);
  save_series(a.clean, out / "clean", a.truth.mask);
  save_volume(a.truth.m0, out / "truth" / "m0");
  save_volume(a.truth.t1, out / "truth" / "t1");
  save_mask(a.truth.mask, a.truth.m0.dims(), out / "truth" / "mask");
  json fields = json::array();
  for (std::size_t k = 0; k < a.truth.fields.size(); ++k) {
    save_field(a.truth.fields[k], out / "truth" / field_name(k));
    fields.push_back("truth/" + field_name(k));
  }
  json motion_mse = json::array();
  for (std::size_t k = 0; k < a.clean.size(); ++k) {
    motion_mse.push_back(mse(a.clean.frames[k], a.motion.series.frames[k], a.truth.mask));
  }
  std::size_t fg = 0;
  for (auto v : a.truth.mask) fg += v;
  return json{{"spec", phantom_json(spec)},
              {"dims", dims_json(spec.dims)},
              {"times_ms", times_json(a.clean.times)},
              {"foreground_voxels", fg},
              {"gradient_bound", a.truth.gradient_bound},
              {"true_fields", fields},
              {"motion_mse", motion_mse},
              {"series", "series.json"},
              {"clean_series", "clean/series.json"}};
}

Mask resolve_mask(const fs::path &manifest, const T1Series &s, const std::optional<fs::path> &explicit_mask,
                  std::string &source) {
  Mask m;
  if (explicit_mask) {
    m = load_mask(*explicit_mask);
    source = "file";
  } else if (auto from_manifest = load_series_mask(manifest)) {
    m = std::move(*from_manifest);
    source = "manifest";
  } else {
    std::size_t ref = s.size() - 1;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s.times[k].is_infinite()) ref = k;
    }
    m = otsu_mask(s.frames[ref]);
    source = "otsu";
  }
  if (m.size() != s.dims().count()) fail(ErrorKind::InvalidArgument, "mask dims do not match the series");
  return m;
}

struct Correction {
  NormalizedSeries normalized;
  SeriesCorrectionResult result;
  T1Series corrected;  // original intensities
};

Correction correct_series(const T1Series &series, const RegistrationConfig &cfg, Strategy strategy) {
  Correction c;
  c.normalized = normalize_series(series);
  if (c.normalized.degenerate) fail(ErrorKind::Numerical, "series is constant; nothing to register");
  c.result = register_series(c.normalized.series, cfg, strategy);
  c.corrected = apply_fields(series, c.result.fields);
  return c;
}

json correction_json(const Correction &c) {
  json pairs = json::array();
  bool monotone = true;
  int iterations = 0;
  for (const auto &p : c.result.pairs) {
    pairs.push_back(pair_json(p));
    monotone = monotone && p.monotone;
    iterations += p.iterations;
  }
  return json{{"strategy", to_string(c.result.strategy)},
              {"normalization",
               {{"min", c.normalized.min}, {"max", c.normalized.max}, {"degenerate", c.normalized.degenerate}}},
              {"pair_count", c.result.pairs.size()},
              {"total_iterations", iterations},
              {"all_monotone", monotone},
              {"pairs", pairs}};
}

void write_correction(const Correction &c, const fs::path &out, const Mask &mask) {
  save_series(c.corrected, out, mask);
  for (std::size_t k = 0; k < c.result.fields.size(); ++k) {
    save_field(c.result.fields[k], out / "fields" / field_name(k + 1));
  }
}

json fit_json(const ParameterMaps &maps, const Mask &mask) {
  std::size_t valid = 0;
  for (auto v : maps.valid) valid += v;
  return json{{"dims", dims_json(maps.dims)},
              {"valid_voxels", valid},
              {"r2_mask", stats_json(r2_stats(maps, mask))},
              {"r2_all", stats_json(r2_stats(maps))}};
}

// Runs `fn`, re-tagging any failure with the stage name.
template <class Fn>
auto stage(const char *name, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error &e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception &e) {
    throw Error(ErrorKind::Numerical, std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- public

void PipelineConfig::validate() const {
  phantom.validate();
  registration.validate();
  require(!output_dir.empty(), "config: output_dir must not be empty");
  require(scatter_voxels >= 1, "config: report.scatter_voxels must be >= 1");
}

PipelineConfig parse_pipeline_config(const std::string &json_text) {
  PipelineConfig c;
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) return c;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    fail(ErrorKind::InvalidArgument, std::string("config: invalid JSON (") + e.what() + ")");
  }
  check_keys(j, {"phantom", "registration", "strategy", "output_dir", "report"}, "config");
  if (j.contains("phantom")) parse_phantom(j.at("phantom"), c.phantom);
  if (j.contains("registration")) parse_registration(j.at("registration"), c.registration);
  if (j.contains("strategy")) {
    std::string s;
    read(j, "strategy", s, "config");
    c.strategy = parse_strategy(s);
  }
  read(j, "output_dir", c.output_dir, "config");
  if (j.contains("report")) {
    check_keys(j.at("report"), {"scatter_voxels"}, "report");
    read(j.at("report"), "scatter_voxels", c.scatter_voxels, "report");
  }
  c.validate();
  return c;
}

std::string pipeline_config_json(const PipelineConfig &cfg) { return dump_json(config_json(cfg)); }

std::string phantom_command(const PhantomSpec &spec, const fs::path &out) {
  const PhantomArtifacts a = generate_phantom(spec);
  json report = write_phantom(a, spec, out);
  const std::string text = dump_json(report);
  write_file_atomic(out / "phantom_report.json", text);
  return text;
}

std::string register_command(const RegisterPaths &paths, const RegistrationConfig &cfg, bool normalize) {
  Volume3 fixed = load_volume(paths.fixed);
  Volume3 moving = load_volume(paths.moving);
  require(fixed.dims() == moving.dims(), "register: fixed and moving dims differ");
  double lo = 0.0, hi = 1.0;
  if (normalize) {
    T1Series pair;
    pair.frames = {fixed, moving};
    pair.times = {TimePoint::at(1.0), TimePoint::at(2.0)};
    NormalizedSeries n = normalize_series(pair);
    if (n.degenerate) fail(ErrorKind::Numerical, "register: both images are the same constant");
    fixed = n.series.frames[0];
    moving = n.series.frames[1];
    lo = n.min;
    hi = n.max;
  }
  const RegistrationResult r = register_pair(fixed, moving, cfg);
  const Volume3 warped = warp(moving, r.field);
  json report{{"config", registration_json(cfg)},
              {"dims", dims_json(fixed.dims())},
              {"normalized", normalize},
              {"normalization", {{"min", lo}, {"max", hi}}},
              {"final_energy", r.final_energy},
              {"final_mi", r.final_mi},
              {"final_reg", r.final_reg},
              {"s_term", -r.final_mi},
              {"r_term", r.final_reg},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"monotone", trace_is_monotone(r)},
              {"mse_before", mse(fixed, moving)},
              {"mse_after", mse(fixed, warped)},
              {"energy_trace", r.energy_trace},
              {"trace_level", r.trace_level}};
  if (!paths.out_field.empty()) save_field(r.field, paths.out_field);
  if (!paths.out_warped.empty()) save_volume(warped, paths.out_warped);
  const std::string text = dump_json(report);
  if (!paths.report.empty()) write_file_atomic(paths.report, text);
  return text;
}

std::string mocorr_command(const fs::path &manifest, const RegistrationConfig &cfg, Strategy strategy,
                           const fs::path &out, const std::optional<fs::path> &mask_path) {
  const T1Series series = load_series(manifest);
  std::string mask_source;
  const Mask mask = resolve_mask(manifest, series, mask_path, mask_source);
  const Correction c = correct_series(series, cfg, strategy);
  write_correction(c, out, mask);
  const MseCurves curves = mse_over_time(0, series, c.corrected, mask);
  write_file_atomic(out / "mse_over_time.csv", curves_csv(curves, series.times));
  json report = correction_json(c);
  report["config"] = registration_json(cfg);
  report["mask_source"] = mask_source;
  report["mse_over_time"] = curves_json(curves, series.times);
  report["corrected_series"] = "series.json";
  const std::string text = dump_json(report);
  write_file_atomic(out / "mocorr_report.json", text);
  return text;
}

std::string fit_command(const fs::path &manifest, const fs::path &out, const std::optional<fs::path> &mask_path) {
  const T1Series series = load_series(manifest);
  std::string mask_source;
  const Mask mask = resolve_mask(manifest, series, mask_path, mask_source);
  const ParameterMaps maps = fit_volume(series);
  save_maps(maps, out);
  json report = fit_json(maps, mask);
  report["mask_source"] = mask_source;
  report["series"] = manifest.string();
  const std::string text = dump_json(report);
  write_file_atomic(out / "fit_report.json", text);
  return text;
}

std::string eval_command(const EvalInputs &in, const fs::path &out) {
  const T1Series before = load_series(in.before_series);
  const T1Series after = load_series(in.after_series);
  require(before.size() == after.size() && before.dims() == after.dims(),
          "eval: before and after series differ in shape");
  std::string mask_source;
  const Mask mask = resolve_mask(in.before_series, before, in.mask, mask_source);
  const ParameterMaps mb = load_maps(in.before_fit);
  const ParameterMaps ma = load_maps(in.after_fit);
  const R2Report r2 = r2_report(mb, ma, mask);
  const MseCurves curves = mse_over_time(0, before, after, mask);
  write_file_atomic(out / "scatter_before.csv", scatter_csv(scatter_sample(before, mb, mask, in.scatter_voxels)));
  write_file_atomic(out / "scatter_after.csv", scatter_csv(scatter_sample(after, ma, mask, in.scatter_voxels)));
  write_file_atomic(out / "mse_over_time.csv", curves_csv(curves, before.times));
  json report{{"mask_source", mask_source},
              {"r2", r2_json(r2)},
              {"mse_over_time", curves_json(curves, before.times)},
              {"scatter", {{"before", "scatter_before.csv"}, {"after", "scatter_after.csv"}}}};
  const std::string text = dump_json(report);
  write_file_atomic(out / "eval_report.json", text);
  return text;
}

std::string run_pipeline(const PipelineConfig &cfg) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  using clock = std::chrono::steady_clock;
  json timing = json::object();
  json stages = json::array();
  auto timed = [&](const char *name, auto &&fn) {
    const auto t0 = clock::now();
    auto result = stage(name, fn);
    timing[name] = std::chrono::duration<double>(clock::now() - t0).count();
    return result;
  };

  // phantom
  const PhantomArtifacts ph = timed("phantom", [&] { return generate_phantom(cfg.phantom); });
  stages.push_back({{"name", "phantom"}, {"status", "ok"}, {"summary", stage("phantom", [&] {
                      return write_phantom(ph, cfg.phantom, out / "phantom");
                    })}});

  // preprocess
  struct Prepared {
    T1Series series;
    Mask mask;
    bool applied = false;
  };
  const Prepared prep = timed("preprocess", [&] {
    Prepared p{ph.motion.series, ph.truth.mask, false};
    // Only acquisition-sized inputs are cropped; smaller phantoms pass through.
    const Dims in = p.series.dims();
    if (in.nx >= 256 && in.ny >= 256 && in.nz <= 8) {
      for (auto &f : p.series.frames) f = preprocess(f);
      Volume3 m(ph.truth.m0.dims());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ph.truth.mask[i];
      const Volume3 pm = preprocess(m);
      p.mask.assign(pm.size(), 0);
      for (std::size_t i = 0; i < pm.size(); ++i) p.mask[i] = pm[i] >= 0.5 ? 1 : 0;
      p.applied = true;
    }
    return p;
  });
  stages.push_back({{"name", "preprocess"},
                    {"status", "ok"},
                    {"summary",
                     {{"applied", prep.applied},
                      {"dims_in", dims_json(ph.motion.series.dims())},
                      {"dims_out", dims_json(prep.series.dims())}}}});

  // registration
  const Correction corr = timed("registration", [&] {
    return correct_series(prep.series, cfg.registration, cfg.strategy);
  });
  json reg = correction_json(corr);
  stage("registration", [&] {
    write_correction(corr, out / "corrected", prep.mask);
    if (!prep.applied) {
      json epe = json::array();
      for (std::size_t k = 1; k < prep.series.size(); ++k) {
        const DisplacementField truth = invert_field(ph.truth.fields[k]);
        const DisplacementField zero(truth.dims());
        epe.push_back({{"frame", k},
                       {"before", mean_endpoint_error(zero, truth, prep.mask)},
                       {"after", mean_endpoint_error(corr.result.fields[k - 1], truth, prep.mask)}});
      }
      reg["endpoint_error"] = epe;
    }
    return 0;
  });
  stages.push_back({{"name", "registration"}, {"status", "ok"}, {"summary", reg}});

  // fit
  struct Fits {
    ParameterMaps before, after;
  };
  const Fits fits = timed("fit", [&] {
    return Fits{fit_volume(prep.series), fit_volume(corr.corrected)};
  });
  stage("fit", [&] {
    save_maps(fits.before, out / "fit_before");
    save_maps(fits.after, out / "fit_after");
    return 0;
  });
  stages.push_back({{"name", "fit"},
                    {"status", "ok"},
                    {"summary", {{"before", fit_json(fits.before, prep.mask)}, {"after", fit_json(fits.after, prep.mask)}}}});

  // report
  const json results = timed("report", [&] {
    const R2Report r2 = r2_report(fits.before, fits.after, prep.mask);
    const MseCurves curves = mse_over_time(0, prep.series, corr.corrected, prep.mask);
    write_file_atomic(out / "mse_over_time.csv", curves_csv(curves, prep.series.times));
    write_file_atomic(out / "scatter_before.csv",
                      scatter_csv(scatter_sample(prep.series, fits.before, prep.mask, cfg.scatter_voxels)));
    write_file_atomic(out / "scatter_after.csv",
                      scatter_csv(scatter_sample(corr.corrected, fits.after, prep.mask, cfg.scatter_voxels)));
    return json{{"r2", r2_json(r2)}, {"mse_over_time", curves_json(curves, prep.series.times)}};
  });
  stages.push_back({{"name", "report"},
                    {"status", "ok"},
                    {"summary",
                     {{"artifacts",
                       {"mse_over_time.csv", "scatter_before.csv", "scatter_after.csv"}}}}});

  json report{{"schema", "t1mc-run-report"},
              {"schema_version", 1},
              {"version", T1MC_VERSION},
              {"config", config_json(cfg)},
              {"seeds", {{"phantom", cfg.phantom.seed}, {"registration", cfg.registration.seed}}},
              {"stages", stages},
              {"results", results},
              {"timing", timing}};
  const std::string text = dump_json(report);
  validate_run_report(text);
  write_file_atomic(out / "run_report.json", text);
  return text;
}

void validate_run_report(const std::string &report_json) {
  const json j = json::parse(report_json, nullptr, false);
  auto bad = [](const std::string &what) { fail(ErrorKind::Io, "run report failed validation: " + what); };
  if (j.is_discarded() || !j.is_object()) bad("not a JSON object");
  for (const char *k : {"schema", "schema_version", "version", "config", "seeds", "stages", "results", "timing"}) {
    if (!j.contains(k)) bad(std::string("missing '") + k + "'");
  }
  static const char *kStages[] = {"phantom", "preprocess", "registration", "fit", "report"};
  const auto &st = j.at("stages");
  if (!st.is_array() || st.size() != 5) bad("expected 5 stages");
  for (std::size_t i = 0; i < 5; ++i) {
    if (!st[i].is_object() || st[i].value("name", "") != kStages[i]) bad(std::string("stage ") + kStages[i] + " out of place");
    if (st[i].value("status", "") != "ok") bad(std::string("stage ") + kStages[i] + " not ok");
  }
  const auto &res = j.at("results");
  if (!res.contains("r2") || !res.at("r2").contains("mask") || !res.at("r2").contains("all")) bad("missing r2 results");
  const auto &c = res.contains("mse_over_time") ? res.at("mse_over_time") : json();
  if (!c.is_object() || !c.contains("before") || !c.contains("after") || c.at("before").size() != c.at("after").size()) {
    bad("missing or inconsistent mse_over_time");
  }
  if (!j.at("timing").is_object()) bad("timing must be an object");
}

}  // namespace t1mc
