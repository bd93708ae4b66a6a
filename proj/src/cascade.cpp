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

#include "t1mc/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "t1mc/error.hpp"

namespace t1mc {

std::string to_string(Strategy s) { return s == Strategy::Cascade ? "cascade" : "anchor"; }

Strategy parse_strategy(const std::string &name) {
  if (name == "cascade") return Strategy::Cascade;
  if (name == "anchor") return Strategy::Anchor;
  fail(ErrorKind::InvalidArgument, "unknown strategy '" + name + "' (expected cascade or anchor)");
}

SeriesCorrectionResult register_series(const T1Series &series, const RegistrationConfig &cfg,
                                       Strategy strategy) {
  require(series.size() >= 2, "register_series: need at least 2 frames");
  series.validate();
  cfg.validate();

  SeriesCorrectionResult out;
  out.strategy = strategy;
  out.corrected.times = series.times;
  out.corrected.provenance = series.provenance;
  out.corrected.frames.push_back(series.frames[0]);
  for (std::size_t k = 1; k < series.size(); ++k) {
    const std::size_t ref = strategy == Strategy::Cascade ? k - 1 : 0;
    const Volume3 &fixed = out.corrected.frames[ref];
    RegistrationResult r = register_pair(fixed, series.frames[k], cfg);

    PairSummary p;
    p.moving_index = k;
    p.fixed_index = ref;
    p.final_energy = r.final_energy;
    p.final_mi = r.final_mi;
    p.final_reg = r.final_reg;
    p.iterations = r.iterations;
    p.converged = r.converged;
    p.monotone = trace_is_monotone(r);
    p.energy_trace = std::move(r.energy_trace);
    p.trace_level = std::move(r.trace_level);
    out.pairs.push_back(std::move(p));

    out.corrected.frames.push_back(warp(series.frames[k], r.field));
    out.fields.push_back(std::move(r.field));
  }
  return out;
}

T1Series apply_fields(const T1Series &series, const std::vector<DisplacementField> &fields) {
  series.validate();
  require(fields.size() + 1 == series.size(), "apply_fields: need one field per frame after the first");
  T1Series out;
  out.times = series.times;
  out.provenance = series.provenance;
  out.frames.push_back(series.frames[0]);
  for (std::size_t k = 1; k < series.size(); ++k) {
    out.frames.push_back(warp(series.frames[k], fields[k - 1]));
  }
  return out;
}

MseCurves mse_over_time(std::size_t reference, const T1Series &before, const T1Series &after,
                        const Mask &mask) {
  require(before.size() == after.size(), "mse_over_time: series lengths differ");
  require(reference < before.size(), "mse_over_time: reference index out of range");
  MseCurves c;
  c.reference = reference;
  for (std::size_t t = 0; t < before.size(); ++t) {
    if (t == reference) continue;
    c.index.push_back(t);
    c.before.push_back(mse(before.frames[reference], before.frames[t], mask));
    c.after.push_back(mse(after.frames[reference], after.frames[t], mask));
    if (!c.crossover && !(c.after.back() < c.before.back())) c.crossover = t;
  }
  return c;
}

R2Report r2_report(const ParameterMaps &before, const ParameterMaps &after, const Mask &mask) {
  require(before.dims == after.dims, "r2_report: map dims differ");
  require(mask.empty() || mask.size() == before.dims.count(), "r2_report: mask size mismatch");
  R2Report r;
  r.before_mask = r2_stats(before, mask);
  r.before_all = r2_stats(before);
  r.after_mask = r2_stats(after, mask);
  r.after_all = r2_stats(after);
  return r;
}

std::vector<ScatterRow> scatter_sample(const T1Series &series, const ParameterMaps &maps,
                                       const Mask &mask, std::size_t max_voxels) {
  series.validate();
  require(series.dims() == maps.dims, "scatter_sample: series and maps dims differ");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < maps.dims.count(); ++i) {
    if ((mask.empty() || mask[i]) && maps.valid[i]) candidates.push_back(i);
  }
  std::vector<ScatterRow> rows;
  const std::size_t n = std::min(max_voxels, candidates.size());
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = candidates[j * candidates.size() / n];
    for (std::size_t k = 0; k < series.size(); ++k) {
      rows.push_back({series.times[k].ms(), series.frames[k][i],
                      model_eval(maps.m0[i], maps.t1[i], series.times[k]), i});
    }
  }
  return rows;
}

Mask otsu_mask(const Volume3 &vol) {
  constexpr int kBins = 256;
  const auto v = vol.data();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Mask m(v.size(), 0);
  if (!(hi > lo)) return m;

  std::vector<double> hist(kBins, 0.0);
  auto bin = [&](double x) {
    return std::min(kBins - 1, static_cast<int>((x - lo) / (hi - lo) * kBins));
  };
  for (double x : v) hist[static_cast<std::size_t>(bin(x))] += 1.0;
  double total_mean = 0.0;
  for (int b = 0; b < kBins; ++b) total_mean += b * hist[static_cast<std::size_t>(b)];
  const double n = static_cast<double>(v.size());
  total_mean /= n;

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int threshold = 0;
  for (int b = 0; b < kBins - 1; ++b) {
    w0 += hist[static_cast<std::size_t>(b)] / n;
    sum0 += b * hist[static_cast<std::size_t>(b)] / n;
    const double w1 = 1.0 - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (total_mean - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = b;
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = bin(v[i]) > threshold ? 1 : 0;
  return m;
}

}  // namespace t1mc
