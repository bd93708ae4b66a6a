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

#include "t1mc/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/parallel.hpp"

namespace t1mc {

double model_eval(double m0, double t1, TimePoint t) {
  require(t1 > 0.0 && std::isfinite(t1), "model_eval: t1 must be positive");
  if (t.is_infinite()) return m0;
  return m0 * (1.0 - std::exp(-t.ms() / t1));
}

double model_eval(double m0, double t1, double t_ms) {
  require(t1 > 0.0 && std::isfinite(t1), "model_eval: t1 must be positive");
  require(t_ms >= 0.0, "model_eval: time must be >= 0");
  if (std::isinf(t_ms)) return m0;
  return m0 * (1.0 - std::exp(-t_ms / t1));
}

namespace {

struct Sample {
  double t;  // ms, +inf allowed
  double y;
};

double sse_at(const std::vector<Sample> &s, double m0, double t1) {
  double acc = 0.0;
  for (const auto &p : s) {
    const double g = std::isinf(p.t) ? 1.0 : 1.0 - std::exp(-p.t / t1);
    const double r = p.y - m0 * g;
    acc += r * r;
  }
  return acc;
}

}  // namespace

VoxelFit fit_voxel(std::span<const double> intensities, std::span<const TimePoint> times,
                   const FitOptions &opts) {
  require(intensities.size() == times.size(), "fit_voxel: intensities and times differ in length");
  require(intensities.size() >= 3, "fit_voxel: at least 3 samples are required");

  std::vector<Sample> s;
  s.reserve(intensities.size());
  std::set<double> distinct_finite;
  int n_inf = 0;
  for (std::size_t k = 0; k < intensities.size(); ++k) {
    require(std::isfinite(intensities[k]), "fit_voxel: non-finite intensity");
    if (times[k].is_infinite()) {
      ++n_inf;
    } else {
      require(times[k].ms() > 0.0, "fit_voxel: time points must be positive");
      distinct_finite.insert(times[k].ms());
    }
    s.push_back({times[k].ms(), intensities[k]});
  }
  require(n_inf <= 1, "fit_voxel: at most one infinite time point");
  require(distinct_finite.size() >= 3 || (distinct_finite.size() >= 2 && n_inf == 1),
          "fit_voxel: need 3 distinct finite times, or 2 plus the infinite time");

  std::sort(s.begin(), s.end(), [](const Sample &a, const Sample &b) {
    return a.t != b.t ? a.t < b.t : a.y < b.y;
  });

  VoxelFit fit;
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  double scale = 0.0;
  for (const auto &p : s) {
    mean += p.y;
    scale = std::max(scale, std::abs(p.y));
  }
  mean /= n;
  double ss_tot = 0.0;
  for (const auto &p : s) ss_tot += (p.y - mean) * (p.y - mean);
  if (ss_tot <= n * (1e-12 * scale) * (1e-12 * scale)) return fit;  // constant signal

  double m0 = s.back().y;  // infinite sample sorts last when present
  if (n_inf == 0) {
    m0 = std::max_element(s.begin(), s.end(), [](const Sample &a, const Sample &b) {
           return a.y < b.y;
         })->y;
  }
  m0 = std::max(m0, 0.0);

  double t1 = opts.grid_lo;
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < opts.grid_points; ++g) {
    const double frac = opts.grid_points > 1 ? static_cast<double>(g) / (opts.grid_points - 1) : 0.0;
    const double cand = opts.grid_lo * std::pow(opts.grid_hi / opts.grid_lo, frac);
    const double e = sse_at(s, m0, cand);
    if (e < best) {
      best = e;
      t1 = cand;
    }
  }

  double sse = best;
  double mu = opts.initial_damping;
  int it = 0;
  for (; it < opts.max_iterations && sse > 0.0; ++it) {
    // Normal equations of the linearized residual r = y - m0 * g(t; t1).
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (const auto &p : s) {
      double g = 1.0, dg = 0.0;
      if (!std::isinf(p.t)) {
        const double e = std::exp(-p.t / t1);
        g = 1.0 - e;
        dg = -p.t * e / (t1 * t1);
      }
      const double j0 = g;
      const double j1 = m0 * dg;
      const double r = p.y - m0 * g;
      a00 += j0 * j0;
      a01 += j0 * j1;
      a11 += j1 * j1;
      b0 += j0 * r;
      b1 += j1 * r;
    }
    const double d0 = std::max(a00, 1e-300);
    const double d1 = std::max(a11, 1e-300);
    const double h00 = a00 + mu * d0;
    const double h11 = a11 + mu * d1;
    const double det = h00 * h11 - a01 * a01;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
      mu *= 10.0;
      if (mu > 1e16) break;
      continue;
    }
    const double step0 = (h11 * b0 - a01 * b1) / det;
    const double step1 = (h00 * b1 - a01 * b0) / det;
    const double m0_new = std::max(0.0, m0 + step0);
    const double t1_new = std::clamp(t1 + step1, opts.t1_min, opts.t1_max);
    const double sse_new = sse_at(s, m0_new, t1_new);
    if (std::isfinite(sse_new) && sse_new <= sse) {
      const double rel = (sse - sse_new) / sse;
      m0 = m0_new;
      t1 = t1_new;
      sse = sse_new;
      mu = std::max(mu * 0.1, 1e-12);
      if (rel < opts.rel_tolerance) {
        ++it;
        break;
      }
    } else {
      mu *= 10.0;
      if (mu > 1e16) {
        ++it;
        break;
      }
    }
  }

  fit.m0 = m0;
  fit.t1 = t1;
  fit.iterations = it;
  fit.valid = t1 > opts.t1_min && t1 < opts.t1_max;
  fit.r2 = fit.valid ? 1.0 - sse / ss_tot : 0.0;
  return fit;
}

RSquared r_squared(std::span<const double> observed, std::span<const double> predicted) {
  require(observed.size() == predicted.size(), "r_squared: length mismatch");
  require(observed.size() >= 2, "r_squared: need at least 2 samples");
  const double mean =
      std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) return {0.0, true};
  return {1.0 - ss_res / ss_tot, false};
}

ParameterMaps fit_volume(const T1Series &series, const Mask &mask, const FitOptions &opts) {
  series.validate();
  const Dims d = series.dims();
  require(mask.empty() || mask.size() == d.count(), "fit_volume: mask size disagrees with dims");

  ParameterMaps maps;
  maps.dims = d;
  maps.m0 = Volume3(d);
  maps.t1 = Volume3(d);
  maps.r2 = Volume3(d);
  maps.valid.assign(d.count(), 0);

  constexpr std::size_t kGrain = 2048;
  const std::size_t n = d.count();
  const std::size_t frames = series.size();
  parallel_for(chunk_count(n, kGrain), [&](std::size_t c) {
    const auto r = chunk_at(n, kGrain, c);
    std::vector<double> y(frames);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (!mask.empty() && mask[i] == 0) continue;
      for (std::size_t k = 0; k < frames; ++k) y[k] = series.frames[k][i];
      const VoxelFit f = fit_voxel(y, series.times, opts);
      maps.m0[i] = f.m0;
      maps.t1[i] = f.t1;
      maps.r2[i] = f.r2;
      maps.valid[i] = f.valid ? 1 : 0;
    }
  });
  return maps;
}

R2Stats r2_stats(const ParameterMaps &maps, const Mask &mask) {
  require(mask.empty() || mask.size() == maps.dims.count(), "r2_stats: mask size disagrees with dims");
  R2Stats st;
  double sum = 0.0;
  for (std::size_t i = 0; i < maps.r2.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    sum += maps.r2[i];
    ++st.count;
  }
  if (st.count == 0) return st;
  st.mean = sum / static_cast<double>(st.count);
  double var = 0.0;
  for (std::size_t i = 0; i < maps.r2.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    var += (maps.r2[i] - st.mean) * (maps.r2[i] - st.mean);
  }
  st.stddev = std::sqrt(var / static_cast<double>(st.count));
  return st;
}

}  // namespace t1mc
