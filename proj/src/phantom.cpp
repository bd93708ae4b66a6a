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

#include "t1mc/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/signal_model.hpp"

namespace t1mc {

namespace {

// Respiratory drift period, in frames (about four heartbeats per breath).
constexpr double kDriftPeriodFrames = 4.5;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void PhantomSpec::validate() const {
  require(dims.valid(), "phantom dims must be positive");
  require(inner_radius > 0.0 && inner_radius < outer_radius,
          "phantom radii must satisfy 0 < inner < outer");
  require(noise_sigma >= 0.0, "phantom noise_sigma must be >= 0");
  require(motion_amplitude >= 0.0, "phantom motion_amplitude must be >= 0");
  require(motion_smoothness > 0.0, "phantom motion_smoothness must be > 0");
  require(blood_t1 > 0.0 && myo_t1 > 0.0 && background_t1 > 0.0, "phantom T1 values must be > 0");
  require(blood_m0 >= 0.0 && myo_m0 >= 0.0 && background_m0 >= 0.0, "phantom M0 values must be >= 0");
  require(ti1 > 0.0 && ti2 > 0.0 && rr > 0.0, "phantom TI1, TI2 and RR must be > 0");
}

std::vector<TimePoint> inversion_schedule(double ti1, double ti2, double rr) {
  require(ti1 > 0.0 && ti2 > 0.0 && rr > 0.0, "inversion_schedule: inputs must be positive");
  std::vector<TimePoint> s;
  s.reserve(11);
  for (double ti : {ti1, ti2}) {
    for (int k = 0; k < 5; ++k) s.push_back(TimePoint::at(ti + k * rr));
  }
  s.push_back(TimePoint::infinite());
  return s;
}

GroundTruth make_phantom(const PhantomSpec &spec) {
  spec.validate();
  const Dims d = spec.dims;
  const double half_extent = 0.5 * std::min(d.nx, d.ny);
  require(spec.outer_radius <= half_extent,
          "phantom outer radius " + std::to_string(spec.outer_radius) +
              " exceeds the in-plane half extent " + std::to_string(half_extent));

  GroundTruth gt;
  gt.m0 = Volume3(d);
  gt.t1 = Volume3(d);
  gt.mask.assign(d.count(), 0);
  const double cx = 0.5 * (d.nx - 1);
  const double cy = 0.5 * (d.ny - 1);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const double r = std::hypot(x - cx, y - cy);
        const std::size_t i = d.index(x, y, z);
        if (r < spec.inner_radius) {
          gt.m0[i] = to_f32(spec.blood_m0);
          gt.t1[i] = spec.blood_t1;
          gt.mask[i] = 1;
        } else if (r < spec.outer_radius) {
          gt.m0[i] = to_f32(spec.myo_m0);
          gt.t1[i] = spec.myo_t1;
          gt.mask[i] = 1;
        } else {
          gt.m0[i] = to_f32(spec.background_m0);
          gt.t1[i] = spec.background_t1;
        }
      }
    }
  }
  return gt;
}

T1Series synth_series(const GroundTruth &gt, const std::vector<TimePoint> &schedule) {
  require(!schedule.empty(), "synth_series: empty schedule");
  validate_times(schedule);
  T1Series s;
  s.times = schedule;
  for (const auto &t : schedule) {
    Volume3 f(gt.m0.dims());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = t.is_infinite() ? gt.m0[i] : to_f32(model_eval(gt.m0[i], gt.t1[i], t));
    }
    s.frames.push_back(std::move(f));
  }
  return s;
}

double max_forward_difference(const DisplacementField &field) {
  const Dims d = field.dims();
  double m = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto &u = field.component(c);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const double v = u[d.index(x, y, z)];
          if (x + 1 < d.nx) m = std::max(m, std::abs(u[d.index(x + 1, y, z)] - v));
          if (y + 1 < d.ny) m = std::max(m, std::abs(u[d.index(x, y + 1, z)] - v));
          if (z + 1 < d.nz) m = std::max(m, std::abs(u[d.index(x, y, z + 1)] - v));
        }
      }
    }
  }
  return m;
}

MotionResult apply_motion(const T1Series &series, const PhantomSpec &spec) {
  spec.validate();
  series.validate();
  const Dims d = series.dims();
  const std::size_t n = d.count();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double drift_angle = angle(rng);

  MotionResult out;
  out.series.times = series.times;
  out.series.provenance = series.provenance;
  for (std::size_t k = 0; k < series.size(); ++k) {
    DisplacementField field(d);
    if (k > 0) {
      // Through-plane motion is not modeled: uz stays zero.
      auto &ux = field.component(0);
      auto &uy = field.component(1);
      for (std::size_t i = 0; i < n; ++i) {
        ux[i] = gauss(rng);
        uy[i] = gauss(rng);
      }
      const double s = spec.motion_smoothness;
      gaussian_smooth(ux, d, {s, s, s});
      gaussian_smooth(uy, d, {s, s, s});
      double peak = 0.0;
      for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::hypot(ux[i], uy[i]));
      const double scale = peak > 0.0 ? spec.motion_amplitude / peak : 0.0;
      const double drift = 0.5 * spec.motion_amplitude *
                           std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / kDriftPeriodFrames);
      const double dx = drift * std::cos(drift_angle);
      const double dy = drift * std::sin(drift_angle);
      for (std::size_t i = 0; i < n; ++i) {
        ux[i] = ux[i] * scale + dx;
        uy[i] = uy[i] * scale + dy;
      }
      out.gradient_bound = std::max(out.gradient_bound, max_forward_difference(field));
    }

    Volume3 moved = k > 0 ? warp(series.frames[k], field) : series.frames[k];
    if (spec.noise_sigma > 0.0) {
      for (std::size_t i = 0; i < n; ++i) moved[i] += spec.noise_sigma * gauss(rng);
    }
    for (std::size_t i = 0; i < n; ++i) moved[i] = to_f32(moved[i]);
    out.series.frames.push_back(std::move(moved));
    out.fields.push_back(std::move(field));
  }

  if (out.gradient_bound > spec.motion_amplitude + 1e-12) {
    fail(ErrorKind::Numerical, "apply_motion: generated field violates the smoothness bound");
  }
  return out;
}

}  // namespace t1mc
