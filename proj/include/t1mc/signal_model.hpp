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

#pragma once

#include <span>
#include <vector>

#include "t1mc/series.hpp"
#include "t1mc/volume.hpp"

namespace t1mc {

/// I(t) = m0 * (1 - exp(-t / t1)); the infinite time point returns m0 exactly.
double model_eval(double m0, double t1, TimePoint t);
/// Same model at a raw time in ms; t = 0 is allowed here and +inf gives m0.
double model_eval(double m0, double t1, double t_ms);

struct VoxelFit {
  double m0 = 0.0;
  double t1 = 0.0;  // ms
  double r2 = 0.0;
  bool valid = false;
  int iterations = 0;
};

struct FitOptions {
  double t1_min = 1.0;
  double t1_max = 5000.0;
  double grid_lo = 50.0;
  double grid_hi = 3000.0;
  int grid_points = 16;
  int max_iterations = 200;
  double rel_tolerance = 1e-10;
  double initial_damping = 1e-3;
};

/// Levenberg-Marquardt fit of the two-parameter recovery model to one voxel's
/// samples. Samples are put in canonical (time, intensity) order first, so the
/// result does not depend on how the caller ordered them.
VoxelFit fit_voxel(std::span<const double> intensities, std::span<const TimePoint> times,
                   const FitOptions &opts = {});

struct RSquared {
  double value = 0.0;
  bool degenerate = false;  // observed signal has zero variance
};

/// 1 - SS_res / SS_tot.
RSquared r_squared(std::span<const double> observed, std::span<const double> predicted);

struct ParameterMaps {
  Dims dims{};
  Volume3 m0;
  Volume3 t1;
  Volume3 r2;
  Mask valid;
};

/// Independent per-voxel fits. Voxels outside a non-empty mask are left
/// invalid with zero parameters.
ParameterMaps fit_volume(const T1Series &series, const Mask &mask = {},
                         const FitOptions &opts = {});

struct R2Stats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Population statistics of the R^2 map over mask voxels (all voxels when the
/// mask is empty). Invalid voxels contribute their r2 of 0.
R2Stats r2_stats(const ParameterMaps &maps, const Mask &mask = {});

}  // namespace t1mc
