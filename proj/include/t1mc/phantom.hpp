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

#include <cstdint>
#include <vector>

#include "t1mc/series.hpp"
#include "t1mc/volume.hpp"

namespace t1mc {

/// Synthetic short-axis phantom: a blood-pool disk inside a myocardial ring,
/// over background, identical on every slice. Tissue values are plausible
/// defaults, not measured truth.
struct PhantomSpec {
  Dims dims{128, 128, 8};
  double blood_t1 = 1600.0;
  double myo_t1 = 1100.0;
  double background_t1 = 300.0;
  double blood_m0 = 1.0;
  double myo_m0 = 0.7;
  double background_m0 = 2.0;
  double inner_radius = 9.0;   // voxels
  double outer_radius = 14.0;  // voxels
  double noise_sigma = 0.01;
  double motion_amplitude = 4.0;   // voxels
  double motion_smoothness = 8.0;  // Gaussian sigma, voxels
  double ti1 = 135.0;              // ms
  double ti2 = 350.0;              // ms
  double rr = 1000.0;              // ms
  std::uint64_t seed = 42;

  void validate() const;
};

struct GroundTruth {
  Volume3 m0;
  Volume3 t1;
  Mask mask;  // blood pool and myocardium
  /// Per-timepoint motion fields as applied by apply_motion (empty until then).
  std::vector<DisplacementField> fields;
  /// Largest forward difference over all motion fields.
  double gradient_bound = 0.0;
};

/// (ti1, ti1+rr, ..., ti1+4rr, ti2, ..., ti2+4rr, infinity).
std::vector<TimePoint> inversion_schedule(double ti1, double ti2, double rr);

GroundTruth make_phantom(const PhantomSpec &spec);

/// Noise-free frames following the recovery model voxel-wise. Intensities are
/// rounded to float32 so series survive a save/load round trip unchanged.
T1Series synth_series(const GroundTruth &gt, const std::vector<TimePoint> &schedule);

struct MotionResult {
  T1Series series;
  std::vector<DisplacementField> fields;  // fields[0] is zero
  double gradient_bound = 0.0;
};

/// Warps every frame after the first by an independent smooth random in-plane
/// field plus a sinusoidal respiratory drift, then adds Gaussian noise to all
/// frames. All randomness comes from spec.seed.
MotionResult apply_motion(const T1Series &series, const PhantomSpec &spec);

/// Largest absolute forward difference of any component along any axis.
double max_forward_difference(const DisplacementField &field);

}  // namespace t1mc
