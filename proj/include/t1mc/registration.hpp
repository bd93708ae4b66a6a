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

#include "t1mc/metrics.hpp"
#include "t1mc/volume.hpp"

namespace t1mc {

struct RegistrationConfig {
  double lambda = 3e-3;
  MIConfig mi{};  // soft binning
  int max_iters = 200;      // per pyramid level
  double step = 0.5;        // largest per-voxel update, voxels
  double step_decay = 0.5;  // applied on a rejected step
  double step_growth = 1.2; // applied on an accepted step, capped at `step`
  double min_step = 1e-3;
  int pyramid_levels = 2;
  double tolerance = 1e-6;  // relative energy change
  /// Gaussian sigma (voxels of the current level) of the symmetric smoothing
  /// applied to the gradient before each step; 0 gives plain steepest descent.
  double gradient_sigma = 6.0;
  /// Gaussian sigma (voxels of the current level) applied to both images at
  /// every level before optimizing. Piecewise-constant images otherwise give
  /// an energy with flat steps between integer shifts.
  double image_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EnergyTerms {
  double total = 0.0;
  double s_term = 0.0;  // negative local MI
  double r_term = 0.0;  // smoothness of the field
};

/// S(fixed, moving o field) + lambda * R(field).
EnergyTerms energy(const Volume3 &fixed, const Volume3 &moving, const DisplacementField &field,
                   const RegistrationConfig &cfg);

/// Analytic gradient of the total energy with respect to every displacement
/// component. `terms`, when given, receives the energy at `field`.
DisplacementField energy_gradient(const Volume3 &fixed, const Volume3 &moving,
                                  const DisplacementField &field, const RegistrationConfig &cfg,
                                  EnergyTerms *terms = nullptr);

struct RegistrationResult {
  DisplacementField field;
  /// Energy after every accepted step, starting with the initial energy of
  /// each pyramid level (coarsest first); trace_level tags each entry.
  std::vector<double> energy_trace;
  std::vector<int> trace_level;
  double final_energy = 0.0;
  double final_mi = 0.0;  // mean block MI, so s_term = -final_mi
  double final_reg = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Coarse-to-fine descent on a dense displacement field so that
/// warp(moving, field) matches fixed.
RegistrationResult register_pair(const Volume3 &fixed, const Volume3 &moving,
                                 const RegistrationConfig &cfg);

/// True when every level's segment of the trace is non-increasing.
bool trace_is_monotone(const RegistrationResult &r);

}  // namespace t1mc
