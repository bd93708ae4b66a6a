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

#include <optional>
#include <string>
#include <vector>

#include "t1mc/registration.hpp"
#include "t1mc/series.hpp"
#include "t1mc/signal_model.hpp"

namespace t1mc {

enum class Strategy { Cascade, Anchor };

std::string to_string(Strategy s);
/// Accepts "cascade" or "anchor".
Strategy parse_strategy(const std::string &name);

struct PairSummary {
  std::size_t moving_index = 0;
  /// Input frame used as fixed image; for cascade pairs after the first the
  /// fixed image is the corrected version of this frame.
  std::size_t fixed_index = 0;
  double final_energy = 0.0;
  double final_mi = 0.0;
  double final_reg = 0.0;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
  std::vector<double> energy_trace;
  std::vector<int> trace_level;
};

struct SeriesCorrectionResult {
  T1Series corrected;
  std::vector<DisplacementField> fields;  // fields[k] belongs to input frame k + 1
  std::vector<PairSummary> pairs;
  Strategy strategy = Strategy::Cascade;
};

/// Cascade: frame k is registered to the corrected frame k - 1, frame 1 to
/// frame 0. Anchor: every frame is registered to frame 0. Each input frame is
/// warped once by its own field; frame 0 is copied unchanged.
SeriesCorrectionResult register_series(const T1Series &series, const RegistrationConfig &cfg,
                                       Strategy strategy);

/// Warps frames 1..N-1 of `series` by the matching fields; frame 0 is copied.
T1Series apply_fields(const T1Series &series, const std::vector<DisplacementField> &fields);

struct MseCurves {
  std::size_t reference = 0;
  std::vector<std::size_t> index;  // every frame except the reference
  std::vector<double> before;
  std::vector<double> after;
  /// First index where the corrected curve is no longer below the uncorrected one.
  std::optional<std::size_t> crossover;
};

MseCurves mse_over_time(std::size_t reference, const T1Series &before, const T1Series &after,
                        const Mask &mask = {});

struct R2Report {
  R2Stats before_mask, before_all;
  R2Stats after_mask, after_all;
};

R2Report r2_report(const ParameterMaps &before, const ParameterMaps &after, const Mask &mask);

struct ScatterRow {
  double time_ms = 0.0;  // +inf for the infinite frame
  double observed = 0.0;
  double fitted = 0.0;
  std::size_t voxel_id = 0;
};

/// Observed vs model intensities for up to `max_voxels` valid mask voxels,
/// spread evenly over the mask in index order.
std::vector<ScatterRow> scatter_sample(const T1Series &series, const ParameterMaps &maps,
                                       const Mask &mask, std::size_t max_voxels = 2000);

/// Foreground by Otsu's threshold on a 256-bin histogram of `vol`.
Mask otsu_mask(const Volume3 &vol);

}  // namespace t1mc
