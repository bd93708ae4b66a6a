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

#include <array>
#include <span>
#include <vector>

#include "t1mc/volume.hpp"

namespace t1mc {

enum class HistogramMode { Hard, Soft };

struct MIConfig {
  int bins = 32;
  std::array<int, 3> block{16, 16, 4};
  double parzen_sigma = 1.0;  // in bin widths
  double epsilon = 1e-10;     // pmf floor, soft mode only
  HistogramMode mode = HistogramMode::Soft;

  void validate() const;
};

/// Joint pmf p(a, b) stored row-major by the bin of `a`, with marginals
/// computed from it.
struct JointHistogram {
  int bins = 0;
  std::vector<double> joint;
  std::vector<double> pa;
  std::vector<double> pb;
  /// Hard-binned histograms have exact marginals and use an order-independent
  /// summation in mi().
  bool exact = false;

  double p(int a, int b) const {
    return joint[static_cast<std::size_t>(a) * static_cast<std::size_t>(bins) +
                 static_cast<std::size_t>(b)];
  }
  /// Builds marginals from an arbitrary normalized joint table.
  static JointHistogram from_joint(int bins, std::vector<double> joint);
};

/// Intensities must lie in [0, 1]. Hard mode uses B equal-width bins; soft
/// mode spreads each voxel over neighbouring bins with a Gaussian window of
/// parzen_sigma bin widths, tapered so its value and slope vanish at 3 sigma.
JointHistogram joint_histogram(std::span<const double> a, std::span<const double> b,
                               const MIConfig &cfg);
JointHistogram joint_histogram(const Volume3 &a, const Volume3 &b, const MIConfig &cfg);

/// Mutual information in nats, with 0 log 0 = 0.
double mi(const JointHistogram &h);

/// Negative mean MI over the cfg.block tiling; partial edge blocks are dropped.
/// Blocks where the fixed image is constant contribute exactly 0.
double local_mi_loss(const Volume3 &fixed, const Volume3 &warped, const MIConfig &cfg);

/// local_mi_loss plus its derivative with respect to every warped intensity
/// (zero for voxels outside the tiling). Soft mode only.
double local_mi_loss_gradient(const Volume3 &fixed, const Volume3 &warped, const MIConfig &cfg,
                              std::vector<double> &d_loss);

/// sqrt of the summed squared forward differences of all components along all
/// axes; the difference past the last voxel is zero.
double smoothness(const DisplacementField &field);

/// smoothness plus its gradient; the gradient of the norm at a constant field
/// is taken as zero.
double smoothness_gradient(const DisplacementField &field, DisplacementField &grad);

/// Mean squared difference over mask voxels (all voxels if the mask is empty).
double mse(const Volume3 &a, const Volume3 &b, const Mask &mask = {});

}  // namespace t1mc
