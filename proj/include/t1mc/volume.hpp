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
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace t1mc {

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(x);
  }
  friend bool operator==(const Dims &, const Dims &) = default;
};

/// Per-voxel flags; empty means "no mask" wherever a mask is optional.
using Mask = std::vector<std::uint8_t>;

/// One 3D scalar frame. Intensities are stored in double precision and
/// linearized x-fastest.
class Volume3 {
 public:
  Volume3() = default;
  explicit Volume3(Dims dims, double fill = 0.0);
  /// Throws if the payload length disagrees with dims or holds non-finite values.
  Volume3(Dims dims, std::vector<double> data);

  const Dims &dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double &at(int x, int y, int z) { return data_[dims_.index(x, y, z)]; }
  double at(int x, int y, int z) const { return data_[dims_.index(x, y, z)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double> &values() const { return data_; }

  friend bool operator==(const Volume3 &, const Volume3 &) = default;

 private:
  Dims dims_{};
  std::vector<double> data_;
};

/// Dense displacement u(p) in voxel units; the map is p -> p + u(p).
class DisplacementField {
 public:
  DisplacementField() = default;
  explicit DisplacementField(Dims dims);
  DisplacementField(Dims dims, std::vector<double> ux, std::vector<double> uy,
                    std::vector<double> uz);

  const Dims &dims() const { return dims_; }

  std::vector<double> &component(int c) { return comp_[static_cast<std::size_t>(c)]; }
  const std::vector<double> &component(int c) const {
    return comp_[static_cast<std::size_t>(c)];
  }
  std::array<double, 3> at(std::size_t i) const {
    return {comp_[0][i], comp_[1][i], comp_[2][i]};
  }

  friend bool operator==(const DisplacementField &, const DisplacementField &) = default;

 private:
  Dims dims_{};
  std::array<std::vector<double>, 3> comp_;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Trilinear interpolation with clamp-to-edge outside the grid.
double trilinear_sample(const Volume3 &vol, Point3 p);

/// Same sample, plus the spatial derivative of the interpolant. Along an axis
/// where the coordinate is clamped the derivative is zero; exactly on a grid
/// plane the forward cell is used.
double trilinear_sample_grad(const Volume3 &vol, Point3 p, std::array<double, 3> &grad);

/// out(p) = trilinear_sample(vol, p + u(p)).
Volume3 warp(const Volume3 &vol, const DisplacementField &field);

/// Center-crop to 256x256 in-plane, 2x2 block average to 128x128, then
/// zero-pad z to 8 slices (odd remainder goes to the far end).
Volume3 preprocess(const Volume3 &vol);

/// Block-average downsampling by a factor of 1 or 2 per axis. Output extent is
/// ceil(n / factor); a trailing odd voxel averages alone.
Volume3 downsample(const Volume3 &vol, std::array<int, 3> factors);

/// Resamples a coarse field onto `fine` dims, scaling each component by the
/// per-axis factor so displacements stay in fine voxel units.
DisplacementField upsample_field(const DisplacementField &coarse, Dims fine,
                                 std::array<int, 3> factors);

/// Separable Gaussian smoothing with replicate boundary; sigma per axis in
/// voxels (0 skips the axis).
void gaussian_smooth(std::span<double> data, Dims dims, std::array<double, 3> sigma);

/// Approximate inverse v with v(p) = -u(p + v(p)), by fixed-point iteration.
DisplacementField invert_field(const DisplacementField &field, int iterations = 50);

}  // namespace t1mc
