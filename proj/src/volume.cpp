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

#include "t1mc/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/parallel.hpp"
#include "volume_detail.hpp"

namespace t1mc {

namespace {

bool all_finite(const std::vector<double> &v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string dims_str(const Dims &d) {
  return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

}  // namespace

namespace detail {

AxisInterp axis_interp(double c, int n) {
  AxisInterp a;
  if (n == 1) {
    a.i0 = a.i1 = 0;
    a.f = 0.0;
    a.clamped = true;
    return a;
  }
  const double hi = static_cast<double>(n - 1);
  if (c < 0.0) {
    c = 0.0;
    a.clamped = true;
  } else if (c > hi) {
    c = hi;
    a.clamped = true;
  }
  int i0 = static_cast<int>(std::floor(c));
  if (i0 >= n - 1) i0 = n - 2;
  a.i0 = i0;
  a.i1 = i0 + 1;
  a.f = c - static_cast<double>(i0);
  return a;
}

double sample(const double *data, const Dims &d, double x, double y, double z) {
  const AxisInterp ax = axis_interp(x, d.nx);
  const AxisInterp ay = axis_interp(y, d.ny);
  const AxisInterp az = axis_interp(z, d.nz);
  const double wx[2] = {1.0 - ax.f, ax.f};
  const double wy[2] = {1.0 - ay.f, ay.f};
  const double wz[2] = {1.0 - az.f, az.f};
  const int xs[2] = {ax.i0, ax.i1};
  const int ys[2] = {ay.i0, ay.i1};
  const int zs[2] = {az.i0, az.i1};
  double acc = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      const double wjk = wy[j] * wz[k];
      const double *row = data + d.index(0, ys[j], zs[k]);
      acc += wjk * (wx[0] * row[xs[0]] + wx[1] * row[xs[1]]);
    }
  }
  return acc;
}

double sample_grad(const double *data, const Dims &d, double x, double y, double z,
                   std::array<double, 3> &grad) {
  const AxisInterp ax = axis_interp(x, d.nx);
  const AxisInterp ay = axis_interp(y, d.ny);
  const AxisInterp az = axis_interp(z, d.nz);
  const double wx[2] = {1.0 - ax.f, ax.f};
  const double wy[2] = {1.0 - ay.f, ay.f};
  const double wz[2] = {1.0 - az.f, az.f};
  const double dwx[2] = {ax.clamped ? 0.0 : -1.0, ax.clamped ? 0.0 : 1.0};
  const double dwy[2] = {ay.clamped ? 0.0 : -1.0, ay.clamped ? 0.0 : 1.0};
  const double dwz[2] = {az.clamped ? 0.0 : -1.0, az.clamped ? 0.0 : 1.0};
  const int ys[2] = {ay.i0, ay.i1};
  const int zs[2] = {az.i0, az.i1};
  double acc = 0.0;
  double gx = 0.0, gy = 0.0, gz = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      const double *row = data + d.index(0, ys[j], zs[k]);
      const double v0 = row[ax.i0];
      const double v1 = row[ax.i1];
      const double lerp = wx[0] * v0 + wx[1] * v1;
      acc += wy[j] * wz[k] * lerp;
      gx += wy[j] * wz[k] * (dwx[0] * v0 + dwx[1] * v1);
      gy += dwy[j] * wz[k] * lerp;
      gz += wy[j] * dwz[k] * lerp;
    }
  }
  grad = {gx, gy, gz};
  return acc;
}

}  // namespace detail

Volume3::Volume3(Dims dims, double fill) : dims_(dims) {
  require(dims.valid(), "volume dims must be positive, got " + dims_str(dims));
  require(std::isfinite(fill), "volume fill value must be finite");
  data_.assign(dims.count(), fill);
}

Volume3::Volume3(Dims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  require(dims.valid(), "volume dims must be positive, got " + dims_str(dims));
  require(data_.size() == dims.count(),
          "volume payload has " + std::to_string(data_.size()) + " values, dims " +
              dims_str(dims) + " need " + std::to_string(dims.count()));
  require(all_finite(data_), "volume holds non-finite intensities");
}

DisplacementField::DisplacementField(Dims dims) : dims_(dims) {
  require(dims.valid(), "field dims must be positive, got " + dims_str(dims));
  for (auto &c : comp_) c.assign(dims.count(), 0.0);
}

DisplacementField::DisplacementField(Dims dims, std::vector<double> ux, std::vector<double> uy,
                                     std::vector<double> uz)
    : dims_(dims), comp_{std::move(ux), std::move(uy), std::move(uz)} {
  require(dims.valid(), "field dims must be positive, got " + dims_str(dims));
  for (const auto &c : comp_) {
    require(c.size() == dims.count(), "field component length disagrees with dims " +
                                          dims_str(dims));
    require(all_finite(c), "field holds non-finite displacements");
  }
}

double trilinear_sample(const Volume3 &vol, Point3 p) {
  require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
          "sample point must be finite");
  return detail::sample(vol.data().data(), vol.dims(), p.x, p.y, p.z);
}

double trilinear_sample_grad(const Volume3 &vol, Point3 p, std::array<double, 3> &grad) {
  require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
          "sample point must be finite");
  return detail::sample_grad(vol.data().data(), vol.dims(), p.x, p.y, p.z, grad);
}

Volume3 warp(const Volume3 &vol, const DisplacementField &field) {
  require(vol.dims() == field.dims(), "warp: volume " + dims_str(vol.dims()) +
                                          " and field " + dims_str(field.dims()) +
                                          " dims differ");
  const Dims d = vol.dims();
  Volume3 out(d);
  const double *src = vol.data().data();
  const auto &ux = field.component(0);
  const auto &uy = field.component(1);
  const auto &uz = field.component(2);
  const std::size_t slices = static_cast<std::size_t>(d.nz);
  parallel_for(slices, [&](std::size_t zc) {
    const int z = static_cast<int>(zc);
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = d.index(x, y, z);
        out[i] = detail::sample(src, d, x + ux[i], y + uy[i], z + uz[i]);
      }
    }
  });
  return out;
}

Volume3 preprocess(const Volume3 &vol) {
  constexpr int kCrop = 256;
  constexpr int kOutZ = 8;
  const Dims d = vol.dims();
  require(d.nx >= kCrop && d.ny >= kCrop,
          "preprocess: in-plane size " + dims_str(d) + " is smaller than the 256x256 crop");
  require(d.nz <= kOutZ, "preprocess: " + std::to_string(d.nz) + " slices exceed 8");

  const int x0 = (d.nx - kCrop) / 2;
  const int y0 = (d.ny - kCrop) / 2;
  const int pad_before = (kOutZ - d.nz) / 2;
  Volume3 out(Dims{kCrop / 2, kCrop / 2, kOutZ});
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < kCrop / 2; ++y) {
      for (int x = 0; x < kCrop / 2; ++x) {
        const int sx = x0 + 2 * x;
        const int sy = y0 + 2 * y;
        const double s = vol.at(sx, sy, z) + vol.at(sx + 1, sy, z) + vol.at(sx, sy + 1, z) +
                         vol.at(sx + 1, sy + 1, z);
        out.at(x, y, z + pad_before) = 0.25 * s;
      }
    }
  }
  return out;
}

Volume3 downsample(const Volume3 &vol, std::array<int, 3> factors) {
  for (int f : factors) require(f == 1 || f == 2, "downsample factors must be 1 or 2");
  const Dims d = vol.dims();
  const Dims o{(d.nx + factors[0] - 1) / factors[0], (d.ny + factors[1] - 1) / factors[1],
               (d.nz + factors[2] - 1) / factors[2]};
  Volume3 out(o);
  for (int z = 0; z < o.nz; ++z) {
    for (int y = 0; y < o.ny; ++y) {
      for (int x = 0; x < o.nx; ++x) {
        double s = 0.0;
        int n = 0;
        for (int dz = 0; dz < factors[2]; ++dz) {
          const int sz = z * factors[2] + dz;
          if (sz >= d.nz) continue;
          for (int dy = 0; dy < factors[1]; ++dy) {
            const int sy = y * factors[1] + dy;
            if (sy >= d.ny) continue;
            for (int dx = 0; dx < factors[0]; ++dx) {
              const int sx = x * factors[0] + dx;
              if (sx >= d.nx) continue;
              s += vol.at(sx, sy, sz);
              ++n;
            }
          }
        }
        out.at(x, y, z) = s / n;
      }
    }
  }
  return out;
}

DisplacementField upsample_field(const DisplacementField &coarse, Dims fine,
                                 std::array<int, 3> factors) {
  DisplacementField out(fine);
  const Dims c = coarse.dims();
  auto coarse_coord = [](int p, int f) {
    return f == 1 ? static_cast<double>(p) : (p + 0.5) / f - 0.5;
  };
  for (int z = 0; z < fine.nz; ++z) {
    for (int y = 0; y < fine.ny; ++y) {
      for (int x = 0; x < fine.nx; ++x) {
        const double cx = coarse_coord(x, factors[0]);
        const double cy = coarse_coord(y, factors[1]);
        const double cz = coarse_coord(z, factors[2]);
        const std::size_t i = fine.index(x, y, z);
        for (int k = 0; k < 3; ++k) {
          out.component(k)[i] =
              factors[static_cast<std::size_t>(k)] *
              detail::sample(coarse.component(k).data(), c, cx, cy, cz);
        }
      }
    }
  }
  return out;
}

void gaussian_smooth(std::span<double> data, Dims dims, std::array<double, 3> sigma) {
  require(data.size() == dims.count(), "gaussian_smooth: payload/dims mismatch");
  const int extent[3] = {dims.nx, dims.ny, dims.nz};
  const std::size_t stride[3] = {1, static_cast<std::size_t>(dims.nx),
                                 static_cast<std::size_t>(dims.nx) * dims.ny};
  std::vector<double> line;
  std::vector<double> tmp;
  for (int axis = 0; axis < 3; ++axis) {
    const double s = sigma[static_cast<std::size_t>(axis)];
    if (s <= 0.0) continue;
    const int radius = static_cast<int>(std::ceil(3.0 * s));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const double w = std::exp(-0.5 * k * k / (s * s));
      kernel[static_cast<std::size_t>(k + radius)] = w;
      norm += w;
    }
    for (auto &w : kernel) w /= norm;

    const int n = extent[axis];
    line.resize(static_cast<std::size_t>(n));
    tmp.resize(static_cast<std::size_t>(n));
    const std::size_t st = stride[axis];
    // Iterate over every line along `axis`.
    for (std::size_t base = 0; base < data.size(); ++base) {
      const std::size_t coord = (base / st) % static_cast<std::size_t>(n);
      if (coord != 0) continue;
      for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = data[base + i * st];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int j = std::clamp(i + k, 0, n - 1);
          acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(j)];
        }
        tmp[static_cast<std::size_t>(i)] = acc;
      }
      for (int i = 0; i < n; ++i) data[base + i * st] = tmp[static_cast<std::size_t>(i)];
    }
  }
}

DisplacementField invert_field(const DisplacementField &field, int iterations) {
  const Dims d = field.dims();
  DisplacementField inv(d);
  DisplacementField next(d);
  for (int it = 0; it < iterations; ++it) {
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = d.index(x, y, z);
          const double px = x + inv.component(0)[i];
          const double py = y + inv.component(1)[i];
          const double pz = z + inv.component(2)[i];
          for (int k = 0; k < 3; ++k) {
            next.component(k)[i] = -detail::sample(field.component(k).data(), d, px, py, pz);
          }
        }
      }
    }
    std::swap(inv, next);
  }
  return inv;
}

}  // namespace t1mc
