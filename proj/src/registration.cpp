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

#include "t1mc/registration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/parallel.hpp"
#include "metrics_detail.hpp"
#include "volume_detail.hpp"

namespace t1mc {

void RegistrationConfig::validate() const {
  require(lambda >= 0.0, "registration: lambda must be >= 0");
  require(max_iters >= 1, "registration: max_iters must be >= 1");
  require(step > 0.0, "registration: step must be > 0");
  require(step_decay > 0.0 && step_decay < 1.0, "registration: step_decay must be in (0, 1)");
  require(step_growth >= 1.0, "registration: step_growth must be >= 1");
  require(min_step > 0.0, "registration: min_step must be > 0");
  require(pyramid_levels >= 1, "registration: pyramid_levels must be >= 1");
  require(tolerance >= 0.0, "registration: tolerance must be >= 0");
  require(gradient_sigma >= 0.0, "registration: gradient_sigma must be >= 0");
  require(image_sigma >= 0.0, "registration: image_sigma must be >= 0");
  mi.validate();
}

namespace {

void check_pair(const Volume3 &fixed, const Volume3 &moving, const DisplacementField &field) {
  require(fixed.dims() == moving.dims(), "registration: fixed and moving dims differ");
  require(fixed.dims() == field.dims(), "registration: field dims differ from the images");
}

// Warped image and the spatial gradient of the interpolant at every sample.
Volume3 warp_with_gradient(const Volume3 &moving, const DisplacementField &field,
                           std::array<std::vector<double>, 3> &grad) {
  const Dims d = moving.dims();
  Volume3 out(d);
  for (auto &g : grad) g.assign(d.count(), 0.0);
  const double *src = moving.data().data();
  const auto &ux = field.component(0);
  const auto &uy = field.component(1);
  const auto &uz = field.component(2);
  parallel_for(static_cast<std::size_t>(d.nz), [&](std::size_t zc) {
    const int z = static_cast<int>(zc);
    std::array<double, 3> g{};
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = d.index(x, y, z);
        out[i] = detail::sample_grad(src, d, x + ux[i], y + uy[i], z + uz[i], g);
        grad[0][i] = g[0];
        grad[1][i] = g[1];
        grad[2][i] = g[2];
      }
    }
  });
  return out;
}

// Truncated Gaussian convolution with zero boundary. Unlike replicate padding
// this operator is symmetric positive definite, so the smoothed gradient stays
// a descent direction.
void smooth_symmetric(std::vector<double> &data, Dims dims, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    norm += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (auto &w : kernel) w /= norm;
  const double *kc = kernel.data() + radius;  // kc[k] for k in [-radius, radius]

  const std::size_t nx = static_cast<std::size_t>(dims.nx);
  const std::size_t plane = nx * static_cast<std::size_t>(dims.ny);
  std::vector<double> tmp(data.size());

  // x: shifted row accumulation, contiguous in memory.
  if (dims.nx > 1) {
    const int n = dims.nx;
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (std::size_t row = 0; row < data.size(); row += nx) {
      const double *in = data.data() + row;
      double *out = tmp.data() + row;
      for (int k = -radius; k <= radius; ++k) {
        const double w = kc[k];
        const int lo = std::max(0, -k);
        const int hi = std::min(n, n - k);
        for (int i = lo; i < hi; ++i) out[i] += w * in[i + k];
      }
    }
    data.swap(tmp);
  }

  // y and z: accumulate whole rows, which keeps the inner loop contiguous.
  auto along = [&](int n, std::size_t stride, std::size_t outer_count, std::size_t outer_stride) {
    if (n <= 1) return;
    for (std::size_t o = 0; o < outer_count; ++o) {
      const std::size_t base = o * outer_stride;
      for (int i = 0; i < n; ++i) {
        double *out = tmp.data() + base + static_cast<std::size_t>(i) * stride;
        std::fill(out, out + nx, 0.0);
        const int lo = std::max(-radius, -i);
        const int hi = std::min(radius, n - 1 - i);
        for (int k = lo; k <= hi; ++k) {
          const double w = kc[k];
          const double *in = data.data() + base + static_cast<std::size_t>(i + k) * stride;
          for (std::size_t x = 0; x < nx; ++x) out[x] += w * in[x];
        }
      }
    }
    data.swap(tmp);
  };
  along(dims.ny, nx, static_cast<std::size_t>(dims.nz), plane);
  along(dims.nz, plane, static_cast<std::size_t>(dims.ny), nx);
}

void check_finite(const EnergyTerms &e) {
  if (!std::isfinite(e.total) || !std::isfinite(e.s_term) || !std::isfinite(e.r_term)) {
    fail(ErrorKind::Numerical, "registration: non-finite energy (S=" + std::to_string(e.s_term) +
                                   ", R=" + std::to_string(e.r_term) + ")");
  }
}

struct Level {
  Volume3 fixed;
  Volume3 moving;
  std::array<int, 3> factors{1, 1, 1};  // relative to the next finer level
};

std::vector<Level> build_pyramid(const Volume3 &fixed, const Volume3 &moving,
                                 const RegistrationConfig &cfg) {
  std::vector<Level> levels;
  levels.push_back({fixed, moving, {1, 1, 1}});
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    const Dims d = levels.back().fixed.dims();
    const int n[3] = {d.nx, d.ny, d.nz};
    std::array<int, 3> f{1, 1, 1};
    bool any = false;
    for (int a = 0; a < 3; ++a) {
      // Halve an axis only while the MI tiling still fits along it.
      if ((n[a] + 1) / 2 >= cfg.mi.block[static_cast<std::size_t>(a)]) {
        f[static_cast<std::size_t>(a)] = 2;
        any = true;
      }
    }
    if (!any) break;
    levels.push_back({downsample(levels.back().fixed, f), downsample(levels.back().moving, f), f});
  }
  if (cfg.image_sigma > 0.0) {
    const double s = cfg.image_sigma;
    for (auto &lv : levels) {
      gaussian_smooth(lv.fixed.data(), lv.fixed.dims(), {s, s, s});
      gaussian_smooth(lv.moving.data(), lv.moving.dims(), {s, s, s});
    }
  }
  return levels;
}

}  // namespace

namespace {

EnergyTerms energy_impl(const detail::LocalMI &sim, const Volume3 &moving,
                        const DisplacementField &field, double lambda) {
  const Volume3 warped = warp(moving, field);
  EnergyTerms e;
  e.s_term = sim.loss(warped, nullptr);
  e.r_term = smoothness(field);
  e.total = e.s_term + lambda * e.r_term;
  return e;
}

DisplacementField gradient_impl(const detail::LocalMI &sim, const Volume3 &moving,
                                const DisplacementField &field, double lambda,
                                EnergyTerms *terms) {
  std::array<std::vector<double>, 3> dw;
  const Volume3 warped = warp_with_gradient(moving, field, dw);
  std::vector<double> d_s;
  const double s = sim.loss(warped, &d_s);
  DisplacementField grad(field.dims());
  const double r = smoothness_gradient(field, grad);
  for (int c = 0; c < 3; ++c) {
    auto &g = grad.component(c);
    const auto &dwc = dw[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = lambda * g[i] + d_s[i] * dwc[i];
  }
  if (terms != nullptr) {
    terms->s_term = s;
    terms->r_term = r;
    terms->total = s + lambda * r;
  }
  return grad;
}

}  // namespace

EnergyTerms energy(const Volume3 &fixed, const Volume3 &moving, const DisplacementField &field,
                   const RegistrationConfig &cfg) {
  check_pair(fixed, moving, field);
  return energy_impl(detail::LocalMI(fixed, cfg.mi), moving, field, cfg.lambda);
}

DisplacementField energy_gradient(const Volume3 &fixed, const Volume3 &moving,
                                  const DisplacementField &field, const RegistrationConfig &cfg,
                                  EnergyTerms *terms) {
  check_pair(fixed, moving, field);
  if (cfg.mi.mode != HistogramMode::Soft) {
    fail(ErrorKind::InvalidArgument, "energy_gradient: hard-binned MI is not differentiable");
  }
  return gradient_impl(detail::LocalMI(fixed, cfg.mi), moving, field, cfg.lambda, terms);
}

RegistrationResult register_pair(const Volume3 &fixed, const Volume3 &moving,
                                 const RegistrationConfig &cfg) {
  cfg.validate();
  require(fixed.dims() == moving.dims(), "register_pair: fixed and moving dims differ");
  if (cfg.mi.mode != HistogramMode::Soft) {
    fail(ErrorKind::InvalidArgument, "register_pair: optimization needs soft-binned MI");
  }

  const std::vector<Level> levels = build_pyramid(fixed, moving, cfg);
  RegistrationResult res;
  DisplacementField u(levels.back().fixed.dims());
  bool converged_all = true;

  for (int l = static_cast<int>(levels.size()) - 1; l >= 0; --l) {
    const Level &lv = levels[static_cast<std::size_t>(l)];
    if (u.dims() != lv.fixed.dims()) {
      u = upsample_field(u, lv.fixed.dims(), levels[static_cast<std::size_t>(l) + 1].factors);
    }

    const detail::LocalMI sim(lv.fixed, cfg.mi);
    EnergyTerms e = energy_impl(sim, lv.moving, u, cfg.lambda);
    check_finite(e);
    res.energy_trace.push_back(e.total);
    res.trace_level.push_back(l);

    double step = cfg.step;
    bool converged = false;
    for (int it = 0; it < cfg.max_iters && !converged; ++it) {
      ++res.iterations;
      DisplacementField dir = gradient_impl(sim, lv.moving, u, cfg.lambda, nullptr);
      for (int c = 0; c < 3; ++c) smooth_symmetric(dir.component(c), dir.dims(), cfg.gradient_sigma);
      double peak = 0.0;
      for (std::size_t i = 0; i < dir.dims().count(); ++i) {
        const auto v = dir.at(i);
        peak = std::max(peak, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
      }
      if (!(peak > 0.0)) {
        converged = true;
        break;
      }

      for (;;) {
        DisplacementField trial = u;
        const double scale = step / peak;
        for (int c = 0; c < 3; ++c) {
          auto &t = trial.component(c);
          const auto &g = dir.component(c);
          for (std::size_t i = 0; i < t.size(); ++i) t[i] -= scale * g[i];
        }
        const EnergyTerms et = energy_impl(sim, lv.moving, trial, cfg.lambda);
        check_finite(et);
        if (et.total <= e.total) {
          const double rel = (e.total - et.total) / std::max(std::abs(e.total), 1e-300);
          u = std::move(trial);
          e = et;
          res.energy_trace.push_back(e.total);
          res.trace_level.push_back(l);
          step = std::min(step * cfg.step_growth, cfg.step);
          if (rel < cfg.tolerance) converged = true;
          break;
        }
        step *= cfg.step_decay;
        if (step < cfg.min_step) {
          converged = true;
          break;
        }
      }
    }
    converged_all = converged_all && converged;
  }

  const EnergyTerms fin = energy(fixed, moving, u, cfg);
  res.field = std::move(u);
  res.final_mi = -fin.s_term;
  res.final_reg = fin.r_term;
  res.final_energy = fin.total;
  res.converged = converged_all;
  return res;
}

bool trace_is_monotone(const RegistrationResult &r) {
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) {
    if (r.trace_level[i] == r.trace_level[i - 1] && r.energy_trace[i] > r.energy_trace[i - 1]) {
      return false;
    }
  }
  return true;
}

}  // namespace t1mc
