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

#include "t1mc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "t1mc/error.hpp"
#include "t1mc/parallel.hpp"
#include "metrics_detail.hpp"

namespace t1mc {

namespace {

constexpr double kRangeSlack = 1e-9;
const double kTail = std::exp(-4.5);  // Gaussian value at 3 sigma

// Parzen window: a Gaussian minus its first-order Taylor expansion (in d^2) at
// 3 sigma, so it is non-negative and both value and slope vanish at |d| = 3 sigma.

void check_unit_range(std::span<const double> v, const char *who) {
  for (double x : v) {
    if (!(x >= -kRangeSlack && x <= 1.0 + kRangeSlack)) {
      fail(ErrorKind::InvalidArgument,
           std::string(who) + ": intensity " + std::to_string(x) + " outside [0, 1]");
    }
  }
}

inline int hard_bin(double v, int bins) {
  const int b = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * bins));
  return std::min(b, bins - 1);
}

struct Window {
  int lo = 0;
  int count = 0;
};

// Soft-binning window of one intensity: bins [lo, lo + count) with weights
// (and optionally slopes with respect to the intensity-scaled bin coordinate).
// The Gaussian factors along the window follow
// g(d0 - k) = g(d0) * exp(k d0 / s^2) * exp(-k^2 / 2s^2), so only two exp calls
// are needed per window.
inline Window soft_window(double v, const MIConfig &cfg, const double *decay, double *w,
                          double *dw) {
  const double sigma = cfg.parzen_sigma;
  const double x = std::clamp(v, 0.0, 1.0) * cfg.bins - 0.5;
  const double reach = 3.0 * sigma;
  const int lo = std::max(0, static_cast<int>(std::ceil(x - reach)));
  const int hi = std::min(cfg.bins - 1, static_cast<int>(std::floor(x + reach)));
  Window win{lo, std::max(0, hi - lo + 1)};
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double d0 = x - lo;
  double g = std::exp(-0.5 * d0 * d0 * inv_s2);
  const double ratio = std::exp(d0 * inv_s2);
  double growth = 1.0;
  for (int k = 0; k < win.count; ++k) {
    const double d = d0 - k;
    const double u2 = d * d * inv_s2;
    const double gk = g * growth * decay[k];
    growth *= ratio;
    if (u2 >= 9.0) {
      w[k] = 0.0;
      if (dw != nullptr) dw[k] = 0.0;
      continue;
    }
    w[k] = gk - kTail * (5.5 - 0.5 * u2);
    if (dw != nullptr) dw[k] = d * inv_s2 * (kTail - gk);
  }
  return win;
}

int window_capacity(const MIConfig &cfg) {
  return static_cast<int>(std::ceil(6.0 * cfg.parzen_sigma)) + 2;
}

// MI of a normalized table with given marginals, plain summation order. When
// `log_q` is non-null it receives log q for every cell (0 for empty cells).
double mi_plain(int bins, const std::vector<double> &q, const std::vector<double> &qa,
                const std::vector<double> &qb, double *log_q = nullptr) {
  std::vector<double> lb(static_cast<std::size_t>(bins));
  for (int l = 0; l < bins; ++l) lb[l] = qb[l] > 0.0 ? std::log(qb[l]) : 0.0;
  double acc = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double *row = q.data() + static_cast<std::size_t>(k) * bins;
    double *lrow = log_q ? log_q + static_cast<std::size_t>(k) * bins : nullptr;
    if (qa[k] <= 0.0) {
      if (lrow) std::fill(lrow, lrow + bins, 0.0);
      continue;
    }
    const double la = std::log(qa[k]);
    for (int l = 0; l < bins; ++l) {
      const double lq = row[l] > 0.0 ? std::log(row[l]) : 0.0;
      if (lrow) lrow[l] = lq;
      if (row[l] > 0.0) acc += row[l] * (lq - la - lb[l]);
    }
  }
  return acc;
}

// Parzen windows of a run of intensities, `cap` slots per voxel.
struct WindowSet {
  int cap = 0;
  std::vector<Window> win;
  std::vector<double> w;
  std::vector<double> dw;  // empty unless slopes were requested

  void compute(const double *v, std::size_t n, const MIConfig &cfg, bool slopes) {
    cap = window_capacity(cfg);
    std::vector<double> decay(static_cast<std::size_t>(cap));
    for (int k = 0; k < cap; ++k) {
      decay[static_cast<std::size_t>(k)] =
          std::exp(-0.5 * k * k / (cfg.parzen_sigma * cfg.parzen_sigma));
    }
    win.resize(n);
    w.resize(n * cap);
    dw.resize(slopes ? n * cap : 0);
    for (std::size_t i = 0; i < n; ++i) {
      win[i] = soft_window(v[i], cfg, decay.data(), w.data() + i * cap,
                           slopes ? dw.data() + i * cap : nullptr);
    }
  }
};

struct SoftScratch {
  std::vector<double> h, q, qa, qb, g;
};

// MI of one soft-binned block from precomputed windows of the fixed (a) and
// warped (b) intensities. When d_mi is non-null it receives dMI/dw_i for every
// voxel; `wv` are the warped intensities, used to zero out clamped voxels.
double soft_block_mi(const Window *win_a, const double *wa, const Window *win_b,
                     const double *wb, const double *dwb, int cap, const double *wv,
                     std::size_t n, const MIConfig &cfg, double *d_mi, SoftScratch &s) {
  const int B = cfg.bins;
  const std::size_t cells = static_cast<std::size_t>(B) * B;
  s.h.assign(cells, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Window &A = win_a[i];
    const Window &Bw = win_b[i];
    const double *pa = wa + i * cap;
    const double *pb = wb + i * cap;
    for (int ka = 0; ka < A.count; ++ka) {
      double *row = s.h.data() + static_cast<std::size_t>(A.lo + ka) * B + Bw.lo;
      const double a = pa[ka];
      for (int kb = 0; kb < Bw.count; ++kb) row[kb] += a * pb[kb];
    }
  }

  double z = 0.0;
  for (double v : s.h) z += v;
  if (!(z > 0.0)) fail(ErrorKind::Numerical, "soft histogram has zero mass");
  const double c = 1.0 / (1.0 + static_cast<double>(cells) * cfg.epsilon);
  s.q.resize(cells);
  s.qa.assign(static_cast<std::size_t>(B), 0.0);
  s.qb.assign(static_cast<std::size_t>(B), 0.0);
  for (int k = 0; k < B; ++k) {
    for (int l = 0; l < B; ++l) {
      const std::size_t idx = static_cast<std::size_t>(k) * B + l;
      const double q = (s.h[idx] / z + cfg.epsilon) * c;
      s.q[idx] = q;
      s.qa[k] += q;
      s.qb[l] += q;
    }
  }
  s.g.resize(cells);
  const double value = mi_plain(B, s.q, s.qa, s.qb, d_mi ? s.g.data() : nullptr);
  if (d_mi == nullptr) return value;

  // dMI/dq_kl = log q_kl - log qa_k - log qb_l - 1. The constant cancels under
  // the normalization by z, leaving dMI/dH_kl = c / z * (G_kl - sum_mn G_mn p_mn).
  // s.g holds log q here; every cell is positive since epsilon > 0.
  std::vector<double> &lb = s.qb;  // marginals are not needed past this point
  for (auto &v : lb) v = std::log(v);
  double mean_g = 0.0;
  for (int k = 0; k < B; ++k) {
    const double la = std::log(s.qa[k]);
    for (int l = 0; l < B; ++l) {
      const std::size_t idx = static_cast<std::size_t>(k) * B + l;
      const double g = s.g[idx] - la - lb[l];
      s.g[idx] = g;
      mean_g += g * s.h[idx];
    }
  }
  mean_g /= z;
  for (auto &g : s.g) g -= mean_g;
  const double factor = B * c / z;
  for (std::size_t i = 0; i < n; ++i) {
    const Window &A = win_a[i];
    const Window &Bw = win_b[i];
    const double *pa = wa + i * cap;
    const double *pd = dwb + i * cap;
    double acc = 0.0;
    for (int ka = 0; ka < A.count; ++ka) {
      const double *grow = s.g.data() + static_cast<std::size_t>(A.lo + ka) * B + Bw.lo;
      double inner = 0.0;
      for (int kb = 0; kb < Bw.count; ++kb) inner += grow[kb] * pd[kb];
      acc += pa[ka] * inner;
    }
    // Clamped intensities do not move the bin coordinate.
    d_mi[i] = (wv[i] < 0.0 || wv[i] > 1.0) ? 0.0 : factor * acc;
  }
  return value;
}

}  // namespace

namespace detail {

LocalMI::LocalMI(const Volume3 &fixed, const MIConfig &cfg) : cfg_(cfg), dims_(fixed.dims()) {
  cfg.validate();
  check_unit_range(fixed.data(), "local MI (fixed)");
  nb_[0] = dims_.nx / cfg.block[0];
  nb_[1] = dims_.ny / cfg.block[1];
  nb_[2] = dims_.nz / cfg.block[2];
  if (blocks() == 0) {
    fail(ErrorKind::InvalidArgument, "local MI: volume " + std::to_string(dims_.nx) + "x" +
                                         std::to_string(dims_.ny) + "x" +
                                         std::to_string(dims_.nz) + " is smaller than one block");
  }
  per_block_ = static_cast<std::size_t>(cfg.block[0]) * cfg.block[1] * cfg.block[2];
  order_.reserve(blocks() * per_block_);
  for (std::size_t b = 0; b < blocks(); ++b) {
    const int bx = static_cast<int>(b % nb_[0]);
    const int by = static_cast<int>((b / nb_[0]) % nb_[1]);
    const int bz = static_cast<int>(b / (static_cast<std::size_t>(nb_[0]) * nb_[1]));
    for (int z = 0; z < cfg.block[2]; ++z) {
      for (int y = 0; y < cfg.block[1]; ++y) {
        for (int x = 0; x < cfg.block[0]; ++x) {
          order_.push_back(dims_.index(bx * cfg.block[0] + x, by * cfg.block[1] + y,
                                       bz * cfg.block[2] + z));
        }
      }
    }
  }
  fixed_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) fixed_[i] = fixed[order_[i]];
  flat_.assign(blocks(), 1);
  for (std::size_t b = 0; b < blocks(); ++b) {
    const double *f = fixed_.data() + b * per_block_;
    for (std::size_t i = 1; i < per_block_ && flat_[b]; ++i) flat_[b] = f[i] == f[0];
  }
  if (cfg.mode == HistogramMode::Soft) {
    auto ws = std::make_shared<WindowSet>();
    ws->compute(fixed_.data(), fixed_.size(), cfg, false);
    fixed_windows_ = ws;
  }
}

std::size_t LocalMI::blocks() const {
  return static_cast<std::size_t>(nb_[0]) * nb_[1] * nb_[2];
}

double LocalMI::loss(const Volume3 &warped, std::vector<double> *d_loss) const {
  require(warped.dims() == dims_, "local MI: fixed and warped dims differ");
  check_unit_range(warped.data(), "local MI (warped)");
  if (d_loss != nullptr) {
    require(cfg_.mode == HistogramMode::Soft, "MI gradient requires soft binning");
    require(cfg_.epsilon > 0.0, "MI gradient requires a positive epsilon floor");
    d_loss->assign(dims_.count(), 0.0);
  }
  const std::size_t nb = blocks();
  const std::size_t m = per_block_;
  std::vector<double> block_mi(nb, 0.0);
  const double scale = -1.0 / static_cast<double>(nb);
  const auto *fw = static_cast<const WindowSet *>(fixed_windows_.get());

  parallel_for(nb, [&](std::size_t b) {
    if (flat_[b]) return;
    thread_local SoftScratch scratch;
    thread_local WindowSet wwin;
    thread_local std::vector<double> wv, grad;
    const std::size_t *idx = order_.data() + b * m;
    wv.resize(m);
    for (std::size_t i = 0; i < m; ++i) wv[i] = warped[idx[i]];
    const double *fv = fixed_.data() + b * m;
    if (cfg_.mode == HistogramMode::Hard) {
      block_mi[b] = mi(joint_histogram(std::span<const double>(fv, m), wv, cfg_));
      return;
    }
    wwin.compute(wv.data(), m, cfg_, d_loss != nullptr);
    grad.resize(m);
    block_mi[b] = soft_block_mi(fw->win.data() + b * m, fw->w.data() + b * m * fw->cap,
                                wwin.win.data(), wwin.w.data(), wwin.dw.data(), wwin.cap,
                                wv.data(), m, cfg_, d_loss ? grad.data() : nullptr, scratch);
    if (d_loss != nullptr) {
      for (std::size_t i = 0; i < m; ++i) (*d_loss)[idx[i]] = scale * grad[i];
    }
  });

  double sum = 0.0;
  for (double v : block_mi) sum += v;
  return -sum / static_cast<double>(nb);
}

}  // namespace detail

void MIConfig::validate() const {
  require(bins >= 2, "MI config: bins must be >= 2");
  require(block[0] > 0 && block[1] > 0 && block[2] > 0, "MI config: block dims must be positive");
  require(parzen_sigma > 0.0, "MI config: parzen_sigma must be positive");
  require(epsilon >= 0.0, "MI config: epsilon must be >= 0");
  require(mode == HistogramMode::Hard || epsilon > 0.0,
          "MI config: soft binning needs epsilon > 0");
}

JointHistogram JointHistogram::from_joint(int bins, std::vector<double> joint) {
  require(bins >= 1 && joint.size() == static_cast<std::size_t>(bins) * bins,
          "joint table size disagrees with bin count");
  JointHistogram h;
  h.bins = bins;
  h.joint = std::move(joint);
  h.pa.assign(static_cast<std::size_t>(bins), 0.0);
  h.pb.assign(static_cast<std::size_t>(bins), 0.0);
  for (int k = 0; k < bins; ++k) {
    for (int l = 0; l < bins; ++l) {
      const double v = h.p(k, l);
      h.pa[k] += v;
      h.pb[l] += v;
    }
  }
  return h;
}

JointHistogram joint_histogram(std::span<const double> a, std::span<const double> b,
                               const MIConfig &cfg) {
  cfg.validate();
  require(a.size() == b.size(), "joint_histogram: blocks differ in size");
  require(!a.empty(), "joint_histogram: empty blocks");
  check_unit_range(a, "joint_histogram");
  check_unit_range(b, "joint_histogram");
  const int B = cfg.bins;

  if (cfg.mode == HistogramMode::Hard) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(B) * B, 0);
    std::vector<std::size_t> ca(static_cast<std::size_t>(B), 0), cb(static_cast<std::size_t>(B), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const int ia = hard_bin(a[i], B);
      const int ib = hard_bin(b[i], B);
      ++counts[static_cast<std::size_t>(ia) * B + ib];
      ++ca[ia];
      ++cb[ib];
    }
    const double n = static_cast<double>(a.size());
    JointHistogram h;
    h.bins = B;
    h.exact = true;
    h.joint.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) h.joint[i] = static_cast<double>(counts[i]) / n;
    h.pa.resize(ca.size());
    h.pb.resize(cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) h.pa[i] = static_cast<double>(ca[i]) / n;
    for (std::size_t i = 0; i < cb.size(); ++i) h.pb[i] = static_cast<double>(cb[i]) / n;
    return h;
  }

  WindowSet wa, wb;
  wa.compute(a.data(), a.size(), cfg, false);
  wb.compute(b.data(), b.size(), cfg, false);
  SoftScratch s;
  soft_block_mi(wa.win.data(), wa.w.data(), wb.win.data(), wb.w.data(), nullptr, wb.cap,
                b.data(), a.size(), cfg, nullptr, s);
  JointHistogram h;
  h.bins = B;
  h.joint = s.q;
  h.pa = s.qa;
  h.pb = s.qb;
  return h;
}

JointHistogram joint_histogram(const Volume3 &a, const Volume3 &b, const MIConfig &cfg) {
  require(a.dims() == b.dims(), "joint_histogram: block dims differ");
  return joint_histogram(a.data(), b.data(), cfg);
}

double mi(const JointHistogram &h) {
  if (!h.exact) return mi_plain(h.bins, h.joint, h.pa, h.pb);
  // Sorting the terms makes the sum independent of bin labelling.
  std::vector<double> terms;
  for (int k = 0; k < h.bins; ++k) {
    for (int l = 0; l < h.bins; ++l) {
      const double p = h.p(k, l);
      if (p > 0.0) {
        terms.push_back(p * (std::log(p) - (std::log(h.pa[k]) + std::log(h.pb[l]))));
      }
    }
  }
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

double local_mi_loss(const Volume3 &fixed, const Volume3 &warped, const MIConfig &cfg) {
  return detail::LocalMI(fixed, cfg).loss(warped, nullptr);
}

double local_mi_loss_gradient(const Volume3 &fixed, const Volume3 &warped, const MIConfig &cfg,
                              std::vector<double> &d_loss) {
  return detail::LocalMI(fixed, cfg).loss(warped, &d_loss);
}

namespace {

double smoothness_impl(const DisplacementField &field, DisplacementField *grad) {
  const Dims d = field.dims();
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto &u = field.component(c);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = d.index(x, y, z);
          const double v = u[i];
          if (x + 1 < d.nx) {
            const double e = u[i + 1] - v;
            sum += e * e;
          }
          if (y + 1 < d.ny) {
            const double e = u[i + static_cast<std::size_t>(d.nx)] - v;
            sum += e * e;
          }
          if (z + 1 < d.nz) {
            const double e = u[i + static_cast<std::size_t>(d.nx) * d.ny] - v;
            sum += e * e;
          }
        }
      }
    }
  }
  const double r = std::sqrt(sum);
  if (grad == nullptr) return r;

  *grad = DisplacementField(d);
  if (r == 0.0) return r;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(d.nx),
                    sz = static_cast<std::size_t>(d.nx) * d.ny;
  for (int c = 0; c < 3; ++c) {
    const auto &u = field.component(c);
    auto &g = grad->component(c);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = d.index(x, y, z);
          const double v = u[i];
          double acc = 0.0;
          if (x > 0) acc += v - u[i - sx];
          if (x + 1 < d.nx) acc -= u[i + sx] - v;
          if (y > 0) acc += v - u[i - sy];
          if (y + 1 < d.ny) acc -= u[i + sy] - v;
          if (z > 0) acc += v - u[i - sz];
          if (z + 1 < d.nz) acc -= u[i + sz] - v;
          g[i] = acc / r;
        }
      }
    }
  }
  return r;
}

}  // namespace

double smoothness(const DisplacementField &field) { return smoothness_impl(field, nullptr); }

double smoothness_gradient(const DisplacementField &field, DisplacementField &grad) {
  return smoothness_impl(field, &grad);
}

double mse(const Volume3 &a, const Volume3 &b, const Mask &mask) {
  require(a.dims() == b.dims(), "mse: dims differ");
  require(mask.empty() || mask.size() == a.size(), "mse: mask size disagrees with dims");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    const double e = a[i] - b[i];
    acc += e * e;
    ++n;
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace t1mc
