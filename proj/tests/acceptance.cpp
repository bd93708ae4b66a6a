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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "t1mc/cascade.hpp"
#include "t1mc/io.hpp"
#include "t1mc/metrics.hpp"
#include "t1mc/parallel.hpp"
#include "t1mc/phantom.hpp"
#include "t1mc/registration.hpp"
#include "t1mc/signal_model.hpp"

using namespace t1mc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Monotone within each pyramid level.
bool trace_monotone(const std::vector<double> &trace, const std::vector<int> &level) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (level[i] == level[i - 1] && trace[i] > trace[i - 1]) return false;
  }
  return true;
}

struct TraceLog {
  std::size_t runs = 0;
  std::size_t bad = 0;
  void add(const std::vector<double> &t, const std::vector<int> &l) {
    ++runs;
    if (!trace_monotone(t, l)) ++bad;
  }
};

double foreground_epe(const DisplacementField &got, const DisplacementField &want, const Mask &mask) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto a = got.at(i), b = want.at(i);
    s += std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
    ++n;
  }
  return s / static_cast<double>(n);
}

Volume3 to_unit(const Volume3 &v, double lo, double hi) {
  Volume3 out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
  return out;
}

// ------------------------------------------------------------------ criteria

Outcome fit_fidelity() {
  const PhantomSpec spec;
  const GroundTruth gt = make_phantom(spec);
  const T1Series s = synth_series(gt, inversion_schedule(spec.ti1, spec.ti2, spec.rr));
  const unsigned saved = thread_count();
  set_thread_count(1);
  const auto t0 = Clock::now();
  const ParameterMaps maps = fit_volume(s);
  const double secs = seconds_since(t0);
  set_thread_count(saved);

  double worst_t1 = 0.0, worst_m0 = 0.0;
  bool all_valid = true;
  for (std::size_t i = 0; i < gt.mask.size(); ++i) {
    if (!gt.mask[i]) continue;
    all_valid = all_valid && maps.valid[i];
    worst_t1 = std::max(worst_t1, std::abs(maps.t1[i] / gt.t1[i] - 1.0));
    worst_m0 = std::max(worst_m0, std::abs(maps.m0[i] / gt.m0[i] - 1.0));
  }
  const double r2 = r2_stats(maps, gt.mask).mean;
  Outcome o;
  o.pass = all_valid && worst_t1 <= 1e-3 && worst_m0 <= 1e-3 && r2 >= 0.999 && secs <= 30.0;
  o.detail = "max rel err T1 " + fmt("%.3g", worst_t1) + ", M0 " + fmt("%.3g", worst_m0) +
             ", mean fg R2 " + fmt("%.9f", r2) + ", " + fmt("%.2f", secs) + " s single-threaded";
  return o;
}

Outcome known_shift(TraceLog &log) {
  const PhantomSpec spec;
  const GroundTruth gt = make_phantom(spec);
  const NormalizedSeries n = normalize_series(synth_series(gt, inversion_schedule(spec.ti1, spec.ti2, spec.rr)));
  const Dims d = spec.dims;
  DisplacementField back(d), truth(d);
  for (auto &v : back.component(0)) v = -3.0;
  for (auto &v : truth.component(0)) v = 3.0;

  Outcome o{true, ""};
  for (std::size_t k : {1u, 4u, 10u}) {
    const Volume3 &fixed = n.series.frames[k];
    const Volume3 moving = warp(fixed, back);
    const auto t0 = Clock::now();
    const RegistrationResult r = register_pair(fixed, moving, RegistrationConfig{});
    const double secs = seconds_since(t0);
    log.add(r.energy_trace, r.trace_level);
    const double epe = foreground_epe(r.field, truth, gt.mask);
    o.pass = o.pass && epe < 0.5 && secs <= 60.0;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("frame ") + std::to_string(k) + " EPE " +
                fmt("%.3f", epe) + " in " + fmt("%.1f", secs) + " s";
  }
  return o;
}

Outcome smooth_recovery(TraceLog &log) {
  const PhantomSpec spec;  // amplitude 4, noise 0.01
  const GroundTruth gt = make_phantom(spec);
  const T1Series clean = synth_series(gt, inversion_schedule(spec.ti1, spec.ti2, spec.rr));
  const MotionResult moved = apply_motion(clean, spec);
  const NormalizedSeries nm = normalize_series(moved.series);

  Outcome o{true, ""};
  double worst_epe = 0.0;
  int mse_ok = 0;
  for (std::size_t k = 1; k < clean.size(); ++k) {
    const Volume3 fixed = to_unit(clean.frames[k], nm.min, nm.max);
    const Volume3 &moving = nm.series.frames[k];
    const RegistrationResult r = register_pair(fixed, moving, RegistrationConfig{});
    log.add(r.energy_trace, r.trace_level);
    const double epe = foreground_epe(r.field, invert_field(moved.fields[k]), gt.mask);
    const double before = mse(fixed, moving);
    const double after = mse(fixed, warp(moving, r.field));
    worst_epe = std::max(worst_epe, epe);
    if (after < before) ++mse_ok;
    o.pass = o.pass && epe < 1.0 && after < before;
  }
  o.detail = "worst pair EPE " + fmt("%.3f", worst_epe) + ", MSE reduced on " + std::to_string(mse_ok) + "/" +
             std::to_string(clean.size() - 1) + " pairs";
  return o;
}

Outcome gradient_check() {
  const Dims d{16, 16, 4};
  RegistrationConfig cfg;
  cfg.lambda = 0.01;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0), frac(0.1, 0.9);
    std::uniform_int_distribution<int> whole(-1, 1);
    Volume3 f(d), m(d);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = unit(rng);
      m[i] = unit(rng);
    }
    DisplacementField u(d);
    for (int c = 0; c < 3; ++c)
      for (auto &v : u.component(c)) v = whole(rng) + frac(rng);
    const DisplacementField g = energy_gradient(f, m, u, cfg);
    const double h = 1e-4;
    double max_err = 0.0, max_fd = 0.0;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < d.count(); ++i) {
        double &v = u.component(c)[i];
        const double keep = v;
        v = keep + h;
        const double up = energy(f, m, u, cfg).total;
        v = keep - h;
        const double dn = energy(f, m, u, cfg).total;
        v = keep;
        const double fd = (up - dn) / (2 * h);
        max_err = std::max(max_err, std::abs(fd - g.component(c)[i]));
        max_fd = std::max(max_fd, std::abs(fd));
      }
    worst = std::max(worst, max_err / max_fd);
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.3g", worst) + " over 10 seeds"};
}

Outcome mi_identities() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double min_mi = 1.0, worst_sym = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int B = 2 + t % 31;
    std::vector<double> p(static_cast<std::size_t>(B) * B), q(p.size());
    double z = 0.0;
    for (auto &v : p) z += (v = u(rng) < 0.25 ? 0.0 : u(rng));
    if (z == 0.0) p[0] = z = 1.0;
    for (auto &v : p) v /= z;
    for (int k = 0; k < B; ++k)
      for (int l = 0; l < B; ++l) q[l * B + k] = p[k * B + l];
    const double a = mi(JointHistogram::from_joint(B, p));
    const double b = mi(JointHistogram::from_joint(B, q));
    min_mi = std::min(min_mi, a);
    worst_sym = std::max(worst_sym, std::abs(a - b));
  }

  // HARD-mode MI(X, X) against the entropy of bin counts.
  MIConfig hard;
  hard.mode = HistogramMode::Hard;
  hard.bins = 16;
  bool entropy_exact = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r(seed);
    std::uniform_int_distribution<int> bin(0, hard.bins - 1);
    Volume3 x(Dims{16, 16, 4});
    std::vector<std::size_t> counts(hard.bins, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const int b = bin(r);
      x[i] = (b + 0.5) / hard.bins;
      ++counts[b];
    }
    std::vector<double> terms;
    for (auto c : counts) {
      if (!c) continue;
      const double p = static_cast<double>(c) / static_cast<double>(x.size());
      terms.push_back(-(p * std::log(p)));
    }
    std::sort(terms.begin(), terms.end());
    double h = 0.0;
    for (double t : terms) h += t;
    entropy_exact = entropy_exact && mi(joint_histogram(x, x, hard)) == h;
  }

  hard.bins = 2;
  const Volume3 a(Dims{2, 2, 1}, std::vector<double>{0, 0, 1, 1});
  const Volume3 b(Dims{2, 2, 1}, std::vector<double>{0, 1, 0, 1});
  const JointHistogram h = joint_histogram(a, b, hard);
  double worst_cell = 0.0;
  for (double v : h.joint) worst_cell = std::max(worst_cell, std::abs(v - 0.25));
  const double worked = mi(JointHistogram::from_joint(2, {0.4, 0.1, 0.1, 0.4}));
  const double oracle = 2 * 0.4 * std::log(0.4 / 0.25) + 2 * 0.1 * std::log(0.1 / 0.25);
  const bool examples = worst_cell <= 1e-9 && std::abs(mi(h)) <= 1e-9 && std::abs(worked - oracle) <= 1e-9;

  Outcome o;
  o.pass = min_mi >= -1e-12 && worst_sym <= 1e-12 && entropy_exact && examples;
  o.detail = "min MI " + fmt("%.3g", min_mi) + ", max asymmetry " + fmt("%.3g", worst_sym) +
             ", MI(X,X)==H(X) " + (entropy_exact ? "exact" : "NOT exact") + ", worked examples " +
             (examples ? "match" : "differ");
  return o;
}

Outcome smoothness_literal() {
  const Dims d{8, 8, 8};
  DisplacementField f(d);
  f.component(0)[d.index(4, 3, 5)] = 1.0;
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto &u = f.component(c);
    for (int z = 0; z < 8; ++z)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const double v = u[d.index(x, y, z)];
          for (double diff : {x + 1 < 8 ? u[d.index(x + 1, y, z)] - v : 0.0,
                              y + 1 < 8 ? u[d.index(x, y + 1, z)] - v : 0.0,
                              z + 1 < 8 ? u[d.index(x, y, z + 1)] - v : 0.0})
            sum += diff * diff;
        }
  }
  const double spike_err = std::abs(smoothness(f) - std::sqrt(sum));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  double homog_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    DisplacementField a(Dims{12, 10, 6}), a2(Dims{12, 10, 6});
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < a.dims().count(); ++i) {
        a.component(c)[i] = n(rng);
        a2.component(c)[i] = 2.0 * a.component(c)[i];
      }
    homog_err = std::max(homog_err, std::abs(smoothness(a2) - 2.0 * smoothness(a)));
  }
  return {spike_err <= 1e-12 && homog_err <= 1e-12,
          "spike " + fmt("%.17g", smoothness(f)) + " (oracle err " + fmt("%.3g", spike_err) +
              "), homogeneity err " + fmt("%.3g", homog_err)};
}

// ------------------------------------------------------------- pipeline runs

int run_cli(const std::string &cli, const std::vector<std::string> &args) {
  std::string cmd = "\"" + cli + "\"";
  for (const auto &a : args) cmd += " \"" + a + "\"";
  return std::system(cmd.c_str());
}

std::vector<fs::path> listing(const fs::path &root) {
  std::vector<fs::path> out;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism(const fs::path &first, const fs::path &second) {
  const auto a = listing(first), b = listing(second);
  std::size_t differ = 0;
  std::string which;
  if (a != b) return {false, "artifact lists differ"};
  for (const auto &rel : a) {
    std::string x = read_file(first / rel), y = read_file(second / rel);
    if (rel == "run_report.json") {
      json jx = json::parse(x), jy = json::parse(y);
      jx.erase("timing");
      jy.erase("timing");
      x = jx.dump();
      y = jy.dump();
    }
    if (x != y) {
      ++differ;
      which += " " + rel.string();
    }
  }

  // Series save/load round trip.
  PhantomSpec spec;
  const GroundTruth gt = make_phantom(spec);
  const T1Series s = apply_motion(synth_series(gt, inversion_schedule(spec.ti1, spec.ti2, spec.rr)), spec).series;
  const fs::path dir = first.parent_path() / "roundtrip";
  const T1Series back = load_series(save_series(s, dir, gt.mask));
  bool exact = back.size() == s.size();
  for (std::size_t k = 0; exact && k < s.size(); ++k) {
    exact = back.frames[k] == s.frames[k] && back.times[k] == s.times[k];
  }
  fs::remove_all(dir);
  return {differ == 0 && exact, std::to_string(a.size()) + " artifacts compared, " + std::to_string(differ) +
                                    " differ" + which + "; series round trip " + (exact ? "bit-exact" : "NOT exact")};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"t1mc acceptance suite"};
  std::string cli, work = "acceptance_work";
  app.add_option("--cli", cli, "path to the t1mc executable")->required();
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = work;
  fs::remove_all(root);
  fs::create_directories(root);

  std::vector<Outcome> results(11);
  TraceLog traces;
  auto guarded = [](const std::function<Outcome()> &fn) {
    try {
      return fn();
    } catch (const std::exception &e) {
      return Outcome{false, std::string("error: ") + e.what()};
    }
  };

  results[1] = guarded(fit_fidelity);
  results[2] = guarded([&] { return known_shift(traces); });
  results[3] = guarded([&] { return smooth_recovery(traces); });
  results[6] = guarded(gradient_check);
  results[7] = guarded(mi_identities);
  results[10] = guarded(smoothness_literal);

  // Two full runs of the default pipeline through the CLI, same output path.
  const fs::path run = root / "run", kept = root / "run_first";
  const int rc1 = run_cli(cli, {"--seed", "42", "-q", "run", "--out", run.string()});
  std::error_code ec;
  if (rc1 == 0) fs::rename(run, kept, ec);
  const int rc2 = run_cli(cli, {"--seed", "42", "-q", "run", "--out", run.string()});

  if (rc1 != 0 || rc2 != 0 || ec) {
    const Outcome bad{false, "run failed (exit " + std::to_string(rc1) + ", " + std::to_string(rc2) + ")"};
    results[4] = results[5] = results[8] = results[9] = bad;
  } else {
    results[9] = guarded([&] { return determinism(kept, run); });
    const json rep = json::parse(read_file(run / "run_report.json"));

    results[4] = guarded([&] {
      const auto &r2 = rep.at("results").at("r2").at("mask");
      const double before = r2.at("before").at("mean"), after = r2.at("after").at("mean");
      return Outcome{after - before >= 0.1, "mean fg R2 " + fmt("%.4f", before) + " -> " + fmt("%.4f", after) +
                                                " (delta " + fmt("%.4f", after - before) + ")"};
    });

    results[5] = guarded([&] {
      const auto &c = rep.at("results").at("mse_over_time");
      Outcome o{true, ""};
      for (std::size_t i = 0; i < c.at("index").size(); ++i) {
        const int t = c.at("index")[i];
        const double b = c.at("before")[i], a = c.at("after")[i];
        if (t <= 3) {
          o.pass = o.pass && a < b;
          o.detail += "t=" + std::to_string(t) + " " + fmt("%.4g", b) + " -> " + fmt("%.4g", a) + "; ";
        }
      }
      const auto &x = c.at("crossover");
      o.detail += "crossover " + (x.is_null() ? std::string("none") : "t=" + std::to_string(x.get<int>())) +
                  " (reported only); curves in mse_over_time.csv";
      return o;
    });

    results[8] = guarded([&] {
      for (const auto &p : rep.at("stages")[2].at("summary").at("pairs")) {
        traces.add(p.at("energy_trace").get<std::vector<double>>(), p.at("trace_level").get<std::vector<int>>());
      }
      return Outcome{traces.bad == 0 && traces.runs > 0,
                     std::to_string(traces.runs - traces.bad) + "/" + std::to_string(traces.runs) +
                         " registration traces non-increasing"};
    });
  }

  static const char *names[] = {"",
                                "fit fidelity",
                                "known-transform recovery",
                                "smooth-deformation recovery",
                                "directional R2 improvement",
                                "MSE-over-time direction",
                                "gradient correctness",
                                "MI identity suite",
                                "monotone optimization",
                                "determinism and I/O",
                                "smoothness literal check"};
  int failed = 0;
  for (int i = 1; i <= 10; ++i) {
    std::printf("[%s] criterion %d (%s): %s\n", results[i].pass ? "PASS" : "FAIL", i, names[i],
                results[i].detail.c_str());
    if (!results[i].pass) ++failed;
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
