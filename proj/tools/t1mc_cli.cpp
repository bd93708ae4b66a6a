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

// Command-line front end. Everything goes through the C API of libt1mc.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "t1mc/t1mc.h"

namespace {

using nlohmann::json;

constexpr int kExitArgs = 2;
constexpr int kExitIo = 3;

struct CliError {
  int code;
  std::string message;
};

json load_config(const std::string &path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError{kExitIo, "cannot open config " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw CliError{kExitArgs, "config " + path + " is not a JSON object"};
  return j;
}

int finish(t1mc_status st, char *report, bool print) {
  if (st != T1MC_OK) {
    std::cerr << "t1mc: " << t1mc_last_error() << "\n";
    return st == T1MC_ERR_INTERNAL ? 1 : static_cast<int>(st);
  }
  if (report != nullptr) {
    if (print) std::cout << report;
    t1mc_string_free(report);
  }
  return 0;
}

const char *c_str_or_null(const std::string &s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Motion correction and T1 mapping for T1-weighted MRI series", "t1mc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(t1mc_version()));

  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string config_path;
  bool quiet = false;
  app.add_option("--seed", seed, "Seed for the phantom and the registration");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", config_path, "Pipeline config JSON");
  app.add_flag("-q,--quiet", quiet, "Do not print reports");

  // phantom
  auto *ph = app.add_subcommand("phantom", "Write a synthetic motion-corrupted series with ground truth");
  std::string ph_out;
  std::optional<double> ph_amp, ph_noise;
  ph->add_option("--out", ph_out, "Output directory")->required();
  ph->add_option("--amplitude", ph_amp, "Motion amplitude in voxels");
  ph->add_option("--noise", ph_noise, "Noise sigma");

  // register
  auto *rg = app.add_subcommand("register", "Register one moving volume to a fixed volume");
  std::string rg_fixed, rg_moving, rg_field, rg_warped, rg_report;
  std::optional<double> rg_lambda;
  std::optional<int> rg_bins, rg_iters, rg_pyramid;
  std::vector<int> rg_block;
  bool rg_normalize = false;
  rg->add_option("--fixed", rg_fixed, "Fixed volume")->required();
  rg->add_option("--moving", rg_moving, "Moving volume")->required();
  rg->add_option("--lambda", rg_lambda, "Smoothness weight");
  rg->add_option("--bins", rg_bins, "Histogram bins");
  rg->add_option("--block", rg_block, "MI block size bx,by,bz")->delimiter(',')->expected(3);
  rg->add_option("--iters", rg_iters, "Iterations per pyramid level");
  rg->add_option("--pyramid", rg_pyramid, "Pyramid levels");
  rg->add_option("--out-field", rg_field, "Output displacement field");
  rg->add_option("--out-warped", rg_warped, "Output warped moving volume");
  rg->add_option("--report", rg_report, "Output report JSON");
  rg->add_flag("--normalize", rg_normalize, "Map both volumes jointly to [0, 1] first");

  // mocorr
  auto *mc = app.add_subcommand("mocorr", "Motion-correct a series");
  std::string mc_series, mc_strategy, mc_mask, mc_out;
  mc->add_option("--series", mc_series, "Series manifest")->required();
  mc->add_option("--strategy", mc_strategy, "cascade or anchor")->check(CLI::IsMember({"cascade", "anchor"}));
  mc->add_option("--mask", mc_mask, "Foreground mask volume");
  mc->add_option("--out", mc_out, "Output directory")->required();

  // fit
  auto *ft = app.add_subcommand("fit", "Fit M0 and T1 maps to a series");
  std::string ft_series, ft_mask, ft_out;
  ft->add_option("--series", ft_series, "Series manifest")->required();
  ft->add_option("--mask", ft_mask, "Foreground mask volume");
  ft->add_option("--out", ft_out, "Output directory")->required();

  // eval
  auto *ev = app.add_subcommand("eval", "Compare fits before and after correction");
  std::string ev_before, ev_before_fit, ev_after, ev_after_fit, ev_mask, ev_out;
  std::optional<std::size_t> ev_scatter;
  ev->add_option("--before", ev_before, "Uncorrected series manifest")->required();
  ev->add_option("--before-fit", ev_before_fit, "Fit directory of the uncorrected series")->required();
  ev->add_option("--after", ev_after, "Corrected series manifest")->required();
  ev->add_option("--after-fit", ev_after_fit, "Fit directory of the corrected series")->required();
  ev->add_option("--mask", ev_mask, "Foreground mask volume");
  ev->add_option("--scatter", ev_scatter, "Voxels in the scatter sample")->check(CLI::PositiveNumber);
  ev->add_option("--out", ev_out, "Output directory")->required();

  // run
  auto *rn = app.add_subcommand("run", "Run phantom, correction, fitting and reports end to end");
  std::string rn_out, rn_strategy;
  rn->add_option("--out", rn_out, "Output directory (overrides the config)");
  rn->add_option("--strategy", rn_strategy, "cascade or anchor")->check(CLI::IsMember({"cascade", "anchor"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitArgs;
  }

  try {
    json cfg = load_config(config_path);
    if (seed) {
      cfg["phantom"]["seed"] = *seed;
      cfg["registration"]["seed"] = *seed;
    }
    if (t1mc_set_threads(threads) != T1MC_OK) return finish(T1MC_ERR_ARGUMENT, nullptr, false);

    char *report = nullptr;
    t1mc_status st = T1MC_OK;
    if (*ph) {
      if (ph_amp) cfg["phantom"]["motion_amplitude"] = *ph_amp;
      if (ph_noise) cfg["phantom"]["noise_sigma"] = *ph_noise;
      st = t1mc_cmd_phantom(cfg.dump().c_str(), ph_out.c_str(), &report);
    } else if (*rg) {
      if (rg_lambda) cfg["registration"]["lambda"] = *rg_lambda;
      if (rg_bins) cfg["registration"]["bins"] = *rg_bins;
      if (!rg_block.empty()) cfg["registration"]["block"] = rg_block;
      if (rg_iters) cfg["registration"]["max_iters"] = *rg_iters;
      if (rg_pyramid) cfg["registration"]["pyramid_levels"] = *rg_pyramid;
      st = t1mc_cmd_register(rg_fixed.c_str(), rg_moving.c_str(), cfg.dump().c_str(), rg_normalize ? 1 : 0,
                             c_str_or_null(rg_field), c_str_or_null(rg_warped), c_str_or_null(rg_report), &report);
    } else if (*mc) {
      st = t1mc_cmd_mocorr(mc_series.c_str(), c_str_or_null(mc_strategy), cfg.dump().c_str(),
                           c_str_or_null(mc_mask), mc_out.c_str(), &report);
    } else if (*ft) {
      st = t1mc_cmd_fit(ft_series.c_str(), c_str_or_null(ft_mask), ft_out.c_str(), &report);
    } else if (*ev) {
      std::size_t scatter = 2000;
      if (cfg.contains("report") && cfg["report"].contains("scatter_voxels")) {
        scatter = cfg["report"]["scatter_voxels"].get<std::size_t>();
      }
      if (ev_scatter) scatter = *ev_scatter;
      st = t1mc_cmd_eval(ev_before.c_str(), ev_before_fit.c_str(), ev_after.c_str(), ev_after_fit.c_str(),
                         c_str_or_null(ev_mask), scatter, ev_out.c_str(), &report);
    } else if (*rn) {
      if (!rn_strategy.empty()) cfg["strategy"] = rn_strategy;
      st = t1mc_run_pipeline(cfg.dump().c_str(), c_str_or_null(rn_out), &report);
    }
    return finish(st, report, !quiet);
  } catch (const CliError &e) {
    std::cerr << "t1mc: " << e.message << "\n";
    return e.code;
  } catch (const json::exception &e) {
    std::cerr << "t1mc: bad config value: " << e.what() << "\n";
    return kExitArgs;
  }
}
