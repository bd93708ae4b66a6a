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

#include <filesystem>
#include <optional>
#include <string>

#include "t1mc/cascade.hpp"
#include "t1mc/phantom.hpp"
#include "t1mc/registration.hpp"

namespace t1mc {

namespace fs = std::filesystem;

struct PipelineConfig {
  PhantomSpec phantom{};
  RegistrationConfig registration{};
  Strategy strategy = Strategy::Cascade;
  std::string output_dir = "t1mc_run";
  std::size_t scatter_voxels = 2000;

  void validate() const;
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys are
/// rejected. Accepts an empty string as "all defaults".
PipelineConfig parse_pipeline_config(const std::string &json_text);
std::string pipeline_config_json(const PipelineConfig &cfg);

/// Each command writes its artifacts under `out` and returns the report it
/// wrote, as JSON text.
std::string phantom_command(const PhantomSpec &spec, const fs::path &out);

struct RegisterPaths {
  fs::path fixed, moving;
  fs::path out_field, out_warped, report;  // empty paths are skipped
};
/// With `normalize`, both images share one min-max map to [0, 1] first.
std::string register_command(const RegisterPaths &paths, const RegistrationConfig &cfg,
                             bool normalize);

/// Normalizes the series, registers it, and writes the original-intensity
/// corrected series, the fields and mocorr_report.json.
std::string mocorr_command(const fs::path &manifest, const RegistrationConfig &cfg,
                           Strategy strategy, const fs::path &out,
                           const std::optional<fs::path> &mask_path = std::nullopt);

std::string fit_command(const fs::path &manifest, const fs::path &out,
                        const std::optional<fs::path> &mask_path = std::nullopt);

struct EvalInputs {
  fs::path before_series, before_fit;
  fs::path after_series, after_fit;
  std::optional<fs::path> mask;
  std::size_t scatter_voxels = 2000;
};
std::string eval_command(const EvalInputs &in, const fs::path &out);

/// phantom -> preprocess -> registration -> fit -> report, writing every
/// artifact and run_report.json under cfg.output_dir.
std::string run_pipeline(const PipelineConfig &cfg);

/// Throws unless `report_json` has the run report layout.
void validate_run_report(const std::string &report_json);

}  // namespace t1mc
