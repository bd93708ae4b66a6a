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

#include <doctest.h>

#include <filesystem>
#include <json.hpp>
#include <unistd.h>

#include "t1mc/error.hpp"
#include "t1mc/io.hpp"
#include "t1mc/pipeline.hpp"

using namespace t1mc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("t1mc_pipe_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

PipelineConfig small_config(const fs::path &out) {
  PipelineConfig c;
  c.phantom.dims = {48, 48, 8};
  c.output_dir = out.string();
  c.scatter_voxels = 100;
  return c;
}

json without_timing(const std::string &text) {
  json j = json::parse(text);
  j.erase("timing");
  j["config"].erase("output_dir");
  return j;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  const PipelineConfig d = parse_pipeline_config("");
  CHECK(d.phantom.seed == 42);
  CHECK(d.strategy == Strategy::Cascade);
  CHECK(d.scatter_voxels == 2000);

  const PipelineConfig c = parse_pipeline_config(R"({
    "phantom": {"dims": [64, 64, 8], "motion_amplitude": 2.5, "seed": 7},
    "registration": {"lambda": 0.02, "block": [8, 8, 2], "histogram": "soft"},
    "strategy": "anchor",
    "report": {"scatter_voxels": 10}
  })");
  CHECK(c.phantom.dims == Dims{64, 64, 8});
  CHECK(c.phantom.motion_amplitude == 2.5);
  CHECK(c.phantom.seed == 7);
  CHECK(c.registration.lambda == 0.02);
  CHECK(c.registration.mi.block == std::array<int, 3>{8, 8, 2});
  CHECK(c.strategy == Strategy::Anchor);
  CHECK(c.scatter_voxels == 10);

  const PipelineConfig again = parse_pipeline_config(pipeline_config_json(c));
  CHECK(pipeline_config_json(again) == pipeline_config_json(c));

  CHECK_THROWS_AS(parse_pipeline_config(R"({"phantom": {"colour": 1}})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"extra": 1})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"registration": {"lambda": "big"}})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"registration": {"lambda": -1}})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config(R"({"strategy": "random"})"), Error);
  CHECK_THROWS_AS(parse_pipeline_config("{not json"), Error);
}

TEST_CASE("run report validation") {
  CHECK_THROWS_AS(validate_run_report("[]"), Error);
  CHECK_THROWS_AS(validate_run_report(R"({"schema": "t1mc-run-report"})"), Error);
}

TEST_CASE("small pipeline run is complete and reproducible") {
  const fs::path a = scratch("a"), b = scratch("b");
  const std::string ra = run_pipeline(small_config(a));
  const std::string rb = run_pipeline(small_config(b));
  CHECK_NOTHROW(validate_run_report(ra));
  CHECK(without_timing(ra) == without_timing(rb));
  CHECK(read_file(a / "run_report.json") == ra);

  const json j = json::parse(ra);
  REQUIRE(j["stages"].size() == 5);
  CHECK(j["stages"][1]["summary"]["applied"] == false);
  CHECK(j["stages"][2]["summary"]["endpoint_error"].size() == 10);
  for (const char *f : {"mse_over_time.csv", "scatter_before.csv", "scatter_after.csv", "phantom/series.json",
                        "corrected/series.json", "fit_before/maps.json", "fit_after/maps.json"}) {
    CHECK(fs::exists(a / f));
    CHECK(read_file(a / f) == read_file(b / f));
  }
  CHECK(read_file(a / "corrected" / "frame_05.raw") == read_file(b / "corrected" / "frame_05.raw"));
  CHECK(read_file(a / "scatter_after.csv").rfind("time_ms,observed,fitted,voxel_id\n", 0) == 0);

  const double before = j["results"]["r2"]["mask"]["before"]["mean"];
  const double after = j["results"]["r2"]["mask"]["after"]["mean"];
  CHECK(after > before);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("no motion leaves the fit unchanged") {
  const fs::path out = scratch("still");
  PipelineConfig c = small_config(out);
  c.phantom.dims = PhantomSpec{}.dims;
  c.phantom.motion_amplitude = 0.0;
  const json j = json::parse(run_pipeline(c));
  const auto &r2 = j["results"]["r2"];
  for (const char *scope : {"mask", "all"}) {
    const double before = r2[scope]["before"]["mean"];
    const double after = r2[scope]["after"]["mean"];
    CHECK(std::abs(after - before) <= 1e-6);
  }
  fs::remove_all(out);
}

TEST_CASE("file-level commands chain together") {
  const fs::path root = scratch("cmds");
  PhantomSpec spec;
  spec.dims = {48, 48, 8};
  const json ph = json::parse(phantom_command(spec, root / "ph"));
  CHECK(fs::exists(root / "ph" / "series.json"));
  CHECK(fs::exists(root / "ph" / "truth" / "t1.json"));
  CHECK(ph.contains("gradient_bound"));

  RegistrationConfig cfg;
  cfg.max_iters = 20;
  const json mc = json::parse(mocorr_command(root / "ph" / "series.json", cfg, Strategy::Cascade, root / "mc"));
  CHECK(mc["mask_source"] == "manifest");
  CHECK(mc["pairs"].size() == 10);
  CHECK(fs::exists(root / "mc" / "fields" / "field_01.json"));

  fit_command(root / "ph" / "series.json", root / "fit_b");
  fit_command(root / "mc" / "series.json", root / "fit_a");
  EvalInputs in{root / "ph" / "series.json", root / "fit_b", root / "mc" / "series.json", root / "fit_a",
                std::nullopt, 20};
  const json ev = json::parse(eval_command(in, root / "ev"));
  CHECK(ev["r2"]["mask"]["after"]["mean"] > ev["r2"]["mask"]["before"]["mean"]);
  CHECK(fs::exists(root / "ev" / "scatter_before.csv"));

  const json rg = json::parse(register_command(
      {root / "ph" / "frame_00", root / "ph" / "frame_03", root / "rg" / "u",
       root / "rg" / "w", root / "rg" / "report.json"},
      cfg, true));
  CHECK(rg.contains("energy_trace"));
  CHECK(rg.contains("final_mi"));
  CHECK(fs::exists(root / "rg" / "u.raw"));
  CHECK(fs::exists(root / "rg" / "w.raw"));

  CHECK_THROWS_AS(fit_command(root / "missing.json", root / "x"), Error);
  fs::remove_all(root);
}

}  // TEST_SUITE
