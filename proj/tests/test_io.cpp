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
#include <fstream>
#include <json.hpp>
#include <cstring>
#include <functional>
#include <unistd.h>

#include "t1mc/error.hpp"
#include "t1mc/io.hpp"
#include "t1mc/phantom.hpp"
#include "test_util.hpp"

using namespace t1mc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / ("t1mc_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

T1Series phantom_series() {
  PhantomSpec spec;
  spec.dims = {32, 32, 4};
  const GroundTruth gt = make_phantom(spec);
  return apply_motion(synth_series(gt, inversion_schedule(135, 350, 1000)), spec).series;
}

ErrorKind kind_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("volume round trip and header layout") {
  TempDir tmp("vol");
  Volume3 v = testutil::random_volume({5, 4, 3}, 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(v[i]);
  save_volume(v, tmp.path / "a", {1.5, 1.5, 8.0});
  CHECK(load_volume(tmp.path / "a") == v);
  CHECK(load_volume(tmp.path / "a.json") == v);
  CHECK(load_volume(tmp.path / "a.raw") == v);
  CHECK(fs::file_size(tmp.path / "a.raw") == 4 * v.size());

  std::ifstream in(tmp.path / "a.json");
  const auto h = nlohmann::json::parse(in);
  CHECK(h["dims"] == nlohmann::json::array({5, 4, 3}));
  CHECK(h["spacing"][2] == 8.0);
  CHECK(h["dtype"] == "f32le");
  CHECK(h["order"] == "x-fastest");

  // First voxel, little-endian f32.
  std::ifstream raw(tmp.path / "a.raw", std::ios::binary);
  unsigned char b[4];
  raw.read(reinterpret_cast<char *>(b), 4);
  const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  CHECK(f == static_cast<float>(v[0]));
}

TEST_CASE("field and mask round trip") {
  TempDir tmp("field");
  DisplacementField u = testutil::random_field({6, 5, 2}, 2, 3.0);
  for (int c = 0; c < 3; ++c)
    for (auto &x : u.component(c)) x = static_cast<float>(x);
  save_field(u, tmp.path / "u");
  CHECK(load_field(tmp.path / "u") == u);
  CHECK(fs::file_size(tmp.path / "u.raw") == 3 * 4 * 60);
  std::ifstream in(tmp.path / "u.json");
  CHECK(nlohmann::json::parse(in)["components"] == nlohmann::json::array({"ux", "uy", "uz"}));

  Mask m(60, 0);
  for (std::size_t i = 0; i < 60; i += 4) m[i] = 1;
  save_mask(m, {6, 5, 2}, tmp.path / "m");
  CHECK(load_mask(tmp.path / "m") == m);
}

TEST_CASE("series round trip is bit-exact") {
  TempDir tmp("series");
  T1Series s = phantom_series();
  s.provenance = R"({"source":"test"})";
  Mask m(s.dims().count(), 0);
  m[17] = 1;
  const fs::path manifest = save_series(s, tmp.path / "s", m);
  CHECK(manifest.filename() == "series.json");
  const T1Series back = load_series(manifest);
  REQUIRE(back.size() == 11);
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(back.frames[k] == s.frames[k]);
    CHECK(back.times[k] == s.times[k]);
  }
  CHECK(back.times.back().is_infinite());
  CHECK(load_series_mask(manifest).value() == m);

  std::ifstream in(manifest);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["frames"].size() == 11);
  CHECK(j["frames"][10]["time_ms"] == "inf");
  CHECK(j["frames"][0]["time_ms"] == 135.0);
}

TEST_CASE("series error paths") {
  TempDir tmp("series_err");
  const T1Series s = phantom_series();
  const fs::path manifest = save_series(s, tmp.path / "s");
  CHECK_FALSE(load_series_mask(manifest).has_value());

  auto write_manifest = [&](const nlohmann::json &j) {
    const fs::path p = tmp.path / "s" / "edited.json";
    std::ofstream(p) << j.dump();
    return p;
  };
  std::ifstream in(manifest);
  const auto base = nlohmann::json::parse(in);

  auto dup = base;
  dup["frames"][0]["time_ms"] = "inf";
  CHECK(kind_of([&] { load_series(write_manifest(dup)); }) == ErrorKind::Io);

  auto missing = base;
  missing["frames"][1]["file"] = "nope";
  CHECK(kind_of([&] { load_series(write_manifest(missing)); }) == ErrorKind::Io);

  auto neg = base;
  neg["frames"][2]["time_ms"] = -4.0;
  CHECK(kind_of([&] { load_series(write_manifest(neg)); }) == ErrorKind::Io);

  {
    const fs::path other = save_series(s, tmp.path / "t");
    const fs::path raw = tmp.path / "t" / "frame_03.raw";
    fs::resize_file(raw, fs::file_size(raw) - 4);
    try {
      load_series(other);
      FAIL("expected a size mismatch");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::Io);
      CHECK(std::string(e.what()).find("frame_03.raw") != std::string::npos);
    }
  }

  CHECK(kind_of([&] { load_series(tmp.path / "absent.json"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { load_volume(tmp.path / "absent"); }) == ErrorKind::Io);
}

TEST_CASE("maps round trip") {
  TempDir tmp("maps");
  PhantomSpec spec;
  spec.dims = {32, 32, 2};
  const GroundTruth gt = make_phantom(spec);
  const ParameterMaps m = fit_volume(synth_series(gt, inversion_schedule(135, 350, 1000)), gt.mask);
  save_maps(m, tmp.path / "fit");
  const ParameterMaps back = load_maps(tmp.path / "fit");
  CHECK(back.dims == m.dims);
  CHECK(back.valid == m.valid);
  for (std::size_t i = 0; i < m.m0.size(); ++i) {
    CHECK(back.t1[i] == static_cast<float>(m.t1[i]));
    CHECK(back.r2[i] == static_cast<float>(m.r2[i]));
  }
}

TEST_CASE("atomic writes leave no temporaries") {
  TempDir tmp("atomic");
  write_file_atomic(tmp.path / "x.txt", "first");
  write_file_atomic(tmp.path / "x.txt", "second");
  CHECK(read_file(tmp.path / "x.txt") == "second");
  std::size_t files = 0;
  for (const auto &e : fs::directory_iterator(tmp.path)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);  // counted before the nested write
  write_file_atomic(tmp.path / "sub" / "dir" / "x.txt", "y");
  CHECK(read_file(tmp.path / "sub" / "dir" / "x.txt") == "y");
}

}  // TEST_SUITE
