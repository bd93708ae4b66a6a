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

#include "t1mc/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "json_util.hpp"
#include "t1mc/error.hpp"

namespace t1mc {

using detail::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

fs::path base_of(const fs::path &p) {
  const auto ext = p.extension();
  if (ext == ".json" || ext == ".raw") return fs::path(p).replace_extension();
  return p;
}

fs::path with_ext(const fs::path &base, const char *ext) {
  return fs::path(base.string() + ext);
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void append_f32(std::string &out, const std::vector<double> &values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    std::memcpy(out.data() + start + i * 4, &bits, 4);
  }
}

std::vector<double> parse_f32(const std::string &bytes, std::size_t offset, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + offset + i * 4, 4);
    v[i] = static_cast<double>(std::bit_cast<float>(to_le(bits)));
  }
  return v;
}

json header_for(Dims d, std::array<double, 3> spacing) {
  return json{{"dims", {d.nx, d.ny, d.nz}},
              {"spacing", {spacing[0], spacing[1], spacing[2]}},
              {"dtype", "f32le"},
              {"order", "x-fastest"}};
}

Dims parse_header(const json &h, const fs::path &path, int components) {
  try {
    if (h.at("dtype").get<std::string>() != "f32le") {
      fail(ErrorKind::Io, path.string() + ": unsupported dtype " + h.at("dtype").dump());
    }
    if (h.contains("order") && h.at("order").get<std::string>() != "x-fastest") {
      fail(ErrorKind::Io, path.string() + ": unsupported order " + h.at("order").dump());
    }
    const auto &d = h.at("dims");
    if (!d.is_array() || d.size() != 3) fail(ErrorKind::Io, path.string() + ": dims must have 3 entries");
    const Dims dims{d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
    if (!dims.valid()) fail(ErrorKind::Io, path.string() + ": dims must be positive");
    const int found = h.contains("components") ? static_cast<int>(h.at("components").size()) : 1;
    if (found != components) {
      fail(ErrorKind::Io, path.string() + ": expected " + std::to_string(components) +
                              " component(s), header declares " + std::to_string(found));
    }
    return dims;
  } catch (const json::exception &e) {
    fail(ErrorKind::Io, path.string() + ": malformed header (" + e.what() + ")");
  }
}

// Loads header and payload; returns dims and the flat payload values.
std::pair<Dims, std::vector<double>> load_raw(const fs::path &path, int components) {
  const fs::path base = base_of(path);
  const fs::path hdr = with_ext(base, ".json");
  const fs::path raw = with_ext(base, ".raw");
  const Dims dims = parse_header(detail::read_json(hdr.string()), hdr, components);
  const std::string bytes = read_file(raw);
  const std::size_t n = dims.count() * static_cast<std::size_t>(components);
  if (bytes.size() != n * 4) {
    fail(ErrorKind::Io, raw.string() + ": payload size mismatch (" + std::to_string(bytes.size()) +
                            " bytes, header implies " + std::to_string(n * 4) + ")");
  }
  std::vector<double> v = parse_f32(bytes, 0, n);
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::Io, raw.string() + ": non-finite value in payload");
  }
  return {dims, std::move(v)};
}

void save_raw(const fs::path &base_in, const json &header, const std::vector<const std::vector<double> *> &planes) {
  const fs::path base = base_of(base_in);
  std::string payload;
  for (const auto *p : planes) append_f32(payload, *p);
  write_file_atomic(with_ext(base, ".raw"), payload);
  write_file_atomic(with_ext(base, ".json"), detail::dump_json(header));
}

std::string frame_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%02zu", k);
  return buf;
}

}  // namespace

void write_file_atomic(const fs::path &path, const std::string &bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = fs::path(path.string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      fail(ErrorKind::Io, "write failed for " + path.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "read failed for " + path.string());
  return ss.str();
}

void save_volume(const Volume3 &vol, const fs::path &base, std::array<double, 3> spacing) {
  require(vol.dims().valid(), "save_volume: empty volume");
  save_raw(base, header_for(vol.dims(), spacing), {&vol.values()});
}

Volume3 load_volume(const fs::path &path) {
  auto [dims, v] = load_raw(path, 1);
  return Volume3(dims, std::move(v));
}

void save_field(const DisplacementField &field, const fs::path &base) {
  require(field.dims().valid(), "save_field: empty field");
  json h = header_for(field.dims(), {1.0, 1.0, 1.0});
  h["components"] = {"ux", "uy", "uz"};
  save_raw(base, h, {&field.component(0), &field.component(1), &field.component(2)});
}

DisplacementField load_field(const fs::path &path) {
  auto [dims, v] = load_raw(path, 3);
  const std::size_t n = dims.count();
  const auto cut = [&](std::size_t c) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(c * n),
                               v.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
  };
  return DisplacementField(dims, cut(0), cut(1), cut(2));
}

void save_mask(const Mask &mask, Dims dims, const fs::path &base) {
  require(mask.size() == dims.count(), "save_mask: mask size does not match dims");
  Volume3 v(dims);
  for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 1.0 : 0.0;
  save_volume(v, base);
}

Mask load_mask(const fs::path &path) {
  const Volume3 v = load_volume(path);
  Mask m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] != 0.0 ? 1 : 0;
  return m;
}

fs::path save_series(const T1Series &series, const fs::path &dir, const Mask &mask) {
  series.validate();
  json frames = json::array();
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string name = frame_name(k);
    save_volume(series.frames[k], dir / name);
    const TimePoint &t = series.times[k];
    frames.push_back({{"file", name}, {"time_ms", t.is_infinite() ? json("inf") : json(t.ms())}});
  }
  json m{{"format", "t1mc-series"}, {"version", 1}, {"frames", frames}};
  if (!mask.empty()) {
    save_mask(mask, series.dims(), dir / "mask");
    m["mask"] = "mask";
  }
  if (!series.provenance.empty()) {
    json p = json::parse(series.provenance, nullptr, false);
    m["provenance"] = p.is_discarded() ? json(series.provenance) : p;
  }
  const fs::path manifest = dir / "series.json";
  write_file_atomic(manifest, detail::dump_json(m));
  return manifest;
}

T1Series load_series(const fs::path &manifest) {
  const json m = detail::read_json(manifest.string());
  const fs::path dir = manifest.parent_path();
  T1Series s;
  try {
    const auto &frames = m.at("frames");
    if (!frames.is_array() || frames.empty()) fail(ErrorKind::Io, manifest.string() + ": no frames");
    int n_inf = 0;
    for (const auto &f : frames) {
      const auto &t = f.at("time_ms");
      if (t.is_string()) {
        if (t.get<std::string>() != "inf") {
          fail(ErrorKind::Io, manifest.string() + ": time must be a number or \"inf\", got " + t.dump());
        }
        if (++n_inf > 1) fail(ErrorKind::Io, manifest.string() + ": duplicate infinite time point");
        s.times.push_back(TimePoint::infinite());
      } else {
        const double ms = t.get<double>();
        if (!(std::isfinite(ms) && ms > 0.0)) {
          fail(ErrorKind::Io, manifest.string() + ": time must be positive, got " + t.dump());
        }
        s.times.push_back(TimePoint::at(ms));
      }
      s.frames.push_back(load_volume(dir / f.at("file").get<std::string>()));
    }
    if (m.contains("provenance") && !m.at("provenance").is_null()) {
      const auto &p = m.at("provenance");
      s.provenance = p.is_string() ? p.get<std::string>() : p.dump();
    }
  } catch (const json::exception &e) {
    fail(ErrorKind::Io, manifest.string() + ": malformed manifest (" + e.what() + ")");
  }
  for (const auto &f : s.frames) {
    if (!(f.dims() == s.frames.front().dims())) {
      fail(ErrorKind::Io, manifest.string() + ": frames differ in dims");
    }
  }
  return s;
}

std::optional<Mask> load_series_mask(const fs::path &manifest) {
  const json m = detail::read_json(manifest.string());
  if (!m.contains("mask") || !m.at("mask").is_string()) return std::nullopt;
  return load_mask(manifest.parent_path() / m.at("mask").get<std::string>());
}

void save_maps(const ParameterMaps &maps, const fs::path &dir) {
  save_volume(maps.m0, dir / "m0");
  save_volume(maps.t1, dir / "t1");
  save_volume(maps.r2, dir / "r2");
  save_mask(maps.valid, maps.dims, dir / "valid");
  const json m{{"format", "t1mc-maps"},
               {"version", 1},
               {"dims", {maps.dims.nx, maps.dims.ny, maps.dims.nz}},
               {"files", {{"m0", "m0"}, {"t1", "t1"}, {"r2", "r2"}, {"valid", "valid"}}}};
  write_file_atomic(dir / "maps.json", detail::dump_json(m));
}

ParameterMaps load_maps(const fs::path &dir) {
  const json m = detail::read_json((dir / "maps.json").string());
  ParameterMaps p;
  try {
    const auto &f = m.at("files");
    p.m0 = load_volume(dir / f.at("m0").get<std::string>());
    p.t1 = load_volume(dir / f.at("t1").get<std::string>());
    p.r2 = load_volume(dir / f.at("r2").get<std::string>());
    p.valid = load_mask(dir / f.at("valid").get<std::string>());
  } catch (const json::exception &e) {
    fail(ErrorKind::Io, (dir / "maps.json").string() + ": malformed (" + e.what() + ")");
  }
  p.dims = p.m0.dims();
  if (!(p.t1.dims() == p.dims && p.r2.dims() == p.dims && p.valid.size() == p.dims.count())) {
    fail(ErrorKind::Io, dir.string() + ": parameter maps differ in dims");
  }
  return p;
}

}  // namespace t1mc
