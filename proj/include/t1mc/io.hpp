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
#include <filesystem>
#include <optional>
#include <string>

#include "t1mc/series.hpp"
#include "t1mc/signal_model.hpp"
#include "t1mc/volume.hpp"

namespace t1mc {

namespace fs = std::filesystem;

/// A volume is stored as `<base>.json` (header) plus `<base>.raw` (f32le,
/// x-fastest). Paths may name the base, the header or the payload.
void save_volume(const Volume3 &vol, const fs::path &base,
                 std::array<double, 3> spacing = {1.0, 1.0, 1.0});
Volume3 load_volume(const fs::path &path);

/// Fields use the same header plus a component list; the payload holds the
/// ux, uy and uz planes back to back.
void save_field(const DisplacementField &field, const fs::path &base);
DisplacementField load_field(const fs::path &path);

/// Masks are volumes with values 0 and 1; any non-zero voxel loads as set.
void save_mask(const Mask &mask, Dims dims, const fs::path &base);
Mask load_mask(const fs::path &path);

/// Writes frame_00 ... next to `series.json` in `dir`. The infinite time is the
/// string "inf". A non-empty mask is written as `mask` and referenced from the
/// manifest. Returns the manifest path.
fs::path save_series(const T1Series &series, const fs::path &dir, const Mask &mask = {});
T1Series load_series(const fs::path &manifest);
/// The mask referenced by a manifest, if it has one.
std::optional<Mask> load_series_mask(const fs::path &manifest);

/// m0, t1, r2 and valid volumes plus `maps.json`.
void save_maps(const ParameterMaps &maps, const fs::path &dir);
ParameterMaps load_maps(const fs::path &dir);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const fs::path &path, const std::string &bytes);
std::string read_file(const fs::path &path);

}  // namespace t1mc
