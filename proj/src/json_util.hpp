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

#include <string>

#include <json.hpp>

namespace t1mc::detail {

using nlohmann::json;

/// Serializes with every floating-point number printed to 17 significant
/// digits. Non-finite numbers become null.
std::string dump_json(const json &j, int indent = 2);

/// Reads and parses a JSON file; parse failures are I/O errors naming the file.
json read_json(const std::string &path);

/// Double or null for NaN and infinities.
json number_or_null(double v);

}  // namespace t1mc::detail
