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
#include <vector>

#include "t1mc/volume.hpp"

namespace t1mc {

/// An inversion time in milliseconds, or the fully-recovered t = infinity frame.
class TimePoint {
 public:
  TimePoint() = default;
  static TimePoint at(double ms);
  static TimePoint infinite() { return TimePoint(0.0, true); }

  bool is_infinite() const { return infinite_; }
  /// Milliseconds; +inf for the infinite time point.
  double ms() const;

  friend bool operator==(const TimePoint &, const TimePoint &) = default;

 private:
  TimePoint(double ms, bool inf) : ms_(ms), infinite_(inf) {}
  double ms_ = 0.0;
  bool infinite_ = false;
};

/// Checks the TimePoint list rules: finite values > 0, at most one infinite.
void validate_times(const std::vector<TimePoint> &times);

struct T1Series {
  std::vector<Volume3> frames;
  std::vector<TimePoint> times;
  std::string provenance;  // free-form JSON text carried through manifests

  std::size_t size() const { return frames.size(); }
  const Dims &dims() const { return frames.front().dims(); }
  /// Throws unless frames share dims, lengths match and times are valid.
  void validate() const;
};

struct NormalizedSeries {
  T1Series series;
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;

  /// Maps a normalized intensity back to the source range.
  double restore(double v) const { return degenerate ? min : min + v * (max - min); }
};

/// One min-max affine map fitted over all frames jointly.
NormalizedSeries normalize_series(const T1Series &series);

}  // namespace t1mc
