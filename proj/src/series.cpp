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

#include "t1mc/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "t1mc/error.hpp"

namespace t1mc {

TimePoint TimePoint::at(double ms) {
  require(std::isfinite(ms) && ms > 0.0,
          "time point must be finite and positive, got " + std::to_string(ms));
  return TimePoint(ms, false);
}

double TimePoint::ms() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : ms_;
}

void validate_times(const std::vector<TimePoint> &times) {
  int n_inf = 0;
  for (const auto &t : times) {
    if (t.is_infinite()) {
      ++n_inf;
    } else {
      require(std::isfinite(t.ms()) && t.ms() > 0.0, "time points must be positive");
    }
  }
  require(n_inf <= 1, "at most one infinite time point is allowed");
}

void T1Series::validate() const {
  require(!frames.empty(), "series has no frames");
  require(frames.size() == times.size(),
          "series has " + std::to_string(frames.size()) + " frames but " +
              std::to_string(times.size()) + " time points");
  for (const auto &f : frames) require(f.dims() == frames.front().dims(), "series frames differ in dims");
  validate_times(times);
}

NormalizedSeries normalize_series(const T1Series &series) {
  series.validate();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto &f : series.frames) {
    const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }

  NormalizedSeries out;
  out.min = lo;
  out.max = hi;
  out.degenerate = !(hi > lo);
  out.series.times = series.times;
  out.series.provenance = series.provenance;
  out.series.frames.reserve(series.size());
  const double span = hi - lo;
  for (const auto &f : series.frames) {
    Volume3 g(f.dims());
    if (!out.degenerate) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        // Pin the extremes so min maps to exactly 0 and max to exactly 1.
        const double v = f[i];
        g[i] = v == hi ? 1.0 : (v - lo) / span;
      }
    }
    out.series.frames.push_back(std::move(g));
  }
  return out;
}

}  // namespace t1mc
