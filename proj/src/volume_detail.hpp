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

#include "t1mc/volume.hpp"

namespace t1mc::detail {

struct AxisInterp {
  int i0 = 0;
  int i1 = 0;
  double f = 0.0;
  bool clamped = false;
};

AxisInterp axis_interp(double c, int n);

double sample(const double *data, const Dims &d, double x, double y, double z);
double sample_grad(const double *data, const Dims &d, double x, double y, double z,
                   std::array<double, 3> &grad);

}  // namespace t1mc::detail
