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
#include <memory>
#include <vector>

#include "t1mc/metrics.hpp"

namespace t1mc::detail {

/// Block-local MI against one fixed image. The block tiling and the fixed
/// image's Parzen windows are computed once, so repeated evaluations against
/// changing warped images only bin the warped side.
class LocalMI {
 public:
  LocalMI(const Volume3 &fixed, const MIConfig &cfg);

  /// Negative mean block MI; fills d_loss (dims-sized) when non-null.
  double loss(const Volume3 &warped, std::vector<double> *d_loss) const;

  std::size_t blocks() const;

 private:
  MIConfig cfg_;
  Dims dims_;
  std::array<int, 3> nb_{};
  std::size_t per_block_ = 0;
  std::vector<std::size_t> order_;  // voxel indices, block by block
  std::vector<double> fixed_;       // fixed intensities in block order
  std::vector<char> flat_;          // fixed block is constant: MI is 0 whatever the warped side
  std::shared_ptr<const void> fixed_windows_;
};

}  // namespace t1mc::detail
