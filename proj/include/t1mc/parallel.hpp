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

#include <cstddef>
#include <functional>

namespace t1mc {

/// Caps worker threads used by parallel_for. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(chunk) for chunk in [0, n_chunks). Chunks are claimed dynamically,
/// so callers must make each chunk write disjoint outputs and perform any
/// reduction afterwards in chunk order; results are then independent of the
/// thread count.
void parallel_for(std::size_t n_chunks, const std::function<void(std::size_t)> &fn);

/// Fixed chunking of [0, n) into ranges of `grain` items.
struct ChunkRange {
  std::size_t begin;
  std::size_t end;
};

inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
  return (n + grain - 1) / grain;
}

inline ChunkRange chunk_at(std::size_t n, std::size_t grain, std::size_t chunk) {
  const std::size_t b = chunk * grain;
  const std::size_t e = b + grain < n ? b + grain : n;
  return {b, e};
}

}  // namespace t1mc
