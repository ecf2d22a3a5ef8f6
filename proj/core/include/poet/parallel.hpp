// Copyright 2026 The POET Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fixed-partition fan-out for independent work items. Each index writes only
// its own output slot, so results do not depend on the thread count.

#ifndef POET_PARALLEL_HPP_
#define POET_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace poet {

/// Worker count: POET_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n). Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace poet

#endif  // POET_PARALLEL_HPP_
