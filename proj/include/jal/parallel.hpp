// Copyright 2026 The Joint Auction Lab Authors.
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

#ifndef JAL_PARALLEL_HPP_
#define JAL_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace jal {

// Worker count used by parallel_for; 1 runs inline.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Calls fn(i) for i in [0, n) over contiguous blocks. The first exception
// thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jal

#endif  // JAL_PARALLEL_HPP_
