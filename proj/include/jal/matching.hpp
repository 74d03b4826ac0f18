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

#ifndef JAL_MATCHING_HPP_
#define JAL_MATCHING_HPP_

#include <vector>

#include "jal/auction.hpp"

namespace jal {

struct Assignment {
  std::vector<std::size_t> item_of_slot;  // one distinct item per slot
  double value = 0.0;
};

// Maximum-weight assignment of every column (slot) to a distinct row (item)
// with the Hungarian method. Requires rows >= cols.
Assignment max_weight_assignment(const Matrix& weights);

// Binary allocation maximising sum(hard .* soft) with every slot filled and
// no item used twice. Among optimal assignments the one whose item vector
// (slot 0 first) is lexicographically smallest is returned.
Matrix round_allocation(const Matrix& soft);

}  // namespace jal

#endif  // JAL_MATCHING_HPP_
