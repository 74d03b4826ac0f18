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

#ifndef JAL_DISTRIBUTIONS_HPP_
#define JAL_DISTRIBUTIONS_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace jal {

using Rng = std::mt19937_64;

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct TruncatedNormal {
  double mean = 0.5;
  double sd = 0.5;
  double lo = 0.0;
  double hi = 1.0;
};

// Equal-weight mixture of lognormals exp(N(mu, sigma)), the whole mixture
// truncated to [lo, hi].
struct TruncatedLognormalMixture {
  std::vector<std::pair<double, double>> components;  // (mu, sigma) in log space
  double lo = 0.0;
  double hi = 1.0;
};

using DistributionSpec =
    std::variant<Uniform, TruncatedNormal, TruncatedLognormalMixture>;

void validate(const DistributionSpec& spec);
double support_lo(const DistributionSpec& spec);
double support_hi(const DistributionSpec& spec);

double sample_value(const DistributionSpec& spec, Rng& rng);

// Density and distribution function of the truncated law.
double pdf(const DistributionSpec& spec, double x);
double cdf(const DistributionSpec& spec, double x);
double mean(const DistributionSpec& spec);
double variance(const DistributionSpec& spec);

std::string describe(const DistributionSpec& spec);

// The four-component lognormal mixture used in the value-distribution study.
TruncatedLognormalMixture default_lognormal_mixture();

// Independent stream for sample `index` of a dataset seeded with `seed`.
Rng stream_for(std::uint64_t seed, std::uint64_t index);

}  // namespace jal

#endif  // JAL_DISTRIBUTIONS_HPP_
