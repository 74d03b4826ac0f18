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

// Reference mechanisms: VCG over the hybrid list, GSP with fixed ad
// positions, and the Myerson-style integrated ad sorting (IAS).

#ifndef JAL_BASELINES_HPP_
#define JAL_BASELINES_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jal/auction.hpp"
#include "jal/datagen.hpp"
#include "jal/distributions.hpp"

namespace jal {

// Welfare-maximising allocation of ads and organic items where an item's
// score is its total bid plus gamma * ue (organics: gamma * ue). Clarke
// pivot payments charge only the bid part; payments split across the bid
// components proportionally.
Outcome vcg(const AuctionInstance& inst, std::span<const BidPair> bids,
            double gamma);

class VcgMechanism : public Mechanism {
 public:
  explicit VcgMechanism(double gamma) : gamma_(gamma) {}
  std::string name() const override { return "vcg"; }
  Outcome run(const AuctionInstance& inst,
              std::span<const BidPair> bids) const override {
    return vcg(inst, bids, gamma_);
  }

 private:
  double gamma_;
};

struct GspConfig {
  std::vector<std::size_t> positions;  // 1-based slot indices reserved for ads
  double reserve = 0.0;

  // Top ceil(K/2) odd slots: 1, 3, 5, ...
  static GspConfig defaults(std::size_t num_slots);
  void validate(std::size_t num_slots) const;
};

Outcome gsp_fixed_positions(const AuctionInstance& inst,
                            std::span<const BidPair> bids, const GspConfig& cfg);

class GspMechanism : public Mechanism {
 public:
  explicit GspMechanism(std::optional<GspConfig> cfg = std::nullopt)
      : cfg_(std::move(cfg)) {}
  std::string name() const override { return "gsp"; }
  Outcome run(const AuctionInstance& inst,
              std::span<const BidPair> bids) const override;

 private:
  std::optional<GspConfig> cfg_;  // defaults(K) when unset
};

// Prior over an advertiser's total bid: either a single component law or the
// sum of two independent draws from it (joint advertisers).
class ValuePrior {
 public:
  ValuePrior() = default;
  static ValuePrior of(DistributionSpec spec);
  static ValuePrior sum_of_two(DistributionSpec spec);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double cdf(double v) const;
  double pdf(double v) const;
  std::string describe() const;
  // Throws NumericError unless phi is non-decreasing on a scan of the
  // support interior.
  void check_regular() const;

 private:
  enum class Kind { kSingle, kSumOfTwo };
  Kind kind_ = Kind::kSingle;
  DistributionSpec spec_;
  double lo_ = 0.0, hi_ = 1.0;
  // Tabulated density/cdf of the sum for non-uniform components.
  std::vector<double> grid_pdf_, grid_cdf_;
};

// v - (1 - F(v)) / f(v). Throws DomainError where f(v) = 0.
double myerson_virtual_value(double v, const ValuePrior& prior);

// One prior per advertiser type over the total bid.
struct IasPriors {
  ValuePrior store, brand, joint;

  // Store and brand bid one component; joint bids the sum of two.
  static IasPriors from_component(const DistributionSpec& component);
  const ValuePrior& for_type(AdvertiserType t) const;
};

// Ads score phi_i(total bid) + gamma * ue_i, organics gamma * ue_j; the top K
// scores take the slots in order, ties to the lower row index. A winning ad
// pays, per click, the smallest total bid that keeps its score at least the
// score of the next-ranked item.
Outcome ias(const AuctionInstance& inst, std::span<const BidPair> bids,
            double gamma, const IasPriors& priors);

class IasMechanism : public Mechanism {
 public:
  IasMechanism(double gamma, IasPriors priors);
  std::string name() const override { return "ias"; }
  Outcome run(const AuctionInstance& inst,
              std::span<const BidPair> bids) const override {
    return ias(inst, bids, gamma_, priors_);
  }
  const IasPriors& priors() const { return priors_; }

 private:
  double gamma_;
  IasPriors priors_;
};

// Maximum-likelihood truncated lognormal over [lo, hi] (industrial priors).
TruncatedLognormalMixture fit_truncated_lognormal(const std::vector<double>& xs,
                                                  double lo, double hi);

}  // namespace jal

#endif  // JAL_BASELINES_HPP_
