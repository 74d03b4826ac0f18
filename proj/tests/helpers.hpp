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

#ifndef JAL_TESTS_HELPERS_HPP_
#define JAL_TESTS_HELPERS_HPP_

#include <vector>

#include "jal/auction.hpp"
#include "jal/datagen.hpp"

namespace jal::testing {

inline std::vector<double> ctx(std::size_t type_slot) {
  std::vector<double> c(ContextConfig{}.dim(), 0.25);
  for (std::size_t t = 0; t < kTypeFeatures; ++t)
    c[ContextConfig{}.continuous_dims + t] = t == type_slot ? 1.0 : 0.0;
  return c;
}

inline Advertiser ad(AdvertiserType kind, BidPair value, double ue = 0.0) {
  std::size_t slot = kind == AdvertiserType::kStore ? 0
                     : kind == AdvertiserType::kBrand ? 1
                                                       : 2;
  return Advertiser{kind, value, ue, ctx(slot)};
}

inline Advertiser store(double v, double ue = 0.0) {
  return ad(AdvertiserType::kStore, {v, 0.0}, ue);
}
inline Advertiser brand(double v, double ue = 0.0) {
  return ad(AdvertiserType::kBrand, {0.0, v}, ue);
}
inline Advertiser joint(double s, double b, double ue = 0.0) {
  return ad(AdvertiserType::kJoint, {s, b}, ue);
}
inline OrganicItem organic(double ue) { return OrganicItem{ue, ctx(3)}; }

inline AuctionInstance instance(std::vector<double> ctrs,
                                std::vector<Advertiser> ads,
                                std::vector<OrganicItem> organics = {}) {
  AuctionInstance inst;
  inst.slots = SlotProfile(std::move(ctrs));
  inst.advertisers = std::move(ads);
  inst.organics = std::move(organics);
  return inst;
}

// Gives advertiser 0 the top slot and charges half its bid per click.
class HalfPriceMechanism : public Mechanism {
 public:
  std::string name() const override { return "half-price"; }
  Outcome run(const AuctionInstance& inst,
              std::span<const BidPair> bids) const override {
    Outcome o;
    o.soft_alloc = Matrix::Zero(inst.num_items(), inst.num_slots());
    o.soft_alloc(0, 0) = 1.0;
    o.payments.assign(inst.num_ads(), BidPair{});
    o.payments[0] = {0.5 * bids[0].store * inst.slots[0],
                     0.5 * bids[0].brand * inst.slots[0]};
    return o;
  }
};

}  // namespace jal::testing

#endif  // JAL_TESTS_HELPERS_HPP_
