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

// Core model of a joint ad auction: K slots with click-through rates,
// advertisers of store/brand/joint type bidding value pairs, and organic
// items competing for the same slots on user experience alone.

#ifndef JAL_AUCTION_HPP_
#define JAL_AUCTION_HPP_

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jal {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Click-through rates alpha_1 >= ... >= alpha_K, all in [0, 1].
class SlotProfile {
 public:
  SlotProfile() = default;
  explicit SlotProfile(std::vector<double> ctrs);

  std::size_t size() const { return ctrs_.size(); }
  double operator[](std::size_t k) const { return ctrs_[k]; }
  const std::vector<double>& ctrs() const { return ctrs_; }

 private:
  std::vector<double> ctrs_;
};

enum class AdvertiserType { kStore, kBrand, kJoint };

std::string_view to_string(AdvertiserType t);
AdvertiserType advertiser_type_from_string(std::string_view s);

// Per-click value or bid split into (store, brand) components.
struct BidPair {
  double store = 0.0;
  double brand = 0.0;

  double total() const { return store + brand; }
  double operator[](int j) const { return j == 0 ? store : brand; }
  double& operator[](int j) { return j == 0 ? store : brand; }
  friend bool operator==(const BidPair&, const BidPair&) = default;
};

// True if `b` has the shape implied by `t`: store -> (x, 0), brand -> (0, x).
bool matches_type(AdvertiserType t, const BidPair& b);
// Zeroes the component a type cannot carry and clamps into [lo, hi].
BidPair project_to_type(AdvertiserType t, BidPair b, double lo, double hi);

struct Advertiser {
  AdvertiserType kind = AdvertiserType::kStore;
  BidPair value;
  double ue = 0.0;
  std::vector<double> context;
};

struct OrganicItem {
  double ue = 0.0;
  std::vector<double> context;
};

// Rows of every allocation matrix are ordered advertisers first, then
// organic items.
struct AuctionInstance {
  SlotProfile slots;
  std::vector<Advertiser> advertisers;
  std::vector<OrganicItem> organics;

  std::size_t num_ads() const { return advertisers.size(); }
  std::size_t num_organics() const { return organics.size(); }
  std::size_t num_items() const { return advertisers.size() + organics.size(); }
  std::size_t num_slots() const { return slots.size(); }

  // Truthful bid profile (each advertiser bids its value).
  std::vector<BidPair> truthful_bids() const;
  // ue of row i, advertisers first.
  double item_ue(std::size_t i) const;

  // Throws DimensionError/DomainError when an invariant is broken.
  void validate(std::size_t context_dim) const;
};

struct Outcome {
  Matrix soft_alloc;                // (m+n) x K, entries in [0,1]
  std::optional<Matrix> hard_alloc;  // binary, feasible when present
  std::vector<BidPair> payments;    // one per advertiser

  // a_i = sum_k alloc(i,k) * alpha_k, taken from soft_alloc.
  double expected_ctr(std::size_t item, const SlotProfile& slots) const;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<std::string> violations;
};

struct Metrics {
  double sw = 0.0;
  double rev = 0.0;
  double ue = 0.0;
  double score = 0.0;
};

// Sum_k alloc_row[k] * alpha_k.
double expected_ctr(std::span<const double> alloc_row,
                    const SlotProfile& slots);

// Rows may sum to at most one, every column must sum to exactly one.
FeasibilityReport check_feasibility(const Matrix& hard_alloc);

// Row and column sums <= 1 + tol and entries in [-tol, 1 + tol].
bool is_doubly_substochastic(const Matrix& alloc, double tol = 1e-6);

// Quasi-linear utility, value read componentwise:
// sum_j (value_j * a_i - payment_j).
double utility(const BidPair& value, std::span<const double> alloc_row,
               const SlotProfile& slots, const BidPair& payment);

// Utility of advertiser i in `outcome` given its true value.
double advertiser_utility(const AuctionInstance& inst, const Outcome& outcome,
                          std::size_t i);

Metrics sample_metrics(const AuctionInstance& inst, const Outcome& outcome,
                       double gamma);
Metrics metrics(std::span<const Outcome> outcomes,
                std::span<const AuctionInstance> instances, double gamma);

class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual std::string name() const = 0;
  // Runs the auction on reported bids; instance values are not consulted.
  virtual Outcome run(const AuctionInstance& inst,
                      std::span<const BidPair> bids) const = 0;
};

struct RegretReport {
  enum class Method { kGradient, kGrid };
  Method method = Method::kGrid;
  std::vector<double> per_advertiser;  // mean over samples, by ad index
  double mean = 0.0;                   // mean over samples and advertisers
  double max = 0.0;                    // max single (sample, advertiser)
  std::size_t samples = 0;
};

std::string_view to_string(RegretReport::Method m);

// Utility of advertiser i when it reports `report` and everyone else bids
// truthfully.
double utility_under_report(const Mechanism& mech, const AuctionInstance& inst,
                            std::size_t i, const BidPair& report);

// Exhaustive search over a grid of type-shaped misreports in
// [0, value_hi]; returns the best utility gain over truthful bidding,
// clamped at zero.
double regret_grid_oracle(const Mechanism& mech, const AuctionInstance& inst,
                          std::size_t i, double grid_step,
                          double value_hi = 1.0);

}  // namespace jal

#endif  // JAL_AUCTION_HPP_
