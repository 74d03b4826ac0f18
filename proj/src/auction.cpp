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

#include "jal/auction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jal/errors.hpp"

namespace jal {

SlotProfile::SlotProfile(std::vector<double> ctrs) : ctrs_(std::move(ctrs)) {
  if (ctrs_.empty()) throw DomainError("slot profile needs at least one slot");
  for (std::size_t k = 0; k < ctrs_.size(); ++k) {
    if (!std::isfinite(ctrs_[k]) || ctrs_[k] < 0.0 || ctrs_[k] > 1.0)
      throw DomainError("ctr " + std::to_string(k) + " outside [0,1]");
    if (k > 0 && ctrs_[k] > ctrs_[k - 1])
      throw DomainError("ctrs must be non-increasing");
  }
}

std::string_view to_string(AdvertiserType t) {
  switch (t) {
    case AdvertiserType::kStore: return "store";
    case AdvertiserType::kBrand: return "brand";
    case AdvertiserType::kJoint: return "joint";
  }
  return "?";
}

AdvertiserType advertiser_type_from_string(std::string_view s) {
  if (s == "store") return AdvertiserType::kStore;
  if (s == "brand") return AdvertiserType::kBrand;
  if (s == "joint") return AdvertiserType::kJoint;
  throw DomainError("unknown advertiser type '" + std::string(s) + "'");
}

bool matches_type(AdvertiserType t, const BidPair& b) {
  if (!std::isfinite(b.store) || !std::isfinite(b.brand)) return false;
  if (b.store < 0.0 || b.brand < 0.0) return false;
  switch (t) {
    case AdvertiserType::kStore: return b.brand == 0.0;
    case AdvertiserType::kBrand: return b.store == 0.0;
    case AdvertiserType::kJoint: return true;
  }
  return false;
}

BidPair project_to_type(AdvertiserType t, BidPair b, double lo, double hi) {
  b.store = std::clamp(b.store, lo, hi);
  b.brand = std::clamp(b.brand, lo, hi);
  if (t == AdvertiserType::kStore) b.brand = 0.0;
  if (t == AdvertiserType::kBrand) b.store = 0.0;
  return b;
}

std::vector<BidPair> AuctionInstance::truthful_bids() const {
  std::vector<BidPair> bids;
  bids.reserve(advertisers.size());
  for (const auto& a : advertisers) bids.push_back(a.value);
  return bids;
}

double AuctionInstance::item_ue(std::size_t i) const {
  return i < advertisers.size() ? advertisers[i].ue
                                : organics[i - advertisers.size()].ue;
}

void AuctionInstance::validate(std::size_t context_dim) const {
  if (slots.size() == 0) throw DomainError("instance has no slots");
  if (num_items() < num_slots())
    throw DomainError("m + n = " + std::to_string(num_items()) +
                      " cannot fill K = " + std::to_string(num_slots()));
  for (std::size_t i = 0; i < advertisers.size(); ++i) {
    const auto& a = advertisers[i];
    if (!matches_type(a.kind, a.value))
      throw DomainError("advertiser " + std::to_string(i) +
                        " value does not match its type");
    if (!std::isfinite(a.ue))
      throw DomainError("advertiser " + std::to_string(i) + " ue not finite");
    if (a.context.size() != context_dim)
      throw DimensionError("advertiser " + std::to_string(i) +
                           " context dimension " +
                           std::to_string(a.context.size()) + " != " +
                           std::to_string(context_dim));
  }
  for (std::size_t j = 0; j < organics.size(); ++j) {
    if (!std::isfinite(organics[j].ue))
      throw DomainError("organic " + std::to_string(j) + " ue not finite");
    if (organics[j].context.size() != context_dim)
      throw DimensionError("organic " + std::to_string(j) +
                           " context dimension mismatch");
  }
}

double Outcome::expected_ctr(std::size_t item, const SlotProfile& slots) const {
  return jal::expected_ctr(
      std::span<const double>(soft_alloc.row(item).data(),
                              static_cast<std::size_t>(soft_alloc.cols())),
      slots);
}

double expected_ctr(std::span<const double> alloc_row,
                    const SlotProfile& slots) {
  if (alloc_row.size() != slots.size())
    throw DimensionError("allocation row has " +
                         std::to_string(alloc_row.size()) + " entries, K = " +
                         std::to_string(slots.size()));
  double a = 0.0;
  for (std::size_t k = 0; k < alloc_row.size(); ++k)
    a += alloc_row[k] * slots[k];
  return a;
}

namespace {

std::string format_sum(double s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

}  // namespace

FeasibilityReport check_feasibility(const Matrix& hard_alloc) {
  FeasibilityReport report;
  for (Eigen::Index i = 0; i < hard_alloc.rows(); ++i)
    for (Eigen::Index k = 0; k < hard_alloc.cols(); ++k) {
      double x = hard_alloc(i, k);
      if (x != 0.0 && x != 1.0)
        throw DomainError("non-binary entry at (" + std::to_string(i) + "," +
                          std::to_string(k) + ")");
    }
  for (Eigen::Index i = 0; i < hard_alloc.rows(); ++i) {
    double s = hard_alloc.row(i).sum();
    if (s > 1.0)
      report.violations.push_back("row " + std::to_string(i) + " sum " +
                                  format_sum(s));
  }
  for (Eigen::Index k = 0; k < hard_alloc.cols(); ++k) {
    double s = hard_alloc.col(k).sum();
    if (s != 1.0)
      report.violations.push_back("column " + std::to_string(k) + " sum " +
                                  format_sum(s));
  }
  report.feasible = report.violations.empty();
  return report;
}

bool is_doubly_substochastic(const Matrix& alloc, double tol) {
  if (alloc.size() == 0) return true;
  if (!alloc.allFinite()) return false;
  if (alloc.minCoeff() < -tol || alloc.maxCoeff() > 1.0 + tol) return false;
  if (alloc.rowwise().sum().maxCoeff() > 1.0 + tol) return false;
  if (alloc.colwise().sum().maxCoeff() > 1.0 + tol) return false;
  return true;
}

double utility(const BidPair& value, std::span<const double> alloc_row,
               const SlotProfile& slots, const BidPair& payment) {
  const double a = expected_ctr(alloc_row, slots);
  return (value.store * a - payment.store) + (value.brand * a - payment.brand);
}

double advertiser_utility(const AuctionInstance& inst, const Outcome& outcome,
                          std::size_t i) {
  return utility(inst.advertisers[i].value,
                 std::span<const double>(
                     outcome.soft_alloc.row(i).data(),
                     static_cast<std::size_t>(outcome.soft_alloc.cols())),
                 inst.slots, outcome.payments[i]);
}

Metrics sample_metrics(const AuctionInstance& inst, const Outcome& outcome,
                       double gamma) {
  if (static_cast<std::size_t>(outcome.soft_alloc.rows()) != inst.num_items() ||
      static_cast<std::size_t>(outcome.soft_alloc.cols()) != inst.num_slots())
    throw DimensionError("outcome shape does not match instance");
  if (outcome.payments.size() != inst.num_ads())
    throw DimensionError("payment count does not match advertiser count");
  Metrics m;
  for (std::size_t i = 0; i < inst.num_items(); ++i) {
    const double a = outcome.expected_ctr(i, inst.slots);
    if (i < inst.num_ads()) {
      m.sw += inst.advertisers[i].value.total() * a;
      m.rev += outcome.payments[i].total();
    }
    m.ue += inst.item_ue(i) * a;
  }
  m.score = m.rev + gamma * m.ue;
  return m;
}

Metrics metrics(std::span<const Outcome> outcomes,
                std::span<const AuctionInstance> instances, double gamma) {
  if (outcomes.empty()) throw DomainError("metrics over an empty batch");
  if (outcomes.size() != instances.size())
    throw DimensionError("outcomes and instances differ in length");
  if (gamma < 0.0) throw DomainError("gamma must be non-negative");
  Metrics total;
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    Metrics m = sample_metrics(instances[s], outcomes[s], gamma);
    total.sw += m.sw;
    total.rev += m.rev;
    total.ue += m.ue;
  }
  const double n = static_cast<double>(outcomes.size());
  total.sw /= n;
  total.rev /= n;
  total.ue /= n;
  total.score = total.rev + gamma * total.ue;
  return total;
}

std::string_view to_string(RegretReport::Method m) {
  return m == RegretReport::Method::kGradient ? "gradient" : "grid";
}

double utility_under_report(const Mechanism& mech, const AuctionInstance& inst,
                            std::size_t i, const BidPair& report) {
  std::vector<BidPair> bids = inst.truthful_bids();
  bids.at(i) = report;
  return advertiser_utility(inst, mech.run(inst, bids), i);
}

double regret_grid_oracle(const Mechanism& mech, const AuctionInstance& inst,
                          std::size_t i, double grid_step, double value_hi) {
  if (!(grid_step > 0.0)) throw DomainError("grid_step must be positive");
  const auto kind = inst.advertisers.at(i).kind;
  const auto points = static_cast<long>(std::floor(value_hi / grid_step + 1e-9));
  std::vector<double> grid;
  for (long g = 0; g <= points; ++g) grid.push_back(g * grid_step);
  if (grid.back() < value_hi - 1e-12) grid.push_back(value_hi);

  const double truthful = utility_under_report(mech, inst, i,
                                               inst.advertisers[i].value);
  double best = truthful;
  auto consider = [&](BidPair b) {
    best = std::max(best, utility_under_report(mech, inst, i, b));
  };
  switch (kind) {
    case AdvertiserType::kStore:
      for (double x : grid) consider({x, 0.0});
      break;
    case AdvertiserType::kBrand:
      for (double x : grid) consider({0.0, x});
      break;
    case AdvertiserType::kJoint:
      for (double x : grid)
        for (double y : grid) consider({x, y});
      break;
  }
  return std::max(0.0, best - truthful);
}

}  // namespace jal
