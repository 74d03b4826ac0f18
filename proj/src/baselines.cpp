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

#include "jal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "jal/errors.hpp"

namespace jal {
namespace {

void check_bids(const AuctionInstance& inst, std::span<const BidPair> bids) {
  if (bids.size() != inst.num_ads())
    throw DimensionError("expected " + std::to_string(inst.num_ads()) +
                         " bids, got " + std::to_string(bids.size()));
  if (inst.num_items() < inst.num_slots())
    throw DomainError("need m + n >= K, got " +
                      std::to_string(inst.num_items()) + " items for " +
                      std::to_string(inst.num_slots()) + " slots");
}

Outcome empty_outcome(const AuctionInstance& inst) {
  Outcome o;
  o.soft_alloc = Matrix::Zero(inst.num_items(), inst.num_slots());
  o.payments.assign(inst.num_ads(), BidPair{});
  return o;
}

// Splits a total payment across bid components in proportion to the bid.
BidPair split(double total, const BidPair& bid) {
  const double t = bid.total();
  if (t <= 0.0) return {0.5 * total, 0.5 * total};
  return {total * bid.store / t, total * bid.brand / t};
}

// Rows ordered by descending score, ties to the lower index.
std::vector<std::size_t> rank_by(const std::vector<double>& score) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[a] > score[b];
  });
  return order;
}

double welfare_of_top(const std::vector<double>& score,
                      const std::vector<std::size_t>& order,
                      const SlotProfile& slots, std::size_t skip) {
  double w = 0.0;
  std::size_t k = 0;
  for (std::size_t idx : order) {
    if (idx == skip) continue;
    if (k == slots.size()) break;
    w += score[idx] * slots[k++];
  }
  return w;
}

void finalize_hard(Outcome& o) { o.hard_alloc = o.soft_alloc; }

}  // namespace

Outcome vcg(const AuctionInstance& inst, std::span<const BidPair> bids,
            double gamma) {
  check_bids(inst, bids);
  const std::size_t m = inst.num_ads(), items = inst.num_items();
  const std::size_t K = inst.num_slots();
  std::vector<double> score(items);
  for (std::size_t i = 0; i < items; ++i)
    score[i] = gamma * inst.item_ue(i) + (i < m ? bids[i].total() : 0.0);
  const auto order = rank_by(score);

  Outcome o = empty_outcome(inst);
  for (std::size_t k = 0; k < K; ++k) o.soft_alloc(order[k], k) = 1.0;
  const double w_all = welfare_of_top(score, order, inst.slots, items);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t i = order[k];
    if (i >= m) continue;
    // The removal ranking is the full ranking with i skipped.
    const double w_without = welfare_of_top(score, order, inst.slots, i);
    const double own_bid = bids[i].total() * inst.slots[k];
    const double pay = w_without - (w_all - own_bid);
    o.payments[i] = split(pay, bids[i]);
  }
  finalize_hard(o);
  return o;
}

GspConfig GspConfig::defaults(std::size_t num_slots) {
  GspConfig c;
  for (std::size_t k = 1; k <= num_slots; k += 2) c.positions.push_back(k);
  return c;
}

void GspConfig::validate(std::size_t num_slots) const {
  std::vector<std::size_t> sorted = positions;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("GSP ad positions must be distinct");
  for (std::size_t p : sorted)
    if (p < 1 || p > num_slots)
      throw ConfigError("GSP ad position " + std::to_string(p) +
                        " outside [1, " + std::to_string(num_slots) + "]");
  if (reserve < 0.0) throw ConfigError("GSP reserve must be non-negative");
}

Outcome gsp_fixed_positions(const AuctionInstance& inst,
                            std::span<const BidPair> bids,
                            const GspConfig& cfg) {
  check_bids(inst, bids);
  cfg.validate(inst.num_slots());
  const std::size_t m = inst.num_ads(), n = inst.num_organics();
  const std::size_t K = inst.num_slots();

  std::vector<double> ad_score(m), org_score(n);
  for (std::size_t i = 0; i < m; ++i) ad_score[i] = bids[i].total();
  for (std::size_t j = 0; j < n; ++j) org_score[j] = inst.organics[j].ue;
  const auto ads = rank_by(ad_score);
  const auto orgs = rank_by(org_score);

  std::vector<std::size_t> positions = cfg.positions;
  std::sort(positions.begin(), positions.end());
  std::vector<long> slot_item(K, -1);
  std::size_t next_ad = 0;
  for (std::size_t p : positions) {
    if (next_ad == m) break;
    slot_item[p - 1] = static_cast<long>(ads[next_ad++]);
  }
  // Organics take the free slots by ue; spare ads fill whatever is left.
  std::size_t next_org = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (slot_item[k] >= 0) continue;
    if (next_org < n)
      slot_item[k] = static_cast<long>(m + orgs[next_org++]);
    else if (next_ad < m)
      slot_item[k] = static_cast<long>(ads[next_ad++]);
  }

  Outcome o = empty_outcome(inst);
  for (std::size_t k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(slot_item[k]);
    o.soft_alloc(i, k) = 1.0;
    if (i >= m) continue;
    const auto rank = static_cast<std::size_t>(
        std::find(ads.begin(), ads.end(), i) - ads.begin());
    const double price =
        rank + 1 < m ? std::max(cfg.reserve, ad_score[ads[rank + 1]]) : cfg.reserve;
    o.payments[i] = split(std::min(price, ad_score[i]) * inst.slots[k], bids[i]);
  }
  finalize_hard(o);
  return o;
}

Outcome GspMechanism::run(const AuctionInstance& inst,
                          std::span<const BidPair> bids) const {
  return gsp_fixed_positions(
      inst, bids, cfg_ ? *cfg_ : GspConfig::defaults(inst.num_slots()));
}

// ---------------------------------------------------------------------------
// Priors and virtual values.

ValuePrior ValuePrior::of(DistributionSpec spec) {
  validate(spec);
  ValuePrior p;
  p.kind_ = Kind::kSingle;
  p.lo_ = support_lo(spec);
  p.hi_ = support_hi(spec);
  p.spec_ = std::move(spec);
  return p;
}

ValuePrior ValuePrior::sum_of_two(DistributionSpec spec) {
  validate(spec);
  ValuePrior p;
  p.kind_ = Kind::kSumOfTwo;
  const double a = support_lo(spec), b = support_hi(spec);
  p.lo_ = 2.0 * a;
  p.hi_ = 2.0 * b;
  p.spec_ = std::move(spec);
  if (std::holds_alternative<Uniform>(p.spec_)) return p;

  // Density of X + Y on a uniform grid by quadrature, cdf by trapezoids.
  constexpr std::size_t kGrid = 2001;
  p.grid_pdf_.resize(kGrid);
  p.grid_cdf_.assign(kGrid, 0.0);
  const double h = (p.hi_ - p.lo_) / static_cast<double>(kGrid - 1);
  const DistributionSpec& s = p.spec_;
  for (std::size_t g = 0; g < kGrid; ++g) {
    const double t = p.lo_ + h * static_cast<double>(g);
    const double x0 = std::max(a, t - b), x1 = std::min(b, t - a);
    if (x1 <= x0) {
      p.grid_pdf_[g] = 0.0;
      continue;
    }
    p.grid_pdf_[g] = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double x) { return jal::pdf(s, x) * jal::pdf(s, t - x); }, x0, x1, 8,
        1e-10);
  }
  for (std::size_t g = 1; g < kGrid; ++g)
    p.grid_cdf_[g] =
        p.grid_cdf_[g - 1] + 0.5 * h * (p.grid_pdf_[g - 1] + p.grid_pdf_[g]);
  const double total = p.grid_cdf_.back();
  if (!(total > 0.0)) throw NumericError("degenerate sum-of-two prior");
  for (std::size_t g = 0; g < kGrid; ++g) {
    p.grid_pdf_[g] /= total;
    p.grid_cdf_[g] /= total;
  }
  return p;
}

double ValuePrior::cdf(double v) const {
  if (v <= lo_) return 0.0;
  if (v >= hi_) return 1.0;
  if (kind_ == Kind::kSingle) return jal::cdf(spec_, v);
  if (grid_cdf_.empty()) {
    // Triangular law of the sum of two uniforms on [a, b].
    const double w = 0.5 * (hi_ - lo_), x = v - lo_;
    return x <= w ? 0.5 * x * x / (w * w)
                  : 1.0 - 0.5 * (2.0 * w - x) * (2.0 * w - x) / (w * w);
  }
  // Integral of the piecewise-linear density, exact within a cell.
  const double h = (hi_ - lo_) / static_cast<double>(grid_pdf_.size() - 1);
  const double pos = (v - lo_) / h;
  const auto g = std::min(static_cast<std::size_t>(pos), grid_pdf_.size() - 2);
  const double d = v - (lo_ + h * static_cast<double>(g));
  const double slope = (grid_pdf_[g + 1] - grid_pdf_[g]) / h;
  return std::min(1.0, grid_cdf_[g] + grid_pdf_[g] * d + 0.5 * slope * d * d);
}

double ValuePrior::pdf(double v) const {
  if (v < lo_ || v > hi_) return 0.0;
  if (kind_ == Kind::kSingle) return jal::pdf(spec_, v);
  if (grid_pdf_.empty()) {
    const double w = 0.5 * (hi_ - lo_), x = v - lo_;
    return (x <= w ? x : 2.0 * w - x) / (w * w);
  }
  const double h = (hi_ - lo_) / static_cast<double>(grid_pdf_.size() - 1);
  const double pos = (v - lo_) / h;
  const auto g = std::min(static_cast<std::size_t>(pos), grid_pdf_.size() - 2);
  const double frac = pos - static_cast<double>(g);
  return grid_pdf_[g] * (1.0 - frac) + grid_pdf_[g + 1] * frac;
}

std::string ValuePrior::describe() const {
  return kind_ == Kind::kSingle ? jal::describe(spec_)
                                : "sum of two " + jal::describe(spec_);
}

double myerson_virtual_value(double v, const ValuePrior& prior) {
  if (v < prior.lo() || v > prior.hi())
    throw DomainError("value " + std::to_string(v) + " outside prior support");
  const double f = prior.pdf(v);
  if (!(f > 0.0))
    throw DomainError("prior density vanishes at " + std::to_string(v));
  return v - (1.0 - prior.cdf(v)) / f;
}

namespace {

// phi with boundary points where the density vanishes nudged inward.
double safe_phi(double v, const ValuePrior& prior) {
  const double eps = 1e-9 * (prior.hi() - prior.lo());
  v = std::clamp(v, prior.lo(), prior.hi());
  if (prior.pdf(v) > 0.0) return myerson_virtual_value(v, prior);
  return myerson_virtual_value(std::clamp(v, prior.lo() + eps, prior.hi() - eps),
                               prior);
}

}  // namespace

void ValuePrior::check_regular() const {
  constexpr int kScan = 64;
  double prev = -std::numeric_limits<double>::infinity();
  for (int s = 1; s < kScan; ++s) {
    const double v = lo_ + (hi_ - lo_) * s / kScan;
    const double phi = safe_phi(v, *this);
    if (phi < prev - 1e-9) {
      std::ostringstream msg;
      msg << "virtual value of " << describe() << " decreases near v=" << v
          << " (" << prev << " -> " << phi << ")";
      throw NumericError(msg.str());
    }
    prev = phi;
  }
}

IasPriors IasPriors::from_component(const DistributionSpec& component) {
  IasPriors p;
  p.store = ValuePrior::of(component);
  p.brand = p.store;
  p.joint = ValuePrior::sum_of_two(component);
  return p;
}

const ValuePrior& IasPriors::for_type(AdvertiserType t) const {
  switch (t) {
    case AdvertiserType::kStore: return store;
    case AdvertiserType::kBrand: return brand;
    case AdvertiserType::kJoint: return joint;
  }
  return store;
}

IasMechanism::IasMechanism(double gamma, IasPriors priors)
    : gamma_(gamma), priors_(std::move(priors)) {
  priors_.store.check_regular();
  priors_.brand.check_regular();
  priors_.joint.check_regular();
}

Outcome ias(const AuctionInstance& inst, std::span<const BidPair> bids,
            double gamma, const IasPriors& priors) {
  check_bids(inst, bids);
  const std::size_t m = inst.num_ads(), items = inst.num_items();
  const std::size_t K = inst.num_slots();
  std::vector<double> score(items);
  for (std::size_t i = 0; i < items; ++i) {
    score[i] = gamma * inst.item_ue(i);
    if (i < m)
      score[i] += safe_phi(bids[i].total(),
                           priors.for_type(inst.advertisers[i].kind));
  }
  const auto order = rank_by(score);

  Outcome o = empty_outcome(inst);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t i = order[k];
    o.soft_alloc(i, k) = 1.0;
    if (i >= m) continue;
    const ValuePrior& prior = priors.for_type(inst.advertisers[i].kind);
    const double bid = std::clamp(bids[i].total(), prior.lo(), prior.hi());
    // Threshold on phi: the next-ranked score, if any.
    double critical = prior.lo();
    if (k + 1 < items) {
      const double target = score[order[k + 1]] - gamma * inst.item_ue(i);
      if (safe_phi(prior.lo(), prior) < target) {
        double a = prior.lo(), b = bid;
        if (safe_phi(b, prior) < target - 1e-12) {
          std::ostringstream msg;
          msg << "cannot invert virtual value of " << prior.describe()
              << ": phi(" << b << ")=" << safe_phi(b, prior)
              << " below target " << target;
          throw NumericError(msg.str());
        }
        while (b - a > 1e-9) {
          const double mid = 0.5 * (a + b);
          (safe_phi(mid, prior) >= target ? b : a) = mid;
        }
        critical = b;
      }
    }
    critical = std::min(critical, bids[i].total());
    o.payments[i] = split(critical * inst.slots[k], bids[i]);
  }
  finalize_hard(o);
  return o;
}

// ---------------------------------------------------------------------------

TruncatedLognormalMixture fit_truncated_lognormal(const std::vector<double>& xs,
                                                  double lo, double hi) {
  if (xs.size() < 2) throw DomainError("need at least two observations");
  if (!(hi > lo) || lo < 0.0) throw DomainError("invalid truncation interval");
  std::vector<double> logs;
  logs.reserve(xs.size());
  for (double x : xs) {
    if (!(x > 0.0) || x < lo || x > hi)
      throw DomainError("observation " + std::to_string(x) +
                        " outside (0, hi] or the truncation interval");
    logs.push_back(std::log(x));
  }
  const double n = static_cast<double>(logs.size());
  const double log_lo = lo > 0.0 ? std::log(lo) : -INFINITY;
  const double log_hi = std::log(hi);

  auto neg_loglik = [&](double mu, double sigma) {
    boost::math::normal_distribution<double> z;
    const double mass =
        boost::math::cdf(z, (log_hi - mu) / sigma) -
        (std::isfinite(log_lo) ? boost::math::cdf(z, (log_lo - mu) / sigma) : 0.0);
    if (!(mass > 1e-300)) return 1e300;
    double s = 0.0;
    for (double l : logs) s += (l - mu) * (l - mu);
    return n * std::log(sigma) + s / (2.0 * sigma * sigma) + n * std::log(mass);
  };

  double mu = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double var = 0.0;
  for (double l : logs) var += (l - mu) * (l - mu);
  double sigma = std::max(std::sqrt(var / n), 1e-3);
  // Coordinate descent with a 1-d Brent search on each parameter.
  for (int round = 0; round < 60; ++round) {
    const double mu_prev = mu, sigma_prev = sigma;
    mu = boost::math::tools::brent_find_minima(
             [&](double m) { return neg_loglik(m, sigma); }, mu - 5.0, mu + 5.0,
             40)
             .first;
    sigma = boost::math::tools::brent_find_minima(
                [&](double s) { return neg_loglik(mu, s); }, 1e-3,
                std::max(5.0, 4.0 * sigma), 40)
                .first;
    if (std::abs(mu - mu_prev) < 1e-9 && std::abs(sigma - sigma_prev) < 1e-9)
      break;
  }
  return TruncatedLognormalMixture{{{mu, sigma}}, lo, hi};
}

}  // namespace jal
