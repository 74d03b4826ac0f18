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

#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "jal/baselines.hpp"
#include "jal/errors.hpp"

using namespace jal;
using namespace jal::testing;

namespace {

double total_payment(const Outcome& o, std::size_t i) {
  return o.payments[i].total();
}

AuctionInstance random_instance(std::mt19937_64& rng, std::size_t m,
                                std::size_t n, std::size_t K) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<double> ctrs;
  for (std::size_t k = 0; k < K; ++k) ctrs.push_back(u(rng));
  std::sort(ctrs.rbegin(), ctrs.rend());
  std::vector<Advertiser> ads;
  for (std::size_t i = 0; i < m; ++i) {
    switch (pick(rng)) {
      case 0: ads.push_back(store(u(rng), u(rng))); break;
      case 1: ads.push_back(brand(u(rng), u(rng))); break;
      default: {
        const double s = u(rng), b = u(rng);
        ads.push_back(joint(s, b, u(rng)));
      }
    }
  }
  std::vector<OrganicItem> orgs;
  for (std::size_t j = 0; j < n; ++j) orgs.push_back(organic(u(rng)));
  return instance(ctrs, ads, orgs);
}

}  // namespace

TEST_CASE("vcg single slot examples") {
  auto inst = instance({1.0}, {store(0.8), store(0.5)});
  auto o = vcg(inst, inst.truthful_bids(), 0.0);
  CHECK(o.soft_alloc(0, 0) == 1.0);
  CHECK(total_payment(o, 0) == doctest::Approx(0.5));
  CHECK(total_payment(o, 1) == 0.0);

  auto inst2 = instance({1.0}, {store(0.4, 0.2)}, {organic(0.9)});
  auto o2 = vcg(inst2, inst2.truthful_bids(), 0.5);
  CHECK(o2.soft_alloc(0, 0) == 1.0);
  CHECK(total_payment(o2, 0) == doctest::Approx(0.35));
}

TEST_CASE("vcg with no ads ranks organics by ue") {
  auto inst = instance({0.6, 0.3}, {}, {organic(0.2), organic(0.7), organic(0.5)});
  auto o = vcg(inst, inst.truthful_bids(), 0.5);
  CHECK(o.soft_alloc(1, 0) == 1.0);
  CHECK(o.soft_alloc(2, 1) == 1.0);
  CHECK(o.payments.empty());
  CHECK(check_feasibility(*o.hard_alloc).feasible);
}

TEST_CASE("vcg splits payments by bid components") {
  auto inst = instance({1.0}, {joint(0.3, 0.6), store(0.45)});
  auto o = vcg(inst, inst.truthful_bids(), 0.0);
  CHECK(o.payments[0].store == doctest::Approx(0.15));
  CHECK(o.payments[0].brand == doctest::Approx(0.30));
}

TEST_CASE("vcg errors on infeasible sizes") {
  auto inst = instance({0.5, 0.4}, {store(0.3)});
  CHECK_THROWS_AS(vcg(inst, inst.truthful_bids(), 0.5), DomainError);
  auto ok = instance({0.5}, {store(0.3)});
  CHECK_THROWS_AS(vcg(ok, std::vector<BidPair>{}, 0.5), DimensionError);
}

TEST_CASE("vcg is dsic and ir on small instances") {
  std::mt19937_64 rng(3);
  VcgMechanism mech(0.5);
  double worst = 0.0;
  for (std::size_t m = 1; m <= 4; ++m)
    for (std::size_t K = 1; K <= 2; ++K)
      for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = (trial % 3) + (K > m ? K - m : 0);
        auto inst = random_instance(rng, m, n, K);
        auto o = mech.run(inst, inst.truthful_bids());
        REQUIRE(check_feasibility(*o.hard_alloc).feasible);
        for (std::size_t i = 0; i < m; ++i) {
          CHECK(advertiser_utility(inst, o, i) >= -1e-12);
          const double contribution =
              inst.advertisers[i].value.total() * o.expected_ctr(i, inst.slots);
          CHECK(total_payment(o, i) <= contribution + 1e-12);
          worst = std::max(worst, regret_grid_oracle(mech, inst, i, 0.05));
        }
      }
  CHECK(worst < 1e-9);
}

TEST_CASE("gsp examples") {
  GspConfig one{{1}, 0.0};
  auto inst = instance({0.5}, {store(0.9), store(0.6)});
  auto o = gsp_fixed_positions(inst, inst.truthful_bids(), one);
  CHECK(o.soft_alloc(0, 0) == 1.0);
  CHECK(total_payment(o, 0) == doctest::Approx(0.3));

  auto single = instance({0.5, 0.4}, {store(0.9)}, {organic(0.1)});
  auto o2 = gsp_fixed_positions(single, single.truthful_bids(), one);
  CHECK(total_payment(o2, 0) == 0.0);

  GspConfig none{{}, 0.0};
  auto orgs = instance({0.5, 0.4}, {store(0.9)}, {organic(0.3), organic(0.9)});
  auto o3 = gsp_fixed_positions(orgs, orgs.truthful_bids(), none);
  CHECK(o3.soft_alloc(2, 0) == 1.0);
  CHECK(o3.soft_alloc(1, 1) == 1.0);
}

TEST_CASE("gsp default positions alternate from the top") {
  CHECK(GspConfig::defaults(3).positions == std::vector<std::size_t>{1, 3});
  CHECK(GspConfig::defaults(4).positions == std::vector<std::size_t>{1, 3});
  CHECK(GspConfig::defaults(1).positions == std::vector<std::size_t>{1});
  CHECK_THROWS_AS((GspConfig{{1, 1}, 0.0}).validate(3), ConfigError);
  CHECK_THROWS_AS((GspConfig{{4}, 0.0}).validate(3), ConfigError);
}

TEST_CASE("gsp fills spare slots with ads when organics run out") {
  auto inst = instance({0.6, 0.5, 0.4}, {store(0.9), store(0.7), store(0.2)});
  auto o = gsp_fixed_positions(inst, inst.truthful_bids(), GspConfig{{1}, 0.0});
  REQUIRE(check_feasibility(*o.hard_alloc).feasible);
  CHECK(o.soft_alloc(0, 0) == 1.0);
  CHECK(o.soft_alloc(1, 1) == 1.0);
  CHECK(o.soft_alloc(2, 2) == 1.0);
}

TEST_CASE("gsp is not incentive compatible") {
  GspMechanism mech(GspConfig{{1, 2}, 0.0});
  auto inst = instance({1.0, 0.9}, {store(0.9), store(0.6)});
  CHECK(regret_grid_oracle(mech, inst, 0, 0.05) > 0.01);
}

TEST_CASE("virtual values") {
  auto u = ValuePrior::of(Uniform{0.0, 1.0});
  CHECK(myerson_virtual_value(0.75, u) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(myerson_virtual_value(0.5, u) == doctest::Approx(0.0));
  CHECK_THROWS_AS(myerson_virtual_value(1.5, u), DomainError);

  auto tn = ValuePrior::of(TruncatedNormal{0.5, 0.5, 0.0, 1.0});
  // Reference values from adaptive quadrature of the normal density.
  CHECK(std::abs(myerson_virtual_value(0.5, tn) - 0.07218780405392589) < 1e-6);
  CHECK(std::abs(myerson_virtual_value(0.2, tn) + 0.6509150035698412) < 1e-6);
  CHECK(std::abs(myerson_virtual_value(0.8, tn) - 0.6265466252860208) < 1e-6);

  auto tri = ValuePrior::sum_of_two(Uniform{0.0, 1.0});
  CHECK(tri.cdf(1.0) == doctest::Approx(0.5));
  CHECK(tri.pdf(1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(myerson_virtual_value(0.0, tri), DomainError);
}

TEST_CASE("built-in priors are regular") {
  for (DistributionSpec spec :
       {DistributionSpec{Uniform{}}, DistributionSpec{TruncatedNormal{}},
        DistributionSpec{default_lognormal_mixture()}}) {
    auto priors = IasPriors::from_component(spec);
    CHECK_NOTHROW(priors.store.check_regular());
    CHECK_NOTHROW(priors.joint.check_regular());
    CHECK(priors.joint.cdf(priors.joint.hi()) == 1.0);
    CHECK(priors.joint.cdf(0.5 * (priors.joint.lo() + priors.joint.hi())) > 0.0);
  }
}

TEST_CASE("numerical sum-of-two matches the closed form for uniforms") {
  // A truncated normal with a huge sd is uniform to within ~1e-7 on [0,1].
  auto flat = ValuePrior::sum_of_two(TruncatedNormal{0.5, 1e4, 0.0, 1.0});
  auto tri = ValuePrior::sum_of_two(Uniform{0.0, 1.0});
  for (double v : {0.1, 0.5, 1.0, 1.3, 1.9}) {
    CHECK(flat.cdf(v) == doctest::Approx(tri.cdf(v)).epsilon(1e-5));
    CHECK(flat.pdf(v) == doctest::Approx(tri.pdf(v)).epsilon(1e-5));
  }
}

TEST_CASE("ias example") {
  auto priors = IasPriors::from_component(Uniform{0.0, 1.0});
  auto inst = instance({1.0}, {store(0.9, 0.2)}, {organic(0.9)});
  auto o = ias(inst, inst.truthful_bids(), 0.5, priors);
  CHECK(o.soft_alloc(0, 0) == 1.0);
  CHECK(total_payment(o, 0) == doctest::Approx(0.675).epsilon(1e-8));

  auto lose = instance({1.0}, {store(0.3, 0.0)}, {organic(0.9)});
  auto o2 = ias(lose, lose.truthful_bids(), 0.5, priors);
  CHECK(o2.soft_alloc(1, 0) == 1.0);
  CHECK(total_payment(o2, 0) == 0.0);
}

TEST_CASE("ias ties go to the lower index with equal critical values") {
  auto priors = IasPriors::from_component(Uniform{0.0, 1.0});
  auto inst = instance({0.5, 0.4}, {store(0.8), store(0.8)}, {organic(0.2)});
  auto o = ias(inst, inst.truthful_bids(), 0.5, priors);
  CHECK(o.soft_alloc(0, 0) == 1.0);
  CHECK(o.soft_alloc(1, 1) == 1.0);
  // Both only need to beat the organic: phi(v*) = 0.1 -> v* = 0.55.
  CHECK(total_payment(o, 0) / 0.5 == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(total_payment(o, 1) / 0.4 == doctest::Approx(0.55).epsilon(1e-8));
}

TEST_CASE("ias single slot is dsic and ir under the matching prior") {
  std::mt19937_64 rng(11);
  for (DistributionSpec spec :
       {DistributionSpec{Uniform{}}, DistributionSpec{TruncatedNormal{}}}) {
    IasMechanism mech(0.5, IasPriors::from_component(spec));
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
      auto inst = random_instance(rng, 1 + trial % 4, trial % 3, 1);
      auto o = mech.run(inst, inst.truthful_bids());
      REQUIRE(check_feasibility(*o.hard_alloc).feasible);
      for (std::size_t i = 0; i < inst.num_ads(); ++i) {
        CHECK(advertiser_utility(inst, o, i) >= -1e-9);
        worst = std::max(worst, regret_grid_oracle(mech, inst, i, 0.05));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("truncated lognormal fit recovers parameters") {
  TruncatedLognormalMixture truth{{{-0.7, 0.4}}, 0.0, 1.0};
  Rng rng(5);
  std::vector<double> xs;
  for (int s = 0; s < 20000; ++s) xs.push_back(sample_value(truth, rng));
  auto fit = fit_truncated_lognormal(xs, 0.0, 1.0);
  REQUIRE(fit.components.size() == 1);
  CHECK(fit.components[0].first == doctest::Approx(-0.7).epsilon(0.03));
  CHECK(fit.components[0].second == doctest::Approx(0.4).epsilon(0.03));
  CHECK_THROWS_AS(fit_truncated_lognormal({0.5}, 0.0, 1.0), DomainError);
}
