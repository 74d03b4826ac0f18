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
#include "jal/auction.hpp"
#include "jal/errors.hpp"

using namespace jal;
using namespace jal::testing;

TEST_CASE("expected_ctr") {
  SlotProfile s({0.5, 0.3, 0.2});
  CHECK(expected_ctr(std::vector<double>{1, 0, 0}, s) == doctest::Approx(0.5));
  CHECK(expected_ctr(std::vector<double>{0, 0, 0}, s) == 0.0);
  CHECK(expected_ctr(std::vector<double>{0.25, 0.25, 0}, s) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(expected_ctr(std::vector<double>{1, 0}, s), DimensionError);
}

TEST_CASE("slot profile validation") {
  CHECK_THROWS_AS(SlotProfile({0.3, 0.5}), DomainError);
  CHECK_THROWS_AS(SlotProfile(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(SlotProfile({1.2}), DomainError);
  CHECK_NOTHROW(SlotProfile({0.7, 0.6, 0.5, 0.4}));
}

TEST_CASE("check_feasibility") {
  Matrix eye = Matrix::Identity(3, 3);
  CHECK(check_feasibility(eye).feasible);

  Matrix two_on_slot0 = Matrix::Zero(3, 3);
  two_on_slot0(0, 0) = two_on_slot0(1, 0) = 1;
  two_on_slot0(2, 1) = 1;
  auto r = check_feasibility(two_on_slot0);
  CHECK_FALSE(r.feasible);
  CHECK(std::find(r.violations.begin(), r.violations.end(), "column 0 sum 2") !=
        r.violations.end());

  Matrix one_item_two_slots = Matrix::Zero(3, 3);
  one_item_two_slots(0, 0) = one_item_two_slots(0, 1) = 1;
  one_item_two_slots(1, 2) = 1;
  r = check_feasibility(one_item_two_slots);
  CHECK_FALSE(r.feasible);
  CHECK(std::find(r.violations.begin(), r.violations.end(), "row 0 sum 2") !=
        r.violations.end());

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(check_feasibility(bad), DomainError);
}

TEST_CASE("utility") {
  SlotProfile s1({0.5});
  CHECK(utility({0.8, 0}, std::vector<double>{1.0}, s1, {0.1, 0}) ==
        doctest::Approx(0.3));
  SlotProfile s3({0.5, 0.3, 0.2});
  CHECK(utility({0.6, 0.4}, std::vector<double>{0, 0, 0}, s3, {0, 0}) == 0.0);
  CHECK(utility({0.6, 0.4}, std::vector<double>{1, 0, 0}, s3, {0.2, 0.1}) ==
        doctest::Approx(0.2));
}

TEST_CASE("metrics") {
  auto inst = instance({0.5, 0.3}, {store(0.8, 0.3)}, {organic(0.9)});
  Outcome o;
  o.soft_alloc = Matrix::Zero(2, 2);
  o.soft_alloc(0, 0) = 1.0;
  o.soft_alloc(1, 1) = 1.0;
  o.payments = {{0.25, 0.0}};
  std::vector<Outcome> outs{o};
  std::vector<AuctionInstance> insts{inst};
  Metrics m = metrics(outs, insts, 0.5);
  CHECK(m.sw == doctest::Approx(0.4));
  CHECK(m.rev == doctest::Approx(0.25));
  CHECK(m.ue == doctest::Approx(0.42));
  CHECK(m.score == doctest::Approx(0.46));

  Metrics g0 = metrics(outs, insts, 0.0);
  CHECK(g0.score == g0.rev);

  Outcome zero = o;
  zero.soft_alloc.setZero();
  zero.payments = {{0, 0}};
  std::vector<Outcome> zs{zero};
  Metrics mz = metrics(zs, insts, 0.5);
  CHECK(mz.sw == 0.0);
  CHECK(mz.rev == 0.0);
  CHECK(mz.ue == 0.0);
  CHECK(mz.score == 0.0);

  CHECK_THROWS_AS(metrics(std::span<const Outcome>{}, std::span<const AuctionInstance>{}, 0.5),
                  DomainError);
}

TEST_CASE("metrics are linear in payments and monotone in gamma") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<AuctionInstance> insts;
  std::vector<Outcome> outs;
  for (int s = 0; s < 20; ++s) {
    insts.push_back(instance({0.5, 0.3}, {store(u(rng), u(rng) / 2), joint(u(rng), u(rng))},
                             {organic(0.5 + u(rng) / 2)}));
    Outcome o;
    o.soft_alloc = Matrix::Zero(3, 2);
    o.soft_alloc(0, 0) = u(rng) / 2;
    o.soft_alloc(1, 1) = u(rng) / 2;
    o.soft_alloc(2, 0) = u(rng) / 2;
    o.payments = {{u(rng) * 0.1, 0}, {u(rng) * 0.1, u(rng) * 0.1}};
    outs.push_back(o);
  }
  Metrics base = metrics(outs, insts, 0.5);
  auto scaled = outs;
  for (auto& o : scaled)
    for (auto& p : o.payments) { p.store *= 3.0; p.brand *= 3.0; }
  CHECK(metrics(scaled, insts, 0.5).rev == doctest::Approx(3.0 * base.rev).epsilon(1e-14));
  double prev = -1.0;
  for (double g = 0.0; g <= 2.0; g += 0.25) {
    double sc = metrics(outs, insts, g).score;
    CHECK(sc >= prev);
    prev = sc;
  }
}

TEST_CASE("regret_grid_oracle on the half-price toy mechanism") {
  HalfPriceMechanism mech;
  auto inst = instance({1.0}, {store(0.8)});
  CHECK(utility_under_report(mech, inst, 0, {0.8, 0}) == doctest::Approx(0.4));
  CHECK(regret_grid_oracle(mech, inst, 0, 0.05) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(regret_grid_oracle(mech, inst, 0, 0.5) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(regret_grid_oracle(mech, inst, 0, 0.0), DomainError);
}

TEST_CASE("type shapes") {
  CHECK(matches_type(AdvertiserType::kStore, {0.3, 0}));
  CHECK_FALSE(matches_type(AdvertiserType::kStore, {0.3, 0.1}));
  CHECK_FALSE(matches_type(AdvertiserType::kBrand, {0.3, 0.1}));
  CHECK(matches_type(AdvertiserType::kJoint, {0.3, 0.1}));
  BidPair p = project_to_type(AdvertiserType::kBrand, {0.4, 1.7}, 0.0, 1.0);
  CHECK(p.store == 0.0);
  CHECK(p.brand == 1.0);
}

TEST_CASE("instance validation") {
  auto inst = instance({0.5, 0.3, 0.2}, {store(0.5)}, {organic(0.7)});
  CHECK_THROWS_AS(inst.validate(ContextConfig{}.dim()), DomainError);
  inst.organics.push_back(organic(0.6));
  CHECK_NOTHROW(inst.validate(ContextConfig{}.dim()));
  CHECK_THROWS_AS(inst.validate(3), DimensionError);
}
