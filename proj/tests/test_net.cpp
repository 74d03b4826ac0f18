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

#include <chrono>
#include <random>

#include "helpers.hpp"
#include "jal/diff/optim.hpp"
#include "jal/errors.hpp"
#include "jal/net.hpp"

using namespace jal;
using namespace jal::testing;
namespace d = jal::diff;

namespace {

JeaNetConfig tiny(Variant v = Variant::kFull) {
  JeaNetConfig c;
  c.variant = v;
  c.codebook_size = 8;
  c.ctx_embed = 4;
  c.ue_embed = 3;
  c.model_dim = 8;
  c.hidden_dim = 4;
  c.heads = 2;
  c.mlp_widths = {6, 5, 4};
  return c;
}

Var from(std::vector<double> v, d::Shape s) { return d::constant(Array(s, std::move(v))); }

}  // namespace

TEST_CASE("allocation head on symmetric zeros") {
  Var z = from({0, 0, 0, 0}, {2, 2});
  auto s = allocation_head(z, z, z);
  for (double x : s.a_hat.value().values()) CHECK(x == doctest::Approx(0.5));
  for (double x : s.alloc.value().values()) CHECK(x == doctest::Approx(0.25));
}

TEST_CASE("allocation head saturates a column") {
  Var z = from({0, 0, 0, 0}, {2, 2});
  Var oc = from({20, 0, 0, 0}, {2, 2});
  auto s = allocation_head(z, oc, z);
  CHECK(s.a_hat.value()[2] < 1e-8);
  CHECK(s.alloc.value()[2] <= s.a_hat.value()[2]);
}

TEST_CASE("random heads give doubly substochastic allocations") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 30.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = size(rng), K = size(rng);
    const double sc = scale(rng);
    auto draw = [&] {
      Array a({n, K});
      for (double& x : a.values()) x = sc * g(rng);
      return d::constant(a);
    };
    auto s = allocation_head(draw(), draw(), draw());
    Matrix m(n, K);
    for (std::size_t i = 0; i < n * K; ++i) m(i / K, i % K) = s.alloc.value()[i];
    REQUIRE(is_doubly_substochastic(m, 1e-6));
    for (std::size_t i = 0; i < n * K; ++i)
      REQUIRE(s.alloc.value()[i] <= s.a_hat.value()[i]);
  }
}

TEST_CASE("payment head") {
  // One advertiser, K = 3.
  Var op = from(std::vector<double>(6, 0.0), {1, 1, 3, 2});
  Var alloc = from({1, 0, 0}, {1, 1, 3});
  Var e = from({0.4, 0.0, 0.3, 0.0, 0.2, 0.0}, {1, 1, 3, 2});
  Var p = payment_head(op, alloc, e, 1);
  CHECK(p.value()[0] == doctest::Approx(0.2));
  CHECK(p.value()[1] == 0.0);

  Var wild = from({9, -4, 3, 7, -2, 12}, {1, 1, 3, 2});
  CHECK(payment_head(wild, alloc, e, 1).value()[1] == 0.0);
}

TEST_CASE("forward shapes, feasibility and IR by construction") {
  JeaNet net(JeaNetConfig{}, 2);
  Dataset ds = gen_fixed('A', Uniform{}, 16, 4);
  NetBatch batch = NetBatch::from(ds.instances);
  NetOutput o = net.forward(batch);
  CHECK(o.heads.shape() == d::Shape{16, 10, 3, 5});
  CHECK(o.payments.shape() == d::Shape{16, 4, 2});
  JeaNetMechanism mech(net, true);
  for (const auto& inst : ds.instances) {
    Outcome out = mech.run(inst, inst.truthful_bids());
    CHECK(is_doubly_substochastic(out.soft_alloc));
    REQUIRE(out.hard_alloc);
    CHECK(check_feasibility(*out.hard_alloc).feasible);
    for (std::size_t i = 0; i < inst.num_ads(); ++i)
      CHECK(advertiser_utility(inst, out, i) >= 0.0);
  }
}

TEST_CASE("batched and single evaluation agree") {
  JeaNet net(tiny(), 3);
  Dataset ds = gen_fixed('B', Uniform{}, 5, 1);
  JeaNetMechanism mech(net);
  auto batched = mech.run_batch(ds.instances);
  for (std::size_t s = 0; s < 5; ++s) {
    Outcome one = mech.run(ds.instances[s], ds.instances[s].truthful_bids());
    CHECK((one.soft_alloc - batched[s].soft_alloc).cwiseAbs().maxCoeff() < 1e-12);
    for (std::size_t i = 0; i < one.payments.size(); ++i)
      CHECK(one.payments[i].total() ==
            doctest::Approx(batched[s].payments[i].total()).epsilon(1e-12));
  }
}

TEST_CASE("advertiser permutation equivariance") {
  for (Variant v : {Variant::kFull, Variant::kEtmDmm, Variant::kMlpDmm}) {
    JeaNet net(JeaNetConfig{.variant = v}, 5);
    Dataset ds = gen_fixed('A', Uniform{}, 4, 6);
    JeaNetMechanism mech(net);
    for (auto inst : ds.instances) {
      Outcome base = mech.run(inst, inst.truthful_bids());
      const std::vector<std::size_t> perm{2, 0, 3, 1};
      AuctionInstance p = inst;
      for (std::size_t i = 0; i < 4; ++i) p.advertisers[i] = inst.advertisers[perm[i]];
      std::swap(p.organics[0], p.organics[5]);
      Outcome out = mech.run(p, p.truthful_bids());
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k = 0; k < 3; ++k)
          CHECK(std::abs(out.soft_alloc(i, k) - base.soft_alloc(perm[i], k)) < 1e-10);
        CHECK(std::abs(out.payments[i].total() - base.payments[perm[i]].total()) <
              1e-10);
      }
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(out.soft_alloc(4, k) - base.soft_alloc(9, k)) < 1e-10);
        CHECK(std::abs(out.soft_alloc(9, k) - base.soft_alloc(4, k)) < 1e-10);
      }
    }
  }
}

TEST_CASE("slot permutation with matching ctr permutation") {
  JeaNet net(JeaNetConfig{}, 6);
  Dataset ds = gen_fixed('A', Uniform{}, 2, 3);
  NetBatch batch = NetBatch::from(ds.instances);
  NetOutput base = net.forward(batch);
  NetBatch swapped = batch;
  const std::vector<std::size_t> perm{2, 0, 1};
  for (std::size_t s = 0; s < batch.B; ++s)
    for (std::size_t k = 0; k < 3; ++k)
      swapped.alpha[s * 3 + k] = batch.alpha[s * 3 + perm[k]];
  NetOutput out = net.forward(swapped);
  for (std::size_t s = 0; s < batch.B; ++s)
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(out.alloc.value()[(s * 10 + i) * 3 + k] -
                       base.alloc.value()[(s * 10 + i) * 3 + perm[k]]) < 1e-10);
}

TEST_CASE("duplicated advertiser gets identical rows") {
  JeaNet net(JeaNetConfig{}, 7);
  auto inst = instance({0.5, 0.4, 0.3},
                       {store(0.6, 0.3), store(0.6, 0.3), joint(0.2, 0.5, 0.1)},
                       {organic(0.4), organic(0.7)});
  JeaNetMechanism mech(net);
  Outcome o = mech.run(inst, inst.truthful_bids());
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(std::abs(o.soft_alloc(0, k) - o.soft_alloc(1, k)) < 1e-12);
}

TEST_CASE("full forward matches finite differences") {
  for (Variant v : {Variant::kFull, Variant::kEtmDmm, Variant::kMlpDmm}) {
    JeaNet net(tiny(v), 11);
    Dataset ds = gen_fixed('B', Uniform{}, 2, 12);
    NetBatch batch = NetBatch::from(ds.instances);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Array w({2, batch.N, 3});
    for (double& x : w.values()) x = g(rng);
    auto f = [&] {
      NetOutput o = net.forward(batch);
      return d::sum_all(o.payments) + d::sum_all(o.alloc * d::constant(w));
    };
    std::vector<Var> params;
    for (const auto& n : net.mechanism_parameters()) params.push_back(net.params().get(n));
    CHECK(d::grad_check(f, params) < 1e-4);
  }
}

TEST_CASE("bid gradients match finite differences without quantisation") {
  JeaNet net(tiny(Variant::kEtmDmm), 13);
  Dataset ds = gen_fixed('A', Uniform{}, 2, 2);
  NetBatch batch = NetBatch::from(ds.instances);
  Var bids = d::variable(batch.truthful);
  auto f = [&] {
    NetOutput o = net.forward(batch, bids);
    return d::sum_all(o.payments) + d::sum_all(d::square(o.ctr));
  };
  CHECK(d::grad_check(f, {bids}) < 1e-4);
}

TEST_CASE("mlp variant has no attention parameters") {
  JeaNet mlp(JeaNetConfig{.variant = Variant::kMlpDmm}, 1);
  JeaNet full(JeaNetConfig{}, 1);
  CHECK(mlp.attention_parameter_count() == 0);
  CHECK(full.attention_parameter_count() > 0);
  CHECK(mlp.params().count("etm.mlp") > 0);
  CHECK(mlp.params().count("etm.row") == 0);
}

TEST_CASE("config round trip and validation") {
  JeaNetConfig c = tiny(Variant::kEtmDmm);
  JeaNetConfig back = JeaNetConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  JeaNetConfig bad;
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(variant_from_string("cnn"), ConfigError);
}

TEST_CASE("single forward is fast") {
  JeaNet net(JeaNetConfig{}, 1);
  Dataset ds = gen_fixed('A', Uniform{}, 50, 1);
  JeaNetMechanism mech(net);
  mech.run(ds.instances[0], ds.instances[0].truthful_bids());
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& inst : ds.instances) mech.run(inst, inst.truthful_bids());
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count() / 50.0;
  CHECK(ms < 10.0);
}
