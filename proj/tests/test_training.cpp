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

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "jal/baselines.hpp"
#include "jal/errors.hpp"
#include "jal/training.hpp"

using namespace jal;
using namespace jal::testing;

namespace {

Dataset single(AuctionInstance inst) {
  Dataset d;
  d.instances.push_back(std::move(inst));
  return d;
}

JeaNetConfig tiny(Variant v) {
  JeaNetConfig c;
  c.variant = v;
  c.codebook_size = 8;
  c.model_dim = 16;
  c.hidden_dim = 8;
  c.heads = 2;
  c.encoder_layers = 1;
  c.mlp_widths = {16, 8};
  c.ctx_embed = 4;
  c.ue_embed = 4;
  return c;
}

TrainConfig tiny_train(Variant v) {
  TrainConfig t;
  t.net = tiny(v);
  t.batch_size = 8;
  t.aem_epochs = 1;
  t.iterations = 20;
  t.lambda_period = 5;
  t.eval_every = 10;
  t.eval_samples = 8;
  t.eval_misreport = {3, 0.1, 2};
  return t;
}

}  // namespace

TEST_CASE("half-price misreport search finds the zero bid") {
  HalfPriceMechanism mech;
  auto data = single(instance({1.0}, {store(0.8)}));
  auto r = optimize_misreports(mech, data.instances, MisreportConfig{}, 3);
  CHECK(r.truthful_utility[0][0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(r.best_utility[0][0] == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(r.best[0][0].store == doctest::Approx(0.0));
  CHECK(r.best[0][0].brand == 0.0);

  auto rep = estimate_regret(mech, data, MisreportConfig{}, 3);
  CHECK(rep.method == RegretReport::Method::kGradient);
  CHECK(rep.mean == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(rep.max == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(grid_regret(mech, data, 0.01).mean == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("half-price regret over uniform values") {
  HalfPriceMechanism mech;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset data;
  for (int s = 0; s < 2000; ++s) data.instances.push_back(instance({1.0}, {store(u(rng))}));
  auto rep = estimate_regret(mech, data, {25, 0.1, 2}, 4);
  CHECK(rep.mean == doctest::Approx(0.25).epsilon(0.04));
  CHECK(rep.max <= 0.5 + 1e-9);
  CHECK(rep.per_advertiser.size() == 1);
}

TEST_CASE("vcg has no gradient regret") {
  VcgMechanism vcg(0.5);
  auto data = generate(fixed_setting('A'), 20, 11);
  auto rep = estimate_regret(vcg, data, {10, 0.1, 3}, 5);
  CHECK(rep.mean < 1e-6);
  CHECK(rep.max < 1e-6);
}

TEST_CASE("gradient search is close to the grid on gsp") {
  GspMechanism gsp;
  auto data = generate(fixed_setting('A'), 100, 17);
  auto grad = estimate_regret(gsp, data, {25, 0.1, 10}, 2);
  auto grid = grid_regret(gsp, data, 0.05);
  CHECK(grid.mean > 0.0);
  CHECK(grad.mean >= grid.mean - 0.005);
}

TEST_CASE("lagrangian and multipliers") {
  std::vector<double> rgt{0.1, 0.05}, lam{0.5, 1.0};
  // -(0.4 + 0.5 * 0.2) + 0.05 + 0.05 + 0.5 * 2 * (0.01 + 0.0025)
  CHECK(lagrangian_loss(0.4, 0.2, 0.5, rgt, lam, 2.0) ==
        doctest::Approx(-0.3875).epsilon(1e-12));
  CHECK(lagrangian_loss(0.5, 0.0, 0.5, std::vector<double>{}, lam, 1.0) == -0.5);

  Var r = diff::constant(Array({2}, {0.1, 0.05}));
  Var v = lagrangian_loss(diff::constant(Array::scalar(0.4)),
                          diff::constant(Array::scalar(0.2)), 0.5, r, lam, 2.0);
  CHECK(v.value().item() == doctest::Approx(lagrangian_loss(0.4, 0.2, 0.5, rgt, lam, 2.0)));

  // Larger rho only adds penalty.
  CHECK(lagrangian_loss(0.4, 0.2, 0.5, rgt, lam, 4.0) >
        lagrangian_loss(0.4, 0.2, 0.5, rgt, lam, 2.0));

  auto next = update_multipliers(std::vector<double>{0.0, 0.1}, std::vector<double>{0.05, 0.025}, 2.0);
  CHECK(next[0] == doctest::Approx(0.1));
  CHECK(next[1] == doctest::Approx(0.15));
  CHECK_THROWS_AS(update_multipliers(lam, rgt, 0.0), DomainError);
  CHECK_THROWS_AS(update_multipliers(std::vector<double>{0.0}, rgt, 1.0), DimensionError);
}

TEST_CASE("lagrangian hand examples") {
  std::vector<double> one{0.1}, lam{0.2};
  CHECK(lagrangian_loss(0.3, 0.4, 0.5, one, lam, 1.0) == doctest::Approx(-0.475).epsilon(1e-12));
  std::vector<double> zero{0.0, 0.0}, lam2{0.3, 0.7};
  CHECK(lagrangian_loss(0.3, 0.4, 0.5, zero, lam2, 8.0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(update_multipliers(std::vector<double>{0.1}, std::vector<double>{0.05}, 1.0)[0] ==
        doctest::Approx(0.15).epsilon(1e-12));
  CHECK(update_multipliers(lam2, zero, 3.0) == lam2);
}

TEST_CASE("objective descends without penalties") {
  JeaNet net(tiny(Variant::kFull), 6);
  auto data = generate(fixed_setting('A'), 16, 30);
  NetBatch batch = NetBatch::from(data.instances);
  auto objective = [&] {
    NetOutput o = net.forward(batch);
    Var rev = diff::mean_all(diff::sum(o.payments, {1, 2}));
    Var ue = diff::mean_all(diff::sum(o.ctr * diff::constant(batch.ue), {1}));
    return lagrangian_loss(rev, ue, 0.5, diff::constant(Array({0})), {}, 0.0);
  };
  Var before = objective();
  net.params().zero_grad();
  diff::backward(before);
  diff::adam_step(net.params(), diff::AdamConfig{1e-5}, net.mechanism_parameters());
  CHECK(objective().value().item() < before.value().item());
}

TEST_CASE("evaluation search is at least as strong as training search") {
  JeaNet net(tiny(Variant::kEtmDmm), 8);
  auto data = generate(fixed_setting('A'), 12, 40);
  auto light = estimate_regret(net, data, {3, 0.1, 2}, 1);
  auto heavy = estimate_regret(net, data, {25, 0.1, 10}, 1);
  CHECK(heavy.mean >= light.mean - 0.002);
}

TEST_CASE("train config round trip and validation") {
  TrainConfig c;
  c.batch_size = 16;
  c.eval_misreport.restarts = 3;
  auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"lr", "fast"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"rho_growth", 0.5}}), ConfigError);
}

TEST_CASE("jeanet misreport search never loses to truthful") {
  JeaNet net(tiny(Variant::kEtmDmm), 4);
  auto data = generate(fixed_setting('A'), 6, 21);
  auto r = optimize_misreports(net, data.instances, {5, 0.1, 3}, 9);
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t i = 0; i < r.best_utility[s].size(); ++i) {
      CHECK(r.best_utility[s][i] >= r.truthful_utility[s][i]);
      CHECK(r.best[s][i].store >= 0.0);
      CHECK(r.best[s][i].store <= 1.0);
      if (data.instances[s].advertisers[i].kind == AdvertiserType::kStore)
        CHECK(r.best[s][i].brand == 0.0);
    }
  // Truthful utilities match the mechanism wrapper.
  JeaNetMechanism mech(net);
  const auto& inst = data.instances[0];
  CHECK(r.truthful_utility[0][0] ==
        doctest::Approx(utility_under_report(mech, inst, 0, inst.advertisers[0].value))
            .epsilon(1e-9));
}

TEST_CASE("aem phase lowers quantisation error") {
  TrainConfig cfg = tiny_train(Variant::kFull);
  cfg.aem_epochs = 2;
  JeaNet net(cfg.net, 1);
  auto data = generate(fixed_setting('A'), 64, 2);
  auto rep = train_aem(net, data, cfg);
  CHECK(rep.mean_sq_error_after < rep.mean_sq_error_before);
  CHECK(std::isfinite(rep.recon));
}

TEST_CASE("short training run logs and is deterministic") {
  TrainConfig cfg = tiny_train(Variant::kFull);
  auto data = generate(fixed_setting('A'), 32, 8);
  JeaNet a(cfg.net, cfg.seed), b(cfg.net, cfg.seed);
  std::ostringstream log;
  std::size_t seen = 0;
  auto ra = train(a, cfg, data, &log, [&](const TrainLogEntry&) { ++seen; });
  auto rb = train(b, cfg, data);
  REQUIRE(ra.log.size() == 2);
  CHECK(seen == 2);
  CHECK(ra.log[1].iter == 20);
  CHECK(ra.log[1].rev == rb.log[1].rev);
  CHECK(ra.log[1].mean_rgt == rb.log[1].mean_rgt);
  CHECK(ra.lambda == rb.lambda);
  for (double l : ra.lambda) CHECK(l >= 0.0);
  std::istringstream lines(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("mean_rgt"));
    CHECK(j.contains("wall_ms"));
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("training raises revenue without regret pressure") {
  TrainConfig cfg = tiny_train(Variant::kEtmDmm);
  cfg.iterations = 150;
  cfg.lr = 5e-3;
  cfg.gamma = 0.0;
  cfg.rho_init = 1e-6;
  cfg.rho_max = 1e-6;
  cfg.lambda_period = 1000;
  cfg.eval_every = 150;
  auto data = generate(fixed_setting('A'), 64, 3);
  JeaNet net(cfg.net, 5);
  auto start = metrics(JeaNetMechanism(net).run_batch(data.instances), data.instances, 0.0);
  train(net, cfg, data);
  auto end = metrics(JeaNetMechanism(net).run_batch(data.instances), data.instances, 0.0);
  CHECK(end.rev > start.rev);
}
