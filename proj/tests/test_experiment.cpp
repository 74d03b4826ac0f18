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

#include <filesystem>
#include <sstream>

#include "helpers.hpp"
#include "jal/baselines.hpp"
#include "jal/checkpoint.hpp"
#include "jal/errors.hpp"
#include "jal/experiment.hpp"

using namespace jal;
using namespace jal::testing;

namespace {

MechanismRow row(std::string name, double sw, double rev, double ue) {
  MechanismRow r;
  r.mechanism = std::move(name);
  r.raw.sw = sw;
  r.raw.rev = rev;
  r.raw.ue = ue;
  r.raw.score = rev + 0.5 * ue;
  return r;
}

ExperimentConfig small_baselines() {
  ExperimentConfig c;
  c.mechanisms = {"vcg", "gsp", "ias"};
  c.dataset.train_samples = 20;
  c.dataset.test_samples = 40;
  c.regret.samples = 5;
  c.regret.baseline_samples = 5;
  c.regret.search = {5, 0.1, 2};
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("jal-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("paired t-test against reference values") {
  std::vector<double> a{1, 2, 3, 4, 5}, b{1.1, 2.2, 2.9, 4.3, 5.1};
  auto r = paired_ttest(a, b);
  CHECK(r.t == doctest::Approx(-1.8090680674665802).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.14470399860633057).epsilon(1e-9));
  CHECK(r.n == 5);

  std::vector<double> c{0.3, 0.5, 0.9, 0.2, 0.7, 0.4}, d{0.1, 0.45, 0.6, 0.25, 0.5, 0.1};
  auto r2 = paired_ttest(c, d);
  CHECK(r2.t == doctest::Approx(2.911112548697909).epsilon(1e-12));
  CHECK(r2.p == doctest::Approx(0.03335651913676696).epsilon(1e-9));
}

TEST_CASE("paired t-test degenerate cases") {
  std::vector<double> a{0.2, 0.4, 0.9};
  auto same = paired_ttest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  std::vector<double> x{2, 3, 4, 5}, y{1, 2, 3, 4};
  CHECK(paired_ttest(x, y).p < 1e-12);
  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1.0}, std::vector<double>{2.0}), DomainError);
  CHECK_THROWS_AS(paired_ttest(x, a), DimensionError);
}

TEST_CASE("normalisation anchor row and arithmetic") {
  std::vector<MechanismRow> rows{row("vcg", 0.9, 0.20, 0.40), row("x", 1.0, 0.26, 0.44)};
  normalize(rows, "vcg", 0.5);
  CHECK(rows[0].sw_norm == 1.0);
  CHECK(rows[0].rev_norm == 1.0);
  CHECK(rows[0].ue_norm == 1.0);
  CHECK(rows[0].score_norm == 1.5);
  CHECK(rows[1].rev_norm == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(rows[1].ue_norm == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(rows[1].score_norm == doctest::Approx(1.85).epsilon(1e-12));

  std::vector<MechanismRow> scaled{row("vcg", 0.9, 0.60, 0.40), row("x", 1.0, 0.78, 0.44)};
  normalize(scaled, "vcg", 0.5);
  CHECK(scaled[1].rev_norm == doctest::Approx(rows[1].rev_norm).epsilon(1e-12));
  CHECK_THROWS_AS(normalize(rows, "ias", 0.5), DomainError);
}

TEST_CASE("experiment config validation and digest") {
  ExperimentConfig c;
  auto d0 = c.digest();
  c.gamma = 0.4;
  CHECK(c.digest() != d0);
  c.gamma = 0.5;
  CHECK(c.digest() == d0);
  c.train.lr = 2e-3;
  CHECK(c.digest() != d0);

  auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  nlohmann::json bad = c.to_json();
  bad["anchor"] = "ias";
  bad["mechanisms"] = {"vcg"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = c.to_json();
  bad["mechanisms"] = {"vcg", "rocket"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = c.to_json();
  bad["dataset"]["setting"] = "Z";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  bad = c.to_json();
  bad["dataset"]["bid_dist"] = {{"kind", "cauchy"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
}

TEST_CASE("baseline experiment report") {
  auto cfg = small_baselines();
  auto rep = run_experiment(cfg);
  REQUIRE(rep.rows.size() == 3);
  const auto& v = rep.row("vcg");
  CHECK(v.sw_norm == 1.0);
  CHECK(v.rev_norm == 1.0);
  CHECK(v.ue_norm == 1.0);
  CHECK(v.score_norm == 1.5);
  CHECK(v.regret->mean < 1e-6);
  CHECK(rep.significance.size() == 2);
  CHECK(rep.design_flags.contains("gsp"));
  CHECK(rep.design_flags.contains("vcg"));
  CHECK(rep.design_flags["ias"].contains("priors"));

  std::ostringstream a, b;
  rep.write_csv(a);
  run_experiment(cfg).write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind(
            "mechanism,SW,Rev,UE,Score,SW_norm,Rev_norm,UE_norm,Score_norm,mean_rgt,max_rgt\n", 0) ==
        0);
  CHECK(a.str().find("\nvcg,") != std::string::npos);

  auto dir = scratch("report");
  rep.write(dir, "report");
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("vcg audit agrees") {
  auto data = generate(fixed_setting('A'), 10, 4);
  VcgMechanism vcg(0.5);
  RegretEvalConfig cfg;
  cfg.search = {5, 0.1, 2};
  cfg.audit_samples = 10;
  cfg.grid_step = 0.1;
  auto a = regret_audit(vcg, data, cfg, 1);
  CHECK(a.gradient.mean < 1e-6);
  CHECK(a.grid.mean < 1e-6);
  CHECK_FALSE(a.flagged);
  CHECK(a.to_json()["grid"]["method"] == "grid");
}

TEST_CASE("checkpoint round trip") {
  JeaNetConfig nc;
  nc.model_dim = 16;
  nc.hidden_dim = 8;
  nc.heads = 2;
  nc.encoder_layers = 1;
  TrainConfig tc;
  tc.net = nc;
  JeaNet net(nc, 77);
  net.params().lambda = {0.1, 0.2, 0.3, 0.4};
  net.params().rho = 8.0;
  auto path = scratch("ckpt") / "c.json";
  save_checkpoint(Checkpoint::capture(net, tc), path);
  auto back = load_checkpoint(path).restore();
  CHECK(back.params().lambda == net.params().lambda);
  CHECK(back.params().rho == 8.0);

  auto data = generate(fixed_setting('A'), 3, 9);
  auto o1 = JeaNetMechanism(net).run_batch(data.instances);
  auto o2 = JeaNetMechanism(back).run_batch(data.instances);
  for (std::size_t s = 0; s < o1.size(); ++s) {
    CHECK(o1[s].soft_alloc == o2[s].soft_alloc);
    for (std::size_t i = 0; i < o1[s].payments.size(); ++i)
      CHECK(o1[s].payments[i].total() == o2[s].payments[i].total());
  }
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("checkpoint schema errors") {
  nlohmann::json j{{"format", "jal-checkpoint-1"}, {"config", TrainConfig{}.to_json()}};
  CHECK_THROWS_AS(Checkpoint::from_json(j), SchemaError);
  j["params"] = nlohmann::json::object();
  CHECK_THROWS_AS(Checkpoint::from_json(j).restore(), SchemaError);
  j["format"] = "other";
  CHECK_THROWS_AS(Checkpoint::from_json(j), SchemaError);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
