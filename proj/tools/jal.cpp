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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "jal/checkpoint.hpp"
#include "jal/errors.hpp"
#include "jal/experiment.hpp"
#include "jal/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out_dir;
};

jal::ExperimentConfig load_config(const Globals& g) {
  jal::ExperimentConfig cfg;
  if (!g.config.empty()) cfg = jal::ExperimentConfig::load(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.dataset.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.validate();
  jal::set_num_threads(g.threads);
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

fs::path checkpoint_path(const jal::ExperimentConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (cfg.checkpoint) return *cfg.checkpoint;
  return fs::path(cfg.out_dir) / "checkpoint.json";
}

void print_rows(const jal::ExperimentReport& rep) { rep.write_csv(std::cout); }

int cmd_datagen(const jal::ExperimentConfig& cfg) {
  auto data = jal::load_datasets(cfg.dataset);
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  jal::write_jsonl(data.train, dir / "train.jsonl");
  jal::write_jsonl(data.test, dir / "test.jsonl");
  std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
            << " test instances to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const jal::ExperimentConfig& cfg, const std::string& variant) {
  auto data = jal::load_datasets(cfg.dataset);
  jal::TrainConfig tc = cfg.train;
  if (!variant.empty()) tc.net.variant = jal::variant_from_string(variant);
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl");
  jal::JeaNet net(tc.net, tc.seed);
  auto result = jal::train(net, tc, data.train, &log, [](const jal::TrainLogEntry& e) {
    std::cerr << "iter " << e.iter << " rev " << e.rev << " ue " << e.ue << " rgt "
              << e.mean_rgt << '\n';
  });
  jal::save_checkpoint(jal::Checkpoint::capture(net, tc, &result), dir / "checkpoint.json");
  std::cout << "checkpoint: " << (dir / "checkpoint.json").string() << '\n';
  return 0;
}

int cmd_eval(const jal::ExperimentConfig& cfg, const std::string& ckpt_flag) {
  auto data = jal::load_datasets(cfg.dataset);
  auto ckpt = jal::load_checkpoint(checkpoint_path(cfg, ckpt_flag));
  auto net = ckpt.restore();
  jal::JeaNetMechanism mech(net, cfg.round);
  auto outs = jal::run_all(mech, data.test.instances);
  auto m = jal::metrics(outs, data.test.instances, cfg.gamma);
  jal::Dataset subset = data.test;
  subset.instances.resize(std::min(subset.size(), cfg.regret.samples));
  auto rgt = jal::estimate_regret(net, subset, cfg.regret.search, cfg.seed);
  json j{{"variant", std::string(jal::to_string(net.config().variant))},
         {"SW", m.sw}, {"Rev", m.rev}, {"UE", m.ue}, {"Score", m.score},
         {"mean_rgt", rgt.mean}, {"max_rgt", rgt.max}, {"regret_samples", rgt.samples},
         {"config_digest", cfg.digest()}};
  write_json(fs::path(cfg.out_dir) / "eval.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_baseline(jal::ExperimentConfig cfg) {
  std::vector<std::string> kept;
  for (const auto& m : cfg.mechanisms)
    if (m == "vcg" || m == "gsp" || m == "ias") kept.push_back(m);
  if (kept.empty()) kept = {"vcg", "gsp", "ias"};
  cfg.mechanisms = kept;
  if (std::find(kept.begin(), kept.end(), cfg.anchor) == kept.end()) cfg.anchor = kept.front();
  auto rep = jal::run_experiment(cfg, &std::cerr);
  rep.write(cfg.out_dir, "baselines");
  print_rows(rep);
  return 0;
}

int cmd_report(const jal::ExperimentConfig& cfg) {
  auto rep = jal::run_experiment(cfg, &std::cerr);
  rep.write(cfg.out_dir, "report");
  print_rows(rep);
  return 0;
}

int cmd_ablation(const jal::ExperimentConfig& cfg, const std::string& variant) {
  const auto v = jal::variant_from_string(variant);
  auto rep = jal::ablation(cfg, v, &std::cerr);
  rep.write(cfg.out_dir, "ablation-" + variant);
  print_rows(rep);
  return 0;
}

int cmd_audit(const jal::ExperimentConfig& cfg, const std::string& mechanism,
              const std::string& ckpt_flag) {
  auto data = jal::load_datasets(cfg.dataset);
  json j;
  if (mechanism == "jeanet") {
    auto net = jal::load_checkpoint(checkpoint_path(cfg, ckpt_flag)).restore();
    jal::JeaNetMechanism mech(net, cfg.round);
    j = jal::regret_audit(mech, data.test, cfg.regret, cfg.seed).to_json();
  } else {
    auto mech = jal::make_baseline(mechanism, cfg, data.train);
    j = jal::regret_audit(*mech, data.test, cfg.regret, cfg.seed).to_json();
  }
  j["mechanism"] = mechanism;
  j["grid_step"] = cfg.regret.grid_step;
  write_json(fs::path(cfg.out_dir) / ("regret-audit-" + mechanism + ".json"), j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint auction experiments: data generation, training, evaluation, reports"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Overrides every seed in the config");
  app.add_option("--threads", g.threads, "Worker threads for baseline evaluation")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Output directory");

  auto* datagen = app.add_subcommand("datagen", "Write train/test JSON lines");
  std::string train_variant;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--variant", train_variant, "full, etm+dmm or mlp+dmm");
  std::string eval_ckpt;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test set");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint path");
  auto* baseline = app.add_subcommand("baseline", "Evaluate VCG, GSP and IAS");
  std::string ablation_variant = "mlp+dmm";
  auto* abl = app.add_subcommand("ablation", "Full model against a reduced variant");
  abl->add_option("--variant", ablation_variant, "etm+dmm or mlp+dmm");
  auto* report = app.add_subcommand("report", "Normalised comparison table");
  std::string audit_mech = "jeanet", audit_ckpt;
  auto* audit = app.add_subcommand("regret-audit", "Gradient and grid regret side by side");
  audit->add_option("--mechanism", audit_mech, "jeanet, vcg, gsp or ias");
  audit->add_option("--checkpoint", audit_ckpt, "Checkpoint path for jeanet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto cfg = load_config(g);
    if (datagen->parsed()) return cmd_datagen(cfg);
    if (train->parsed()) return cmd_train(cfg, train_variant);
    if (eval->parsed()) return cmd_eval(cfg, eval_ckpt);
    if (baseline->parsed()) return cmd_baseline(cfg);
    if (abl->parsed()) return cmd_ablation(cfg, ablation_variant);
    if (report->parsed()) return cmd_report(cfg);
    if (audit->parsed()) return cmd_audit(cfg, audit_mech, audit_ckpt);
  } catch (const jal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const jal::SchemaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const jal::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const jal::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
