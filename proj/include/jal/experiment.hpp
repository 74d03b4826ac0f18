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

#ifndef JAL_EXPERIMENT_HPP_
#define JAL_EXPERIMENT_HPP_

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jal/auction.hpp"
#include "jal/baselines.hpp"
#include "jal/checkpoint.hpp"
#include "jal/datagen.hpp"
#include "jal/training.hpp"

namespace jal {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double mean_diff = 0.0;
  std::size_t n = 0;
};

// Two-sided paired t-test on a - b.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

struct DatasetConfig {
  // "A", "B", "C" for the fixed settings, "random4".."random6" for the
  // random-count settings.
  std::string setting = "A";
  DistributionSpec bid_dist = Uniform{};
  std::size_t train_samples = 100000;
  std::size_t test_samples = 10000;
  std::uint64_t seed = 1;
  // JSON-lines files replace generation when set.
  std::optional<std::string> train_path, test_path;
  // Industrial request logs, split into train/test by `test_fraction`.
  std::optional<std::string> logs_path;
  double test_fraction = 0.1;
  std::size_t target_slots = 4;

  SettingSpec spec() const;
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

struct RegretEvalConfig {
  MisreportConfig search{};
  std::size_t samples = 500;           // learned mechanisms
  std::size_t baseline_samples = 100;  // black-box baselines
  double grid_step = 0.05;
  std::size_t audit_samples = 50;
  double audit_tolerance = 0.002;

  nlohmann::json to_json() const;
  static RegretEvalConfig from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
  DatasetConfig dataset;
  // Subset of {jeanet, vcg, gsp, ias, ablation:etm+dmm, ablation:mlp+dmm}.
  std::vector<std::string> mechanisms{"jeanet", "vcg", "gsp", "ias"};
  TrainConfig train;
  double gamma = 0.5;
  std::string anchor = "vcg";
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  // Trained full-model checkpoint; trained on demand when unset.
  std::optional<std::string> checkpoint;
  // Reuses checkpoints keyed by the training digest when set.
  std::optional<std::string> cache_dir;
  RegretEvalConfig regret;
  bool round = false;
  std::optional<GspConfig> gsp;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string digest() const;
};

struct MechanismRow {
  std::string mechanism;
  Metrics raw;
  double sw_norm = 0, rev_norm = 0, ue_norm = 0, score_norm = 0;
  std::optional<RegretReport> regret;
  std::vector<double> sample_scores;
};

struct Significance {
  std::string a, b;
  TTestResult test;
};

struct ExperimentReport {
  std::vector<MechanismRow> rows;
  std::vector<Significance> significance;
  std::string anchor;
  double gamma = 0.5;
  std::string config_digest;
  double runtime_s = 0.0;
  nlohmann::json design_flags;

  const MechanismRow& row(const std::string& mechanism) const;
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& dir, const std::string& stem) const;
};

// Divides SW/Rev/UE by the anchor row; Score_norm = Rev_norm + gamma * UE_norm.
void normalize(std::vector<MechanismRow>& rows, const std::string& anchor, double gamma);

struct Datasets {
  Dataset train, test;
};
Datasets load_datasets(const DatasetConfig& cfg);

// Baseline mechanism by name ("vcg", "gsp", "ias"); IAS priors come from the
// bid law or, for ingested logs, a lognormal fit on the training set.
std::unique_ptr<Mechanism> make_baseline(const std::string& name,
                                         const ExperimentConfig& cfg,
                                         const Dataset& train);

// Loads the cached checkpoint for (train config, dataset) or trains one.
Checkpoint train_or_load(const TrainConfig& train, const DatasetConfig& dataset,
                         const Dataset& data, const std::optional<std::string>& cache_dir,
                         std::ostream* log = nullptr);

// Outcomes for every instance, batching learned mechanisms by shape.
std::vector<Outcome> run_all(const Mechanism& mech, std::span<const AuctionInstance> data);

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);
ExperimentReport ablation(const ExperimentConfig& cfg, Variant variant,
                          std::ostream* log = nullptr);

struct AuditReport {
  RegretReport gradient, grid;
  bool flagged = false;
  nlohmann::json to_json() const;
};
AuditReport regret_audit(const Mechanism& mech, const Dataset& data,
                         const RegretEvalConfig& cfg, std::uint64_t seed);

nlohmann::json design_flags(const ExperimentConfig& cfg, const Dataset& train);

}  // namespace jal

#endif  // JAL_EXPERIMENT_HPP_
