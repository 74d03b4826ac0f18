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

// Training of JEANet: quantiser pretraining, then the augmented Lagrangian
// objective with persistent per-sample misreports, plus regret estimation
// for learned and hand-written mechanisms.

#ifndef JAL_TRAINING_HPP_
#define JAL_TRAINING_HPP_

#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <span>
#include <vector>

#include "jal/auction.hpp"
#include "jal/datagen.hpp"
#include "jal/net.hpp"

namespace jal {

struct MisreportConfig {
  std::size_t steps = 25;
  double lr = 0.1;
  std::size_t restarts = 10;  // first restart starts at the truthful bid

  void validate() const;
};

struct TrainConfig {
  JeaNetConfig net;
  double gamma = 0.5;
  double beta = 0.25;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t aem_epochs = 5;
  std::size_t iterations = 30000;
  double rho_init = 1.0;
  double rho_growth = 2.0;
  std::size_t rho_every_epochs = 2;
  double rho_max = 64.0;
  std::size_t lambda_period = 100;
  // Ascent steps applied to the persistent misreports each iteration.
  std::size_t misreport_steps = 1;
  double misreport_lr = 0.1;
  MisreportConfig eval_misreport{};
  std::size_t eval_every = 500;
  std::size_t eval_samples = 256;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct MisreportResult {
  // Indexed [instance][advertiser].
  std::vector<std::vector<BidPair>> best;
  std::vector<std::vector<double>> best_utility;
  std::vector<std::vector<double>> truthful_utility;
};

// Projected gradient ascent on each advertiser's utility over type-shaped
// bids in [lo, hi], others truthful. The network is frozen meanwhile.
MisreportResult optimize_misreports(const JeaNet& net,
                                    std::span<const AuctionInstance> instances,
                                    const MisreportConfig& cfg, std::uint64_t seed,
                                    double lo = 0.0, double hi = 1.0);
// Same search for a black-box mechanism, with central-difference gradients.
MisreportResult optimize_misreports(const Mechanism& mech,
                                    std::span<const AuctionInstance> instances,
                                    const MisreportConfig& cfg, std::uint64_t seed,
                                    double lo = 0.0, double hi = 1.0);

RegretReport regret_report(const MisreportResult& r,
                           RegretReport::Method method);

RegretReport estimate_regret(const JeaNet& net, const Dataset& data,
                             const MisreportConfig& cfg, std::uint64_t seed);
RegretReport estimate_regret(const Mechanism& mech, const Dataset& data,
                             const MisreportConfig& cfg, std::uint64_t seed);
// Grid oracle over every (sample, advertiser).
RegretReport grid_regret(const Mechanism& mech, const Dataset& data,
                         double grid_step);

// -(rev + gamma * ue) + sum_i lambda_i rgt_i + rho / 2 * sum_i rgt_i^2.
double lagrangian_loss(double rev, double ue, double gamma,
                       std::span<const double> rgt, std::span<const double> lambda,
                       double rho);
Var lagrangian_loss(const Var& rev, const Var& ue, double gamma, const Var& rgt,
                    std::span<const double> lambda, double rho);

std::vector<double> update_multipliers(std::span<const double> lambda,
                                       std::span<const double> rgt, double rho);

struct TrainLogEntry {
  std::size_t iter = 0;
  double rev = 0, ue = 0, score = 0;
  double mean_rgt = 0, max_rgt = 0;
  double lambda_mean = 0, rho = 0;
  double wall_ms = 0;

  nlohmann::json to_json() const;
};

struct AemReport {
  double recon = 0, commit = 0;
  double mean_sq_error_before = 0, mean_sq_error_after = 0;
};

// Phase 1: EMA codebook learning and decoder fitting on truthful bid
// features for `cfg.aem_epochs` passes over the data.
AemReport train_aem(JeaNet& net, const Dataset& data, const TrainConfig& cfg);

struct TrainResult {
  AemReport aem;
  std::vector<TrainLogEntry> log;
  std::vector<double> lambda;
  double rho = 0;
};

// Full two-phase training. Log lines go to `log` as JSON when given.
// `on_eval` runs after every evaluation window.
TrainResult train(JeaNet& net, const TrainConfig& cfg, const Dataset& data,
                  std::ostream* log = nullptr,
                  const std::function<void(const TrainLogEntry&)>& on_eval = {});

}  // namespace jal

#endif  // JAL_TRAINING_HPP_
