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

#include "jal/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "jal/errors.hpp"
#include "jal/parallel.hpp"

namespace jal {

using nlohmann::json;
namespace d = diff;
using diff::Shape;

void MisreportConfig::validate() const {
  if (restarts == 0) throw ConfigError("misreport restarts must be positive");
  if (!(lr > 0.0)) throw ConfigError("misreport lr must be positive");
}

void TrainConfig::validate() const {
  net.validate();
  eval_misreport.validate();
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(rho_init > 0.0) || !(rho_growth >= 1.0) || !(rho_max >= rho_init))
    throw ConfigError("rho schedule must satisfy 0 < rho_init <= rho_max, growth >= 1");
  if (rho_every_epochs == 0 || lambda_period == 0)
    throw ConfigError("rho and lambda periods must be positive");
  if (!(misreport_lr > 0.0)) throw ConfigError("misreport_lr must be positive");
  if (eval_every == 0 || eval_samples == 0)
    throw ConfigError("evaluation period and sample count must be positive");
}

json TrainConfig::to_json() const {
  return json{{"net", net.to_json()},
              {"gamma", gamma},
              {"beta", beta},
              {"lr", lr},
              {"batch_size", batch_size},
              {"aem_epochs", aem_epochs},
              {"iterations", iterations},
              {"rho_init", rho_init},
              {"rho_growth", rho_growth},
              {"rho_every_epochs", rho_every_epochs},
              {"rho_max", rho_max},
              {"lambda_period", lambda_period},
              {"misreport_steps", misreport_steps},
              {"misreport_lr", misreport_lr},
              {"eval_misreport",
               {{"steps", eval_misreport.steps},
                {"lr", eval_misreport.lr},
                {"restarts", eval_misreport.restarts}}},
              {"eval_every", eval_every},
              {"eval_samples", eval_samples},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    if (j.contains("net")) c.net = JeaNetConfig::from_json(j.at("net"));
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    take("gamma", c.gamma);
    take("beta", c.beta);
    take("lr", c.lr);
    take("batch_size", c.batch_size);
    take("aem_epochs", c.aem_epochs);
    take("iterations", c.iterations);
    take("rho_init", c.rho_init);
    take("rho_growth", c.rho_growth);
    take("rho_every_epochs", c.rho_every_epochs);
    take("rho_max", c.rho_max);
    take("lambda_period", c.lambda_period);
    take("misreport_steps", c.misreport_steps);
    take("misreport_lr", c.misreport_lr);
    if (j.contains("eval_misreport")) {
      const auto& e = j.at("eval_misreport");
      if (e.contains("steps")) e.at("steps").get_to(c.eval_misreport.steps);
      if (e.contains("lr")) e.at("lr").get_to(c.eval_misreport.lr);
      if (e.contains("restarts")) e.at("restarts").get_to(c.eval_misreport.restarts);
    }
    take("eval_every", c.eval_every);
    take("eval_samples", c.eval_samples);
    take("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

json TrainLogEntry::to_json() const {
  return json{{"iter", iter},       {"rev", rev},          {"ue", ue},
              {"score", score},     {"mean_rgt", mean_rgt}, {"max_rgt", max_rgt},
              {"lambda_mean", lambda_mean}, {"rho", rho},  {"wall_ms", wall_ms}};
}

// ---------------------------------------------------------------------------

double lagrangian_loss(double rev, double ue, double gamma,
                       std::span<const double> rgt, std::span<const double> lambda,
                       double rho) {
  if (rgt.size() > lambda.size())
    throw DimensionError("fewer multipliers than regret terms");
  double loss = -(rev + gamma * ue);
  for (std::size_t i = 0; i < rgt.size(); ++i)
    loss += lambda[i] * rgt[i] + 0.5 * rho * rgt[i] * rgt[i];
  return loss;
}

Var lagrangian_loss(const Var& rev, const Var& ue, double gamma, const Var& rgt,
                    std::span<const double> lambda, double rho) {
  const std::size_t m = rgt.value().size();
  if (m > lambda.size()) throw DimensionError("fewer multipliers than regret terms");
  Var objective = -(rev + d::scale(ue, gamma));
  if (m == 0) return objective;
  Array lam({m}, std::vector<double>(lambda.begin(), lambda.begin() + m));
  Var penalty = d::sum_all(rgt * d::constant(lam)) +
                d::scale(d::sum_all(d::square(rgt)), 0.5 * rho);
  return objective + penalty;
}

std::vector<double> update_multipliers(std::span<const double> lambda,
                                       std::span<const double> rgt, double rho) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  if (rgt.size() > lambda.size())
    throw DimensionError("fewer multipliers than regret terms");
  std::vector<double> out(lambda.begin(), lambda.end());
  for (std::size_t i = 0; i < rgt.size(); ++i) out[i] += rho * rgt[i];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::array<double, 2> type_mask(AdvertiserType t) {
  switch (t) {
    case AdvertiserType::kStore: return {1.0, 0.0};
    case AdvertiserType::kBrand: return {0.0, 1.0};
    case AdvertiserType::kJoint: return {1.0, 1.0};
  }
  return {1.0, 1.0};
}

BidPair random_report(AdvertiserType t, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const auto mask = type_mask(t);
  BidPair b;
  if (mask[0] > 0) b.store = u(rng);
  if (mask[1] > 0) b.brand = u(rng);
  return b;
}

// Utility of every advertiser row in `o` against true values (B, m, 2).
Var utilities(const NetOutput& o, const Array& values) {
  const std::size_t B = values.dim(0), m = values.dim(1);
  Var ctr = d::reshape(d::slice(o.ctr, 1, 0, m), {B, m, 1});
  return d::sum(d::constant(values) * ctr, {2}) - d::sum(o.payments, {2});
}

// Indices grouped by instance shape, in first-seen order.
std::vector<std::vector<std::size_t>> buckets_of(
    std::span<const AuctionInstance> instances) {
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> slot;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < instances.size(); ++s) {
    auto key = std::make_tuple(instances[s].num_ads(), instances[s].num_organics(),
                               instances[s].num_slots());
    auto [it, fresh] = slot.emplace(key, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(s);
  }
  return out;
}

struct FrozenScope {
  explicit FrozenScope(const nn::ParameterStore& s) : store(s) { store.set_frozen(true); }
  ~FrozenScope() { store.set_frozen(false); }
  const nn::ParameterStore& store;
};

constexpr std::size_t kChunk = 16;

}  // namespace

MisreportResult optimize_misreports(const JeaNet& net,
                                    std::span<const AuctionInstance> instances,
                                    const MisreportConfig& cfg, std::uint64_t seed,
                                    double lo, double hi) {
  cfg.validate();
  MisreportResult res;
  res.best.resize(instances.size());
  res.best_utility.resize(instances.size());
  res.truthful_utility.resize(instances.size());
  FrozenScope frozen(net.params());
  const std::size_t R = cfg.restarts;

  for (const auto& bucket : buckets_of(instances)) {
    for (std::size_t c0 = 0; c0 < bucket.size(); c0 += kChunk) {
      const std::size_t c1 = std::min(bucket.size(), c0 + kChunk);
      std::vector<AuctionInstance> chunk;
      for (std::size_t c = c0; c < c1; ++c) chunk.push_back(instances[bucket[c]]);
      NetBatch base = NetBatch::from(chunk);
      const std::size_t Bc = base.B, m = base.m, N = base.N;
      if (m == 0) continue;

      Array u_true;
      {
        d::NoGradGuard guard;
        u_true = utilities(net.forward(base), base.values).value();
      }
      for (std::size_t b = 0; b < Bc; ++b) {
        const std::size_t s = bucket[c0 + b];
        res.best[s] = instances[s].truthful_bids();
        res.truthful_utility[s].assign(u_true.data() + b * m, u_true.data() + (b + 1) * m);
        res.best_utility[s] = res.truthful_utility[s];
      }

      // Copy (b, i, r) lets advertiser i of instance b deviate from restart r.
      const std::size_t copies = m * R;
      NetBatch rep = base.repeat_each(copies);
      Array bids = rep.truthful;
      Array mask({Bc * copies, m}, 0.0);
      for (std::size_t b = 0; b < Bc; ++b) {
        const std::size_t s = bucket[c0 + b];
        Rng rng = stream_for(seed, s);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t r = 0; r < R; ++r) {
            const std::size_t row = (b * m + i) * R + r;
            mask[row * m + i] = 1.0;
            if (r == 0) continue;
            BidPair start = random_report(instances[s].advertisers[i].kind, rng, lo, hi);
            bids[(row * N + i) * 2] = start.store;
            bids[(row * N + i) * 2 + 1] = start.brand;
          }
      }
      for (std::size_t step = 0; step <= cfg.steps; ++step) {
        Var bv = d::variable(bids);
        NetOutput o = net.forward(rep, bv);
        Var u = d::sum(utilities(o, rep.values) * d::constant(mask), {1});
        for (std::size_t b = 0; b < Bc; ++b) {
          const std::size_t s = bucket[c0 + b];
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t r = 0; r < R; ++r) {
              const std::size_t row = (b * m + i) * R + r;
              if (u.value()[row] > res.best_utility[s][i]) {
                res.best_utility[s][i] = u.value()[row];
                res.best[s][i] = {bids[(row * N + i) * 2], bids[(row * N + i) * 2 + 1]};
              }
            }
        }
        if (step == cfg.steps) break;
        d::backward(d::sum_all(u));
        const Array g = bv.grad();
        for (std::size_t b = 0; b < Bc; ++b) {
          const std::size_t s = bucket[c0 + b];
          for (std::size_t i = 0; i < m; ++i) {
            const auto tm = type_mask(instances[s].advertisers[i].kind);
            for (std::size_t r = 0; r < R; ++r) {
              const std::size_t at = (((b * m + i) * R + r) * N + i) * 2;
              for (std::size_t j = 0; j < 2; ++j)
                if (tm[j] > 0)
                  bids[at + j] = std::clamp(bids[at + j] + cfg.lr * g[at + j], lo, hi);
            }
          }
        }
      }
    }
  }
  return res;
}

MisreportResult optimize_misreports(const Mechanism& mech,
                                    std::span<const AuctionInstance> instances,
                                    const MisreportConfig& cfg, std::uint64_t seed,
                                    double lo, double hi) {
  cfg.validate();
  constexpr double h = 1e-4;
  MisreportResult res;
  res.best.resize(instances.size());
  res.best_utility.resize(instances.size());
  res.truthful_utility.resize(instances.size());
  parallel_for(instances.size(), [&](std::size_t s) {
    const auto& inst = instances[s];
    Rng rng = stream_for(seed, s);
    res.best[s] = inst.truthful_bids();
    for (std::size_t i = 0; i < inst.num_ads(); ++i) {
      const auto kind = inst.advertisers[i].kind;
      const auto tm = type_mask(kind);
      const double truthful =
          utility_under_report(mech, inst, i, inst.advertisers[i].value);
      res.truthful_utility[s].push_back(truthful);
      double best = truthful;
      for (std::size_t r = 0; r < cfg.restarts; ++r) {
        BidPair b = r == 0 ? inst.advertisers[i].value : random_report(kind, rng, lo, hi);
        for (std::size_t step = 0; step <= cfg.steps; ++step) {
          const double u = utility_under_report(mech, inst, i, b);
          if (u > best) {
            best = u;
            res.best[s][i] = b;
          }
          if (step == cfg.steps) break;
          BidPair next = b;
          for (int j = 0; j < 2; ++j) {
            if (tm[j] == 0) continue;
            BidPair up = b, down = b;
            up[j] = std::min(hi, b[j] + h);
            down[j] = std::max(lo, b[j] - h);
            const double grad = (utility_under_report(mech, inst, i, up) -
                                 utility_under_report(mech, inst, i, down)) /
                                (up[j] - down[j]);
            next[j] = std::clamp(b[j] + cfg.lr * grad, lo, hi);
          }
          b = next;
        }
      }
      res.best_utility[s].push_back(best);
    }
  });
  return res;
}

RegretReport regret_report(const MisreportResult& r, RegretReport::Method method) {
  RegretReport rep;
  rep.method = method;
  rep.samples = r.best_utility.size();
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t s = 0; s < r.best_utility.size(); ++s)
    for (std::size_t i = 0; i < r.best_utility[s].size(); ++i) {
      const double g = std::max(0.0, r.best_utility[s][i] - r.truthful_utility[s][i]);
      if (sums.size() <= i) {
        sums.resize(i + 1, 0.0);
        counts.resize(i + 1, 0);
      }
      sums[i] += g;
      ++counts[i];
      total += g;
      ++pairs;
      rep.max = std::max(rep.max, g);
    }
  for (std::size_t i = 0; i < sums.size(); ++i)
    rep.per_advertiser.push_back(sums[i] / static_cast<double>(counts[i]));
  rep.mean = pairs ? total / static_cast<double>(pairs) : 0.0;
  return rep;
}

RegretReport estimate_regret(const JeaNet& net, const Dataset& data,
                             const MisreportConfig& cfg, std::uint64_t seed) {
  return regret_report(optimize_misreports(net, data.instances, cfg, seed,
                                           data.value_lo, data.value_hi),
                       RegretReport::Method::kGradient);
}

RegretReport estimate_regret(const Mechanism& mech, const Dataset& data,
                             const MisreportConfig& cfg, std::uint64_t seed) {
  return regret_report(optimize_misreports(mech, data.instances, cfg, seed,
                                           data.value_lo, data.value_hi),
                       RegretReport::Method::kGradient);
}

RegretReport grid_regret(const Mechanism& mech, const Dataset& data,
                         double grid_step) {
  MisreportResult r;
  r.best_utility.resize(data.size());
  r.truthful_utility.resize(data.size());
  parallel_for(data.size(), [&](std::size_t s) {
    const auto& inst = data.instances[s];
    for (std::size_t i = 0; i < inst.num_ads(); ++i) {
      r.truthful_utility[s].push_back(0.0);
      r.best_utility[s].push_back(
          regret_grid_oracle(mech, inst, i, grid_step, data.value_hi));
    }
  });
  return regret_report(r, RegretReport::Method::kGrid);
}

// ---------------------------------------------------------------------------

AemReport train_aem(JeaNet& net, const Dataset& data, const TrainConfig& cfg) {
  AemReport rep;
  if (cfg.net.variant != Variant::kFull || cfg.aem_epochs == 0) return rep;
  if (data.instances.empty()) throw DomainError("empty training set");
  Rng rng = stream_for(cfg.seed, 0xae);
  const std::size_t D = cfg.net.rq_depth;

  // Truthful bid features of every cell, per instance.
  auto cells_of = [](const AuctionInstance& inst) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < inst.num_items(); ++i)
      for (std::size_t k = 0; k < inst.num_slots(); ++k) {
        BidPair b = i < inst.num_ads() ? inst.advertisers[i].value : BidPair{};
        out.push_back({b.store * inst.slots[k], b.brand * inst.slots[k]});
      }
    return out;
  };
  auto mse = [&](const std::vector<Codebook>& books,
                 const std::vector<std::vector<double>>& xs) {
    double err = 0.0;
    for (const auto& x : xs) {
      auto q = rq_quantize(x, books, D).quantized();
      err += (x[0] - q[0]) * (x[0] - q[0]) + (x[1] - q[1]) * (x[1] - q[1]);
    }
    return err / static_cast<double>(xs.size());
  };

  std::vector<std::vector<double>> probe;
  for (std::size_t s = 0; s < std::min<std::size_t>(256, data.instances.size()); ++s)
    for (auto& c : cells_of(data.instances[s])) probe.push_back(std::move(c));

  EmaCodebook ema(net.codebooks(), EmaConfig{}, cfg.seed);
  ema.init_from(probe);
  rep.mean_sq_error_before = mse(ema.books(), probe);

  const auto decoder = net.decoder_parameters();
  d::AdamConfig adam{cfg.lr};
  std::vector<std::size_t> order(data.instances.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.aem_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      std::vector<std::vector<double>> cells;
      for (std::size_t b = b0; b < std::min(order.size(), b0 + cfg.batch_size); ++b)
        for (auto& c : cells_of(data.instances[order[b]])) cells.push_back(std::move(c));
      ema.update(cells, D);

      Array e({cells.size(), 2});
      for (std::size_t c = 0; c < cells.size(); ++c) {
        e[2 * c] = cells[c][0];
        e[2 * c + 1] = cells[c][1];
      }
      auto sums = rq_quantize_cells(e, ema.books(), D);
      Var ev = d::constant(e);
      Var recon = net.decode(d::straight_through(d::constant(sums.back()), ev));
      AemLosses l = aem_losses(ev, recon, ev, sums, cfg.beta);
      net.params().zero_grad();
      d::backward(l.total);
      d::adam_step(net.params(), adam, decoder);
      rep.recon = l.recon.value().item();
      rep.commit = l.commit.value().item();
    }
  }
  net.set_codebooks(ema.books());
  rep.mean_sq_error_after = mse(ema.books(), probe);
  return rep;
}

namespace {

struct Evaluation {
  double rev = 0, ue = 0, score = 0, mean_rgt = 0, max_rgt = 0;
};

Evaluation evaluate(const JeaNet& net, const Dataset& data,
                    std::span<const AuctionInstance> subset, const TrainConfig& cfg) {
  Evaluation ev;
  JeaNetMechanism mech(net);
  std::vector<Outcome> outcomes;
  std::vector<AuctionInstance> ordered;
  for (const auto& bucket : buckets_of(subset)) {
    std::vector<AuctionInstance> part;
    for (std::size_t s : bucket) part.push_back(subset[s]);
    for (auto& o : mech.run_batch(part)) outcomes.push_back(std::move(o));
    for (auto& p : part) ordered.push_back(std::move(p));
  }
  Metrics m = metrics(outcomes, ordered, cfg.gamma);
  ev.rev = m.rev;
  ev.ue = m.ue;
  ev.score = m.score;
  RegretReport r = regret_report(
      optimize_misreports(net, subset, cfg.eval_misreport, cfg.seed ^ 0x5eed,
                          data.value_lo, data.value_hi),
      RegretReport::Method::kGradient);
  ev.mean_rgt = r.mean;
  ev.max_rgt = r.max;
  return ev;
}

}  // namespace

TrainResult train(JeaNet& net, const TrainConfig& cfg, const Dataset& data,
                  std::ostream* log,
                  const std::function<void(const TrainLogEntry&)>& on_eval) {
  cfg.validate();
  if (data.instances.empty()) throw DomainError("empty training set");
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  result.aem = train_aem(net, data, cfg);

  const auto& inst = data.instances;
  const double lo = data.value_lo, hi = data.value_hi;
  Rng rng = stream_for(cfg.seed, 0x7a);
  std::size_t max_m = 0;
  for (const auto& x : inst) max_m = std::max(max_m, x.num_ads());
  std::vector<double> lambda(max_m, 0.0);
  double rho = cfg.rho_init;

  // Persistent misreports, one per (sample, advertiser).
  std::vector<std::vector<BidPair>> mis(inst.size());
  for (std::size_t s = 0; s < inst.size(); ++s)
    for (const auto& a : inst[s].advertisers)
      mis[s].push_back(random_report(a.kind, rng, lo, hi));

  const auto buckets = buckets_of(inst);
  std::vector<std::vector<std::size_t>> batches;
  auto refill = [&] {
    batches.clear();
    for (auto bucket : buckets) {
      std::shuffle(bucket.begin(), bucket.end(), rng);
      for (std::size_t b0 = 0; b0 < bucket.size(); b0 += cfg.batch_size)
        batches.emplace_back(bucket.begin() + b0,
                             bucket.begin() + std::min(bucket.size(), b0 + cfg.batch_size));
    }
    std::shuffle(batches.begin(), batches.end(), rng);
  };
  refill();
  const std::size_t epoch_iters = batches.size();
  std::size_t next_batch = 0;

  std::vector<AuctionInstance> eval_set(
      inst.begin(), inst.begin() + std::min(inst.size(), cfg.eval_samples));
  const auto names = net.mechanism_parameters();
  d::AdamConfig adam{cfg.lr};
  std::vector<double> window_rgt(max_m, 0.0);
  std::size_t window_n = 0;

  auto record = [&](std::size_t iter) {
    Evaluation ev = evaluate(net, data, eval_set, cfg);
    TrainLogEntry e;
    e.iter = iter;
    e.rev = ev.rev;
    e.ue = ev.ue;
    e.score = ev.score;
    e.mean_rgt = ev.mean_rgt;
    e.max_rgt = ev.max_rgt;
    e.lambda_mean = lambda.empty() ? 0.0
                                   : std::accumulate(lambda.begin(), lambda.end(), 0.0) /
                                         static_cast<double>(lambda.size());
    e.rho = rho;
    e.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(e);
    if (log) *log << e.to_json().dump() << '\n' << std::flush;
    if (on_eval) on_eval(e);
  };

  for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
    if (next_batch == batches.size()) {
      refill();
      next_batch = 0;
    }
    const auto& idx = batches[next_batch++];
    std::vector<AuctionInstance> chunk;
    for (std::size_t s : idx) chunk.push_back(inst[s]);
    NetBatch base = NetBatch::from(chunk);
    const std::size_t B = base.B, m = base.m, N = base.N;

    try {
      net.params().zero_grad();
      NetOutput ot = net.forward(base);
      Var rev = d::mean_all(d::sum(ot.payments, {1, 2}));
      Var ue = d::mean_all(d::sum(ot.ctr * d::constant(base.ue), {1}));
      Var rgt = d::constant(Array({0}));
      Var u_mis, bids_var;
      if (m > 0) {
        NetBatch rep = base.repeat_each(m);
        Array bids = rep.truthful;
        Array mask({B * m, m}, 0.0);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t i = 0; i < m; ++i) {
            const std::size_t row = b * m + i;
            mask[row * m + i] = 1.0;
            bids[(row * N + i) * 2] = mis[idx[b]][i].store;
            bids[(row * N + i) * 2 + 1] = mis[idx[b]][i].brand;
          }
        // Extra ascent steps on the misreports with the network frozen.
        for (std::size_t step = 1; step < cfg.misreport_steps; ++step) {
          FrozenScope frozen(net.params());
          Var bv = d::variable(bids);
          NetOutput om = net.forward(rep, bv);
          d::backward(d::sum_all(d::sum(utilities(om, rep.values) * d::constant(mask), {1})));
          const Array g = bv.grad();
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < m; ++i) {
              const auto tm = type_mask(chunk[b].advertisers[i].kind);
              const std::size_t at = ((b * m + i) * N + i) * 2;
              for (std::size_t j = 0; j < 2; ++j)
                if (tm[j] > 0)
                  bids[at + j] = std::clamp(bids[at + j] + cfg.misreport_lr * g[at + j], lo, hi);
            }
        }
        bids_var = d::variable(bids);
        NetOutput om = net.forward(rep, bids_var);
        u_mis = d::reshape(d::sum(utilities(om, rep.values) * d::constant(mask), {1}),
                           {B, m});
        Var u_true = utilities(ot, base.values);
        rgt = d::mean(d::relu(u_mis - u_true), {0});
      }
      Var loss = lagrangian_loss(rev, ue, cfg.gamma, rgt, lambda, rho);
      if (!std::isfinite(loss.value().item()))
        throw NumericError("non-finite loss");

      if (m > 0) {
        // Ascent direction for the persistent misreports.
        d::backward(d::sum_all(u_mis));
        const Array g = bids_var.grad();
        const Array& cur = bids_var.value();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t i = 0; i < m; ++i) {
            const auto tm = type_mask(chunk[b].advertisers[i].kind);
            const std::size_t at = ((b * m + i) * N + i) * 2;
            BidPair next{cur[at], cur[at + 1]};
            for (int j = 0; j < 2; ++j)
              if (tm[j] > 0)
                next[j] = std::clamp(next[j] + cfg.misreport_lr * g[at + j], lo, hi);
            mis[idx[b]][i] = next;
          }
        net.params().zero_grad();
        for (std::size_t i = 0; i < m; ++i) window_rgt[i] += rgt.value()[i];
        ++window_n;
      }
      d::backward(loss);
      d::adam_step(net.params(), adam, names);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at iteration " + std::to_string(iter) +
                         " (rho " + std::to_string(rho) + "): " + e.what());
    }

    if (iter % cfg.lambda_period == 0 && window_n > 0) {
      for (double& w : window_rgt) w /= static_cast<double>(window_n);
      lambda = update_multipliers(lambda, window_rgt, rho);
      std::fill(window_rgt.begin(), window_rgt.end(), 0.0);
      window_n = 0;
    }
    if (iter % (cfg.rho_every_epochs * epoch_iters) == 0)
      rho = std::min(cfg.rho_max, rho * cfg.rho_growth);
    if (iter % cfg.eval_every == 0 || iter == cfg.iterations) record(iter);
  }
  result.lambda = lambda;
  result.rho = rho;
  net.params().lambda = lambda;
  net.params().rho = rho;
  return result;
}

}  // namespace jal
