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

#include "jal/experiment.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "jal/baselines.hpp"
#include "jal/errors.hpp"
#include "jal/net.hpp"
#include "jal/parallel.hpp"

namespace jal {

using nlohmann::json;

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("paired t-test needs equal lengths");
  if (a.size() < 2) throw DomainError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  TTestResult r;
  r.n = n;
  r.mean_diff = mean;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    if (mean == 0.0) return r;
    r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

// ---------------------------------------------------------------------------

namespace {

json dist_to_json(const DistributionSpec& d) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return {{"kind", "uniform"}, {"lo", s.lo}, {"hi", s.hi}};
        } else if constexpr (std::is_same_v<T, TruncatedNormal>) {
          return {{"kind", "truncated_normal"}, {"mean", s.mean}, {"sd", s.sd},
                  {"lo", s.lo}, {"hi", s.hi}};
        } else {
          json comps = json::array();
          for (auto [mu, sigma] : s.components) comps.push_back({mu, sigma});
          return {{"kind", "lognormal_mixture"}, {"components", comps},
                  {"lo", s.lo}, {"hi", s.hi}};
        }
      },
      d);
}

DistributionSpec dist_from_json(const json& j) {
  const std::string kind = j.value("kind", "uniform");
  DistributionSpec out;
  if (kind == "uniform") {
    out = Uniform{j.value("lo", 0.0), j.value("hi", 1.0)};
  } else if (kind == "truncated_normal") {
    TruncatedNormal t;
    t.mean = j.value("mean", t.mean);
    t.sd = j.value("sd", t.sd);
    t.lo = j.value("lo", t.lo);
    t.hi = j.value("hi", t.hi);
    out = t;
  } else if (kind == "lognormal_mixture") {
    TruncatedLognormalMixture m = default_lognormal_mixture();
    if (j.contains("components")) {
      m.components.clear();
      for (const auto& c : j.at("components"))
        m.components.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    }
    m.lo = j.value("lo", m.lo);
    m.hi = j.value("hi", m.hi);
    out = m;
  } else {
    throw ConfigError("unknown bid distribution '" + kind + "'");
  }
  try {
    validate(out);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bid distribution: ") + e.what());
  }
  return out;
}

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

}  // namespace

SettingSpec DatasetConfig::spec() const {
  SettingSpec s;
  if (setting.size() == 1 && std::string("ABC").find(setting[0]) != std::string::npos) {
    s = fixed_setting(setting[0], bid_dist);
  } else if (setting.rfind("random", 0) == 0 && setting.size() == 7 &&
             setting[6] >= '4' && setting[6] <= '6') {
    s = random_count_setting(static_cast<std::size_t>(setting[6] - '0'));
    s.bid_dist = bid_dist;
  } else {
    throw ConfigError("unknown setting '" + setting + "'");
  }
  s.train_samples = train_samples;
  s.test_samples = test_samples;
  s.seed = seed;
  return s;
}

json DatasetConfig::to_json() const {
  json j{{"setting", setting},
         {"bid_dist", dist_to_json(bid_dist)},
         {"train_samples", train_samples},
         {"test_samples", test_samples},
         {"seed", seed},
         {"test_fraction", test_fraction},
         {"target_slots", target_slots}};
  if (train_path) j["train_path"] = *train_path;
  if (test_path) j["test_path"] = *test_path;
  if (logs_path) j["logs_path"] = *logs_path;
  return j;
}

DatasetConfig DatasetConfig::from_json(const json& j) {
  DatasetConfig c;
  take(j, "setting", c.setting);
  if (j.contains("bid_dist")) c.bid_dist = dist_from_json(j.at("bid_dist"));
  take(j, "train_samples", c.train_samples);
  take(j, "test_samples", c.test_samples);
  take(j, "seed", c.seed);
  take(j, "test_fraction", c.test_fraction);
  take(j, "target_slots", c.target_slots);
  if (j.contains("train_path")) c.train_path = j.at("train_path").get<std::string>();
  if (j.contains("test_path")) c.test_path = j.at("test_path").get<std::string>();
  if (j.contains("logs_path")) c.logs_path = j.at("logs_path").get<std::string>();
  return c;
}

json RegretEvalConfig::to_json() const {
  return json{{"steps", search.steps},
              {"lr", search.lr},
              {"restarts", search.restarts},
              {"samples", samples},
              {"baseline_samples", baseline_samples},
              {"grid_step", grid_step},
              {"audit_samples", audit_samples},
              {"audit_tolerance", audit_tolerance}};
}

RegretEvalConfig RegretEvalConfig::from_json(const json& j) {
  RegretEvalConfig c;
  take(j, "steps", c.search.steps);
  take(j, "lr", c.search.lr);
  take(j, "restarts", c.search.restarts);
  take(j, "samples", c.samples);
  take(j, "baseline_samples", c.baseline_samples);
  take(j, "grid_step", c.grid_step);
  take(j, "audit_samples", c.audit_samples);
  take(j, "audit_tolerance", c.audit_tolerance);
  return c;
}

namespace {

const std::vector<std::string> kKnownMechanisms{
    "jeanet", "vcg", "gsp", "ias", "ablation:etm+dmm", "ablation:mlp+dmm"};

bool is_learned(const std::string& name) {
  return name == "jeanet" || name.rfind("ablation:", 0) == 0;
}

Variant variant_of(const std::string& name) {
  return name == "jeanet" ? Variant::kFull : variant_from_string(name.substr(9));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (mechanisms.empty()) throw ConfigError("mechanism list is empty");
  for (const auto& m : mechanisms)
    if (std::find(kKnownMechanisms.begin(), kKnownMechanisms.end(), m) ==
        kKnownMechanisms.end())
      throw ConfigError("unknown mechanism '" + m + "'");
  if (std::find(mechanisms.begin(), mechanisms.end(), anchor) == mechanisms.end())
    throw ConfigError("anchor '" + anchor + "' is not in the mechanism list");
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (!(regret.grid_step > 0.0)) throw ConfigError("grid_step must be positive");
  if (!dataset.logs_path) dataset.spec().validate();
  if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  regret.search.validate();
  train.validate();
}

json ExperimentConfig::to_json() const {
  json j{{"dataset", dataset.to_json()},
         {"mechanisms", mechanisms},
         {"train", train.to_json()},
         {"gamma", gamma},
         {"anchor", anchor},
         {"seed", seed},
         {"out_dir", out_dir},
         {"regret", regret.to_json()},
         {"round", round}};
  if (checkpoint) j["checkpoint"] = *checkpoint;
  if (cache_dir) j["cache_dir"] = *cache_dir;
  if (gsp) j["gsp"] = {{"positions", gsp->positions}, {"reserve", gsp->reserve}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j.at("dataset"));
    take(j, "mechanisms", c.mechanisms);
    take(j, "gamma", c.gamma);
    if (j.contains("train")) {
      c.train = TrainConfig::from_json(j.at("train"));
    }
    // The training objective follows the experiment's gamma unless set.
    if (!j.contains("train") || !j.at("train").contains("gamma")) c.train.gamma = c.gamma;
    take(j, "anchor", c.anchor);
    take(j, "seed", c.seed);
    take(j, "out_dir", c.out_dir);
    if (j.contains("checkpoint")) c.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("regret")) c.regret = RegretEvalConfig::from_json(j.at("regret"));
    take(j, "round", c.round);
    if (j.contains("gsp")) {
      GspConfig g;
      take(j.at("gsp"), "positions", g.positions);
      take(j.at("gsp"), "reserve", g.reserve);
      c.gsp = g;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::digest() const { return config_digest(to_json()); }

// ---------------------------------------------------------------------------

const MechanismRow& ExperimentReport::row(const std::string& mechanism) const {
  for (const auto& r : rows)
    if (r.mechanism == mechanism) return r;
  throw DomainError("no report row for '" + mechanism + "'");
}

void ExperimentReport::write_csv(std::ostream& out) const {
  out << "mechanism,SW,Rev,UE,Score,SW_norm,Rev_norm,UE_norm,Score_norm,mean_rgt,max_rgt\n";
  auto num = [&](double x) {
    std::ostringstream s;
    s << std::setprecision(6) << std::fixed << x;
    return s.str();
  };
  for (const auto& r : rows) {
    out << r.mechanism << ',' << num(r.raw.sw) << ',' << num(r.raw.rev) << ','
        << num(r.raw.ue) << ',' << num(r.raw.score) << ',' << num(r.sw_norm) << ','
        << num(r.rev_norm) << ',' << num(r.ue_norm) << ',' << num(r.score_norm) << ',';
    if (r.regret)
      out << num(r.regret->mean) << ',' << num(r.regret->max);
    else
      out << ',';
    out << '\n';
  }
}

json ExperimentReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row{{"mechanism", r.mechanism},
             {"raw", {{"SW", r.raw.sw}, {"Rev", r.raw.rev}, {"UE", r.raw.ue}, {"Score", r.raw.score}}},
             {"normalized",
              {{"SW", r.sw_norm}, {"Rev", r.rev_norm}, {"UE", r.ue_norm}, {"Score", r.score_norm}}}};
    if (r.regret)
      row["regret"] = {{"mean", r.regret->mean},
                       {"max", r.regret->max},
                       {"per_advertiser", r.regret->per_advertiser},
                       {"samples", r.regret->samples},
                       {"method", std::string(to_string(r.regret->method))}};
    rows_json.push_back(row);
  }
  json sig = json::array();
  for (const auto& s : significance)
    sig.push_back({{"a", s.a}, {"b", s.b}, {"t", s.test.t}, {"p", s.test.p},
                   {"mean_diff", s.test.mean_diff}, {"n", s.test.n}});
  return json{{"anchor", anchor},   {"gamma", gamma},
              {"rows", rows_json},  {"significance", sig},
              {"config_digest", config_digest}, {"runtime_s", runtime_s},
              {"design_flags", design_flags}};
}

void ExperimentReport::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"));
    write_csv(csv);
  }
  std::ofstream js(dir / (stem + ".json"));
  js << to_json().dump(2) << '\n';
}

void normalize(std::vector<MechanismRow>& rows, const std::string& anchor, double gamma) {
  const MechanismRow* a = nullptr;
  for (const auto& r : rows)
    if (r.mechanism == anchor) a = &r;
  if (!a) throw DomainError("anchor '" + anchor + "' missing from rows");
  const Metrics base = a->raw;
  if (base.sw == 0.0 || base.rev == 0.0 || base.ue == 0.0)
    throw NumericError("anchor '" + anchor + "' has a zero metric; cannot normalise");
  for (auto& r : rows) {
    r.sw_norm = r.raw.sw / base.sw;
    r.rev_norm = r.raw.rev / base.rev;
    r.ue_norm = r.raw.ue / base.ue;
    r.score_norm = r.rev_norm + gamma * r.ue_norm;
  }
}

// ---------------------------------------------------------------------------

Datasets load_datasets(const DatasetConfig& cfg) {
  Datasets d;
  if (cfg.logs_path) {
    IngestOptions opts;
    opts.target_slots = cfg.target_slots;
    auto all = ingest_logs(std::filesystem::path(*cfg.logs_path), opts).data;
    const std::size_t n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.test_fraction * static_cast<double>(all.size())));
    if (all.size() < n_test + 1) throw DomainError("too few usable requests in logs");
    d.train = all;
    d.test = all;
    d.train.instances.assign(all.instances.begin(), all.instances.end() - n_test);
    d.test.instances.assign(all.instances.end() - n_test, all.instances.end());
    return d;
  }
  const SettingSpec spec = cfg.spec();
  d.train = cfg.train_path ? read_jsonl(*cfg.train_path)
                           : generate(spec, cfg.train_samples, cfg.seed);
  // Test draws use their own seed stream.
  d.test = cfg.test_path ? read_jsonl(*cfg.test_path)
                         : generate(spec, cfg.test_samples, cfg.seed + 0x9e3779b9ULL);
  return d;
}

std::unique_ptr<Mechanism> make_baseline(const std::string& name, const ExperimentConfig& cfg,
                                         const Dataset& train) {
  if (name == "vcg") return std::make_unique<VcgMechanism>(cfg.gamma);
  if (name == "gsp") return std::make_unique<GspMechanism>(cfg.gsp);
  if (name == "ias") {
    if (!cfg.dataset.logs_path)
      return std::make_unique<IasMechanism>(cfg.gamma, IasPriors::from_component(cfg.dataset.bid_dist));
    std::vector<double> xs;
    for (const auto& inst : train.instances)
      for (const auto& a : inst.advertisers) {
        if (a.value.store > 0) xs.push_back(a.value.store);
        if (a.value.brand > 0) xs.push_back(a.value.brand);
      }
    if (xs.size() < 2) throw DomainError("too few bids to fit IAS priors");
    const double hi = *std::max_element(xs.begin(), xs.end());
    return std::make_unique<IasMechanism>(
        cfg.gamma, IasPriors::from_component(fit_truncated_lognormal(xs, 0.0, hi)));
  }
  throw ConfigError("unknown baseline '" + name + "'");
}

Checkpoint train_or_load(const TrainConfig& train_cfg, const DatasetConfig& dataset,
                         const Dataset& data, const std::optional<std::string>& cache_dir,
                         std::ostream* log) {
  const json key{{"train", train_cfg.to_json()}, {"dataset", dataset.to_json()}};
  std::filesystem::path path;
  if (cache_dir) {
    path = std::filesystem::path(*cache_dir) / ("ckpt-" + config_digest(key) + ".json");
    if (std::filesystem::exists(path)) return load_checkpoint(path);
  }
  JeaNet net(train_cfg.net, train_cfg.seed);
  TrainResult result = train(net, train_cfg, data, log);
  Checkpoint ckpt = Checkpoint::capture(net, train_cfg, &result);
  if (cache_dir) save_checkpoint(ckpt, path);
  return ckpt;
}

std::vector<Outcome> run_all(const Mechanism& mech, std::span<const AuctionInstance> data) {
  std::vector<Outcome> out(data.size());
  const auto* learned = dynamic_cast<const JeaNetMechanism*>(&mech);
  if (!learned) {
    parallel_for(data.size(), [&](std::size_t s) { out[s] = mech.run(data[s], data[s].truthful_bids()); });
    return out;
  }
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < data.size(); ++s)
    groups[{data[s].num_ads(), data[s].num_organics(), data[s].num_slots()}].push_back(s);
  constexpr std::size_t kBatch = 256;
  for (const auto& [shape, idx] : groups)
    for (std::size_t b0 = 0; b0 < idx.size(); b0 += kBatch) {
      std::vector<AuctionInstance> part;
      for (std::size_t b = b0; b < std::min(idx.size(), b0 + kBatch); ++b) part.push_back(data[idx[b]]);
      auto res = learned->run_batch(part);
      for (std::size_t b = 0; b < res.size(); ++b) out[idx[b0 + b]] = std::move(res[b]);
    }
  return out;
}

json design_flags(const ExperimentConfig& cfg, const Dataset& train) {
  json gsp;
  if (cfg.gsp)
    gsp = {{"positions", cfg.gsp->positions}, {"reserve", cfg.gsp->reserve}};
  else
    gsp = {{"positions", "odd slots 1,3,5,..."}, {"reserve", 0.0}};
  gsp["ranking"] = "total bid (store + brand)";
  gsp["price"] = "max(reserve, next ad's total bid), capped at own bid, per click";
  json ias{{"scalarization", "total bid (store + brand)"},
           {"critical_value", "smallest total bid keeping score >= next-ranked item"}};
  try {
    auto mech = make_baseline("ias", cfg, train);
    const auto& p = dynamic_cast<const IasMechanism&>(*mech).priors();
    ias["priors"] = {{"store", p.store.describe()},
                     {"brand", p.brand.describe()},
                     {"joint", p.joint.describe()}};
    ias["prior_source"] = cfg.dataset.logs_path ? "truncated lognormal MLE on training bids"
                                                : "generating bid law";
  } catch (const std::exception& e) {
    ias["priors"] = std::string("unavailable: ") + e.what();
  }
  return json{{"vcg", {{"ue_included", true},
                       {"objective", "bid value + gamma * ue, organics gamma * ue"},
                       {"payment_split", "proportional to bid components"}}},
              {"gsp", gsp},
              {"ias", ias},
              {"gamma", cfg.gamma},
              {"allocation", cfg.round ? "rounded (max-weight assignment)" : "soft"}};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> per_sample_scores(std::span<const Outcome> outs,
                                      std::span<const AuctionInstance> data, double gamma) {
  std::vector<double> s;
  s.reserve(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i)
    s.push_back(sample_metrics(data[i], outs[i], gamma).score);
  return s;
}

Dataset head(const Dataset& d, std::size_t n) {
  Dataset out = d;
  out.instances.assign(d.instances.begin(),
                       d.instances.begin() + std::min(n, d.instances.size()));
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Datasets data = load_datasets(cfg.dataset);
  if (data.test.empty()) throw DomainError("empty test set");

  ExperimentReport rep;
  rep.anchor = cfg.anchor;
  rep.gamma = cfg.gamma;
  rep.config_digest = cfg.digest();
  rep.design_flags = design_flags(cfg, data.train);

  const Dataset regret_set = head(data.test, cfg.regret.samples);
  const Dataset baseline_regret_set = head(data.test, cfg.regret.baseline_samples);
  for (const auto& name : cfg.mechanisms) {
    MechanismRow row;
    row.mechanism = name;
    std::vector<Outcome> outs;
    if (is_learned(name)) {
      TrainConfig tc = cfg.train;
      tc.gamma = cfg.gamma;
      tc.net.variant = variant_of(name);
      Checkpoint ckpt = (name == "jeanet" && cfg.checkpoint)
                            ? load_checkpoint(*cfg.checkpoint)
                            : train_or_load(tc, cfg.dataset, data.train, cfg.cache_dir, log);
      JeaNet net = ckpt.restore();
      JeaNetMechanism mech(net, cfg.round, name);
      outs = run_all(mech, data.test.instances);
      row.regret = estimate_regret(net, regret_set, cfg.regret.search, cfg.seed);
    } else {
      auto mech = make_baseline(name, cfg, data.train);
      outs = run_all(*mech, data.test.instances);
      row.regret = estimate_regret(*mech, baseline_regret_set, cfg.regret.search, cfg.seed);
    }
    row.raw = metrics(outs, data.test.instances, cfg.gamma);
    row.sample_scores = per_sample_scores(outs, data.test.instances, cfg.gamma);
    rep.rows.push_back(std::move(row));
  }
  normalize(rep.rows, cfg.anchor, cfg.gamma);

  const auto& anchor_row = rep.row(cfg.anchor);
  for (const auto& r : rep.rows)
    if (r.mechanism != cfg.anchor && data.test.size() >= 2)
      rep.significance.push_back(
          {r.mechanism, cfg.anchor, paired_ttest(r.sample_scores, anchor_row.sample_scores)});
  if (std::find(cfg.mechanisms.begin(), cfg.mechanisms.end(), "jeanet") != cfg.mechanisms.end() &&
      cfg.anchor != "jeanet")
    for (const auto& r : rep.rows)
      if (r.mechanism.rfind("ablation:", 0) == 0 && data.test.size() >= 2)
        rep.significance.push_back(
            {"jeanet", r.mechanism, paired_ttest(rep.row("jeanet").sample_scores, r.sample_scores)});

  rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

ExperimentReport ablation(const ExperimentConfig& cfg, Variant variant, std::ostream* log) {
  if (variant == Variant::kFull) throw ConfigError("ablation needs a reduced variant");
  ExperimentConfig c = cfg;
  c.mechanisms = {"jeanet", "ablation:" + std::string(to_string(variant))};
  if (std::find(cfg.mechanisms.begin(), cfg.mechanisms.end(), cfg.anchor) != cfg.mechanisms.end() &&
      !is_learned(cfg.anchor))
    c.mechanisms.push_back(cfg.anchor);
  else
    c.anchor = "jeanet";
  return run_experiment(c, log);
}

json AuditReport::to_json() const {
  auto one = [](const RegretReport& r) {
    return json{{"mean", r.mean}, {"max", r.max}, {"samples", r.samples},
                {"per_advertiser", r.per_advertiser},
                {"method", std::string(to_string(r.method))}};
  };
  return json{{"gradient", one(gradient)}, {"grid", one(grid)}, {"flagged", flagged}};
}

AuditReport regret_audit(const Mechanism& mech, const Dataset& data,
                         const RegretEvalConfig& cfg, std::uint64_t seed) {
  AuditReport a;
  const Dataset subset = head(data, cfg.audit_samples);
  if (const auto* learned = dynamic_cast<const JeaNetMechanism*>(&mech))
    a.gradient = estimate_regret(learned->net(), subset, cfg.search, seed);
  else
    a.gradient = estimate_regret(mech, subset, cfg.search, seed);
  a.grid = grid_regret(mech, subset, cfg.grid_step);
  a.flagged = a.grid.mean > a.gradient.mean + cfg.audit_tolerance;
  return a;
}

}  // namespace jal
