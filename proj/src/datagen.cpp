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

#include "jal/datagen.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jal/errors.hpp"

namespace jal {

using nlohmann::json;

void SettingSpec::validate() const {
  jal::validate(bid_dist);
  jal::validate(ue_ad_dist);
  jal::validate(ue_na_dist);
  if (support_lo(bid_dist) < 0.0)
    throw ConfigError("bid distribution must be non-negative");
  if (mode == Mode::kRandomCount) {
    if (min_ads < 3) throw ConfigError("random-count setting needs min_ads >= 3");
    if (max_ads < min_ads) throw ConfigError("max_ads < min_ads");
    if (total_items < max_ads)
      throw ConfigError("total_items smaller than max_ads");
    if (total_items < slots.size())
      throw ConfigError("total_items cannot fill the slots");
  } else {
    if (num_ads + num_organics < slots.size())
      throw ConfigError("fixed setting cannot fill the slots");
  }
}

SlotProfile random_count_slots(std::size_t k) {
  static const std::vector<double> kCtrs = {0.7, 0.6, 0.5, 0.4, 0.3, 0.2};
  if (k < 4 || k > 6)
    throw ConfigError("random-count setting defines K in {4,5,6}, got " +
                      std::to_string(k));
  return SlotProfile(std::vector<double>(kCtrs.begin(), kCtrs.begin() + k));
}

SettingSpec random_count_setting(std::size_t k) {
  SettingSpec spec;
  spec.mode = SettingSpec::Mode::kRandomCount;
  spec.slots = random_count_slots(k);
  return spec;
}

SettingSpec fixed_setting(char setting, DistributionSpec bid_dist) {
  SettingSpec spec;
  spec.mode = SettingSpec::Mode::kFixed;
  switch (setting) {
    case 'A': spec.num_ads = 4; spec.num_organics = 6; break;
    case 'B': spec.num_ads = 5; spec.num_organics = 5; break;
    case 'C': spec.num_ads = 6; spec.num_organics = 4; break;
    default:
      throw ConfigError(std::string("unknown fixed setting '") + setting + "'");
  }
  spec.slots = SlotProfile({0.5, 0.3, 0.2});
  spec.bid_dist = std::move(bid_dist);
  return spec;
}

namespace {

std::vector<double> make_context(const ContextConfig& cfg, std::size_t type_slot,
                                 Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> ctx(cfg.dim(), 0.0);
  for (std::size_t d = 0; d < cfg.continuous_dims; ++d) ctx[d] = u(rng);
  ctx[cfg.continuous_dims + type_slot] = 1.0;
  return ctx;
}

std::size_t type_slot(AdvertiserType t) {
  switch (t) {
    case AdvertiserType::kStore: return 0;
    case AdvertiserType::kBrand: return 1;
    case AdvertiserType::kJoint: return 2;
  }
  return 0;
}

Advertiser make_advertiser(const SettingSpec& spec, AdvertiserType kind,
                           Rng& rng) {
  Advertiser a;
  a.kind = kind;
  if (kind != AdvertiserType::kBrand) a.value.store = sample_value(spec.bid_dist, rng);
  if (kind != AdvertiserType::kStore) a.value.brand = sample_value(spec.bid_dist, rng);
  a.ue = sample_value(spec.ue_ad_dist, rng);
  a.context = make_context(spec.context, type_slot(kind), rng);
  return a;
}

}  // namespace

AuctionInstance generate_one(const SettingSpec& spec, std::uint64_t seed,
                             std::uint64_t index) {
  Rng rng = stream_for(seed, index);
  AuctionInstance inst;
  inst.slots = spec.slots;

  std::vector<AdvertiserType> kinds;
  std::size_t num_organics = spec.num_organics;
  if (spec.mode == SettingSpec::Mode::kRandomCount) {
    std::uniform_int_distribution<std::size_t> count(spec.min_ads, spec.max_ads);
    const std::size_t num_ads = count(rng);
    // Two distinct cut points in [1, num_ads - 1] give a uniform composition
    // into three positive parts.
    std::uniform_int_distribution<std::size_t> cut(1, num_ads - 1);
    std::size_t c1 = cut(rng), c2 = cut(rng);
    while (c2 == c1) c2 = cut(rng);
    if (c1 > c2) std::swap(c1, c2);
    kinds.insert(kinds.end(), c1, AdvertiserType::kStore);
    kinds.insert(kinds.end(), c2 - c1, AdvertiserType::kBrand);
    kinds.insert(kinds.end(), num_ads - c2, AdvertiserType::kJoint);
    std::shuffle(kinds.begin(), kinds.end(), rng);
    num_organics = spec.total_items - num_ads;
  } else {
    std::uniform_int_distribution<int> pick(0, 2);
    for (std::size_t i = 0; i < spec.num_ads; ++i)
      kinds.push_back(static_cast<AdvertiserType>(pick(rng)));
  }

  for (auto kind : kinds) inst.advertisers.push_back(make_advertiser(spec, kind, rng));
  for (std::size_t j = 0; j < num_organics; ++j) {
    OrganicItem o;
    o.ue = sample_value(spec.ue_na_dist, rng);
    o.context = make_context(spec.context, 3, rng);
    inst.organics.push_back(std::move(o));
  }
  return inst;
}

Dataset generate(const SettingSpec& spec, std::size_t count,
                 std::uint64_t seed) {
  spec.validate();
  Dataset data;
  data.context_dim = spec.context.dim();
  data.value_lo = support_lo(spec.bid_dist);
  data.value_hi = support_hi(spec.bid_dist);
  data.instances.reserve(count);
  for (std::size_t s = 0; s < count; ++s)
    data.instances.push_back(generate_one(spec, seed, s));
  return data;
}

Dataset gen_random_count(const SettingSpec& spec, std::size_t count,
                         std::uint64_t seed) {
  if (spec.mode != SettingSpec::Mode::kRandomCount)
    throw ConfigError("gen_random_count needs a random-count setting");
  return generate(spec, count, seed);
}

Dataset gen_fixed(char setting, const DistributionSpec& bid_dist,
                  std::size_t count, std::uint64_t seed) {
  return generate(fixed_setting(setting, bid_dist), count, seed);
}

// ---- serialization --------------------------------------------------------

std::string instance_to_json(const AuctionInstance& inst) {
  json j;
  j["slots"] = inst.slots.ctrs();
  json ads = json::array();
  for (const auto& a : inst.advertisers)
    ads.push_back({{"type", std::string(to_string(a.kind))},
                   {"value", {a.value.store, a.value.brand}},
                   {"ue", a.ue},
                   {"ctx", a.context}});
  j["ads"] = std::move(ads);
  json organics = json::array();
  for (const auto& o : inst.organics)
    organics.push_back({{"ue", o.ue}, {"ctx", o.context}});
  j["organics"] = std::move(organics);
  return j.dump();
}

namespace {

const json& require(const json& obj, const char* field, const std::string& where) {
  if (!obj.is_object() || !obj.contains(field))
    throw SchemaError(field, "required in " + where);
  return obj.at(field);
}

double require_number(const json& obj, const char* field,
                      const std::string& where) {
  const json& v = require(obj, field, where);
  if (!v.is_number()) throw SchemaError(field, "must be a number in " + where);
  return v.get<double>();
}

std::vector<double> require_numbers(const json& obj, const char* field,
                                    const std::string& where) {
  const json& v = require(obj, field, where);
  if (!v.is_array()) throw SchemaError(field, "must be an array in " + where);
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw SchemaError(field, "must hold numbers in " + where);
    out.push_back(x.get<double>());
  }
  return out;
}

AuctionInstance instance_from_value(const json& j, std::size_t line_no,
                                    bool need_slots) {
  const std::string where = "line " + std::to_string(line_no);
  AuctionInstance inst;
  if (need_slots || j.contains("slots")) {
    try {
      inst.slots = SlotProfile(require_numbers(j, "slots", where));
    } catch (const DomainError& e) {
      throw SchemaError("slots", e.what());
    }
  }
  const json& ads = require(j, "ads", where);
  if (!ads.is_array()) throw SchemaError("ads", "must be an array in " + where);
  for (std::size_t i = 0; i < ads.size(); ++i) {
    const std::string at = where + " ads[" + std::to_string(i) + "]";
    const json& a = ads[i];
    Advertiser adv;
    const json& type = require(a, "type", at);
    if (!type.is_string()) throw SchemaError("type", "must be a string in " + at);
    try {
      adv.kind = advertiser_type_from_string(type.get<std::string>());
    } catch (const DomainError& e) {
      throw SchemaError("type", e.what());
    }
    auto value = require_numbers(a, "value", at);
    if (value.size() != 2) throw SchemaError("value", "must hold 2 numbers in " + at);
    adv.value = {value[0], value[1]};
    if (!matches_type(adv.kind, adv.value))
      throw SchemaError("value", "does not match advertiser type in " + at);
    adv.ue = require_number(a, "ue", at);
    adv.context = require_numbers(a, "ctx", at);
    inst.advertisers.push_back(std::move(adv));
  }
  const json& organics = require(j, "organics", where);
  if (!organics.is_array())
    throw SchemaError("organics", "must be an array in " + where);
  for (std::size_t i = 0; i < organics.size(); ++i) {
    const std::string at = where + " organics[" + std::to_string(i) + "]";
    OrganicItem o;
    o.ue = require_number(organics[i], "ue", at);
    o.context = require_numbers(organics[i], "ctx", at);
    inst.organics.push_back(std::move(o));
  }
  return inst;
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
}

}  // namespace

AuctionInstance instance_from_json(const std::string& line,
                                   std::size_t line_no) {
  return instance_from_value(parse_line(line, line_no), line_no, true);
}

void write_jsonl(const Dataset& data, std::ostream& out) {
  for (const auto& inst : data.instances) out << instance_to_json(inst) << '\n';
}

void write_jsonl(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_jsonl(data, out);
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  double hi = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    data.instances.push_back(instance_from_json(line, line_no));
    for (const auto& a : data.instances.back().advertisers)
      hi = std::max({hi, a.value.store, a.value.brand});
  }
  if (!data.instances.empty()) {
    const auto& first = data.instances.front();
    data.context_dim = !first.advertisers.empty()
                           ? first.advertisers.front().context.size()
                           : first.organics.front().context.size();
  }
  // Synthetic supports are [0,1]; wider data declares its own bound.
  data.value_hi = std::max(1.0, hi);
  return data;
}

IngestResult ingest_logs(std::istream& in, const IngestOptions& opts) {
  if (opts.target_slots == 0) throw ConfigError("target_slots must be >= 1");
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  double hi = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = parse_line(line, line_no);
    require(j, "request_id", "line " + std::to_string(line_no));
    AuctionInstance inst =
        instance_from_value(j, line_no, !opts.ctr_override.has_value());

    if (opts.ctr_override) {
      if (opts.ctr_override->size() < opts.target_slots)
        throw ConfigError("ctr override has fewer than target_slots entries");
      const auto& c = opts.ctr_override->ctrs();
      inst.slots = SlotProfile({c.begin(), c.begin() + opts.target_slots});
    } else if (inst.slots.size() < opts.target_slots) {
      ++result.dropped;
      result.warnings.push_back("line " + std::to_string(line_no) +
                                ": only " + std::to_string(inst.slots.size()) +
                                " slot ctrs, dropped");
      continue;
    } else {
      const auto& c = inst.slots.ctrs();
      inst.slots = SlotProfile({c.begin(), c.begin() + opts.target_slots});
    }

    std::stable_sort(inst.advertisers.begin(), inst.advertisers.end(),
                     [](const Advertiser& a, const Advertiser& b) {
                       return a.value.total() > b.value.total();
                     });
    if (inst.advertisers.size() > opts.max_ads)
      inst.advertisers.resize(opts.max_ads);
    std::stable_sort(inst.organics.begin(), inst.organics.end(),
                     [](const OrganicItem& a, const OrganicItem& b) {
                       return a.ue > b.ue;
                     });
    if (inst.organics.size() > opts.max_organics)
      inst.organics.resize(opts.max_organics);

    if (inst.num_items() < opts.target_slots) {
      ++result.dropped;
      result.warnings.push_back("line " + std::to_string(line_no) + ": " +
                                std::to_string(inst.num_items()) +
                                " candidates for " +
                                std::to_string(opts.target_slots) +
                                " slots, dropped");
      continue;
    }
    for (const auto& a : inst.advertisers)
      hi = std::max({hi, a.value.store, a.value.brand});
    result.data.instances.push_back(std::move(inst));
  }
  if (!result.data.empty()) {
    const auto& first = result.data.instances.front();
    result.data.context_dim = !first.advertisers.empty()
                                  ? first.advertisers.front().context.size()
                                  : first.organics.front().context.size();
  }
  result.data.value_hi = std::max(1.0, hi);
  return result;
}

IngestResult ingest_logs(const std::filesystem::path& path,
                         const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return ingest_logs(in, opts);
}

}  // namespace jal
