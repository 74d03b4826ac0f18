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

#ifndef JAL_DATAGEN_HPP_
#define JAL_DATAGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jal/auction.hpp"
#include "jal/distributions.hpp"

namespace jal {

// Continuous context dims plus a one-hot of {store, brand, joint, organic}.
inline constexpr std::size_t kTypeFeatures = 4;

struct ContextConfig {
  std::size_t continuous_dims = 8;
  std::size_t dim() const { return continuous_dims + kTypeFeatures; }
};

struct Dataset {
  std::vector<AuctionInstance> instances;
  std::size_t context_dim = ContextConfig{}.dim();
  double value_lo = 0.0;
  double value_hi = 1.0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

struct SettingSpec {
  enum class Mode { kRandomCount, kFixed };
  Mode mode = Mode::kFixed;

  // kFixed: exact counts, advertiser types drawn uniformly per ad.
  std::size_t num_ads = 4;
  std::size_t num_organics = 6;

  // kRandomCount: num_ad ~ U{min_ads..max_ads}, split into store/brand/joint
  // parts each >= 1, num_na = total_items - num_ad.
  std::size_t min_ads = 3;
  std::size_t max_ads = 10;
  std::size_t total_items = 20;

  SlotProfile slots = SlotProfile({0.5, 0.3, 0.2});
  DistributionSpec bid_dist = Uniform{0.0, 1.0};
  DistributionSpec ue_ad_dist = Uniform{0.0, 0.5};
  DistributionSpec ue_na_dist = Uniform{0.5, 1.0};
  ContextConfig context;

  std::size_t train_samples = 100000;
  std::size_t test_samples = 10000;
  std::uint64_t seed = 1;

  void validate() const;
};

// CTRs of the random-count setting for K in {4, 5, 6}.
SlotProfile random_count_slots(std::size_t k);

// Setting with K slots and a random ad/organic split.
SettingSpec random_count_setting(std::size_t k);
// Fixed settings 'A' (4/6/3), 'B' (5/5/3), 'C' (6/4/3).
SettingSpec fixed_setting(char setting, DistributionSpec bid_dist = Uniform{});

// `count` samples; sample s draws from stream_for(seed, s).
Dataset generate(const SettingSpec& spec, std::size_t count,
                 std::uint64_t seed);
Dataset gen_random_count(const SettingSpec& spec, std::size_t count,
                         std::uint64_t seed);
Dataset gen_fixed(char setting, const DistributionSpec& bid_dist,
                  std::size_t count, std::uint64_t seed);

// One sample; exposed so callers can parallelise over indices.
AuctionInstance generate_one(const SettingSpec& spec, std::uint64_t seed,
                             std::uint64_t index);

// JSON lines: {"slots":[...],"ads":[{"type","value","ue","ctx"}],
//              "organics":[{"ue","ctx"}]}
std::string instance_to_json(const AuctionInstance& inst);
AuctionInstance instance_from_json(const std::string& line,
                                   std::size_t line_no);
void write_jsonl(const Dataset& data, std::ostream& out);
void write_jsonl(const Dataset& data, const std::filesystem::path& path);
Dataset read_jsonl(const std::filesystem::path& path);

struct IngestOptions {
  std::size_t target_slots = 4;
  std::size_t max_ads = 10;
  std::size_t max_organics = 10;
  // Used instead of the record's own "slots" when set.
  std::optional<SlotProfile> ctr_override;
};

struct IngestResult {
  Dataset data;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

// Industrial request logs: dataset lines plus "request_id" and optional
// "timestamp". Candidates are truncated to the top max_ads by total bid and
// top max_organics by ue; requests that cannot fill the slots are dropped.
IngestResult ingest_logs(std::istream& in, const IngestOptions& opts);
IngestResult ingest_logs(const std::filesystem::path& path,
                         const IngestOptions& opts);

}  // namespace jal

#endif  // JAL_DATAGEN_HPP_
