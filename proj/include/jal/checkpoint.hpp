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

#ifndef JAL_CHECKPOINT_HPP_
#define JAL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "jal/net.hpp"
#include "jal/training.hpp"

namespace jal {

// 64-bit FNV-1a over the canonical (sorted-key, compact) JSON dump.
std::uint64_t fnv1a64(std::string_view bytes);
std::string config_digest(const nlohmann::json& config);

struct Checkpoint {
  TrainConfig config;
  nlohmann::json params;  // name -> {"shape": [...], "data": [...]}
  std::vector<double> lambda;
  double rho = 1.0;
  std::vector<TrainLogEntry> log;

  static Checkpoint capture(const JeaNet& net, const TrainConfig& cfg,
                            const TrainResult* result = nullptr);
  // Builds a network with the stored config and copies every parameter in.
  JeaNet restore() const;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace jal

#endif  // JAL_CHECKPOINT_HPP_
