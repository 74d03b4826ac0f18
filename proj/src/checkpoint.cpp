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

#include "jal/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "jal/errors.hpp"

namespace jal {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

Checkpoint Checkpoint::capture(const JeaNet& net, const TrainConfig& cfg,
                               const TrainResult* result) {
  Checkpoint c;
  c.config = cfg;
  c.config.net = net.config();
  c.params = json::object();
  for (const auto& name : net.params().names()) {
    const Array& a = net.params().get(name).value();
    c.params[name] = {{"shape", a.shape()}, {"data", a.to_vector()}};
  }
  c.lambda = net.params().lambda;
  c.rho = net.params().rho;
  if (result) c.log = result->log;
  return c;
}

JeaNet Checkpoint::restore() const {
  JeaNet net(config.net, config.seed);
  auto& store = net.params();
  for (const auto& name : store.names()) {
    if (!params.contains(name)) throw SchemaError("params." + name, "missing");
    const auto& p = params.at(name);
    try {
      store.set(name, Array(p.at("shape").get<diff::Shape>(),
                            p.at("data").get<std::vector<double>>()));
    } catch (const json::exception& e) {
      throw SchemaError("params." + name, e.what());
    } catch (const DimensionError& e) {
      throw SchemaError("params." + name, e.what());
    }
  }
  if (params.size() != store.names().size())
    throw SchemaError("params", "unexpected extra parameters");
  store.lambda = lambda;
  store.rho = rho;
  return net;
}

json Checkpoint::to_json() const {
  json log_json = json::array();
  for (const auto& e : log) log_json.push_back(e.to_json());
  return json{{"format", "jal-checkpoint-1"},
              {"config", config.to_json()},
              {"digest", config_digest(config.to_json())},
              {"lambda", lambda},
              {"rho", rho},
              {"params", params},
              {"log", log_json}};
}

Checkpoint Checkpoint::from_json(const json& j) {
  Checkpoint c;
  for (const char* key : {"format", "config", "params"})
    if (!j.contains(key)) throw SchemaError(key, "missing");
  if (j.at("format") != "jal-checkpoint-1")
    throw SchemaError("format", "unsupported checkpoint format");
  c.config = TrainConfig::from_json(j.at("config"));
  c.params = j.at("params");
  try {
    if (j.contains("lambda")) j.at("lambda").get_to(c.lambda);
    if (j.contains("rho")) j.at("rho").get_to(c.rho);
    if (j.contains("log"))
      for (const auto& e : j.at("log")) {
        TrainLogEntry t;
        e.at("iter").get_to(t.iter);
        e.at("rev").get_to(t.rev);
        e.at("ue").get_to(t.ue);
        e.at("score").get_to(t.score);
        e.at("mean_rgt").get_to(t.mean_rgt);
        e.at("max_rgt").get_to(t.max_rgt);
        e.at("lambda_mean").get_to(t.lambda_mean);
        e.at("rho").get_to(t.rho);
        e.at("wall_ms").get_to(t.wall_ms);
        c.log.push_back(t);
      }
  } catch (const json::exception& e) {
    throw SchemaError("log", e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << ckpt.to_json().dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.what());
  }
  return Checkpoint::from_json(j);
}

}  // namespace jal
