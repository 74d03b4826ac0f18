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

// JEANet: adaptive extraction, externality transformer and the deep
// mechanism heads, batched over instances of a common shape.

#ifndef JAL_NET_HPP_
#define JAL_NET_HPP_

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

#include "jal/aem.hpp"
#include "jal/auction.hpp"
#include "jal/layers.hpp"

namespace jal {

enum class Variant { kFull, kEtmDmm, kMlpDmm };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct JeaNetConfig {
  Variant variant = Variant::kFull;
  std::size_t codebook_size = 128;  // U
  std::size_t rq_depth = 2;         // D
  bool shared_codebook = true;
  std::size_t ctx_embed = 16;   // d_c'
  std::size_t ue_embed = 8;     // d_z'
  std::size_t model_dim = 64;   // d'
  std::size_t hidden_dim = 32;  // d_h
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::vector<std::size_t> mlp_widths{64, 32, 16};
  std::size_t context_dim = 12;

  void validate() const;
  nlohmann::json to_json() const;
  static JeaNetConfig from_json(const nlohmann::json& j);
};

// Dense tensors for B instances sharing (m, n, K).
struct NetBatch {
  std::size_t B = 0, N = 0, m = 0, K = 0;
  Array alpha;     // (B, K)
  Array ue;        // (B, N)
  Array context;   // (B, N, C)
  Array values;    // (B, m, 2)
  Array truthful;  // (B, N, 2), organic rows zero

  // Throws DimensionError if the instances differ in shape.
  static NetBatch from(std::span<const AuctionInstance> instances);
  // Instance b repeated `times` times back to back.
  NetBatch repeat_each(std::size_t times) const;
  // Bid tensor (B, N, 2) from per-instance advertiser bids.
  Array bids_from(std::span<const std::vector<BidPair>> bids) const;
};

struct NetOutput {
  Var e;         // (B, N, K, 2)
  Var heads;     // (B, N, K, 5)
  Var a_hat;     // (B, N, K)
  Var alloc;     // a^w, (B, N, K)
  Var ctr;       // (B, N) expected click rate sum_k a^w alpha_k
  Var payments;  // (B, m, 2)
};

// Building blocks, exposed for testing.
Var bid_features(const Var& bids, const Array& alpha);
struct SoftAllocation {
  Var a_hat, alloc;
};
SoftAllocation allocation_head(const Var& o_r, const Var& o_c, const Var& o_a);
// Payment pairs for the first m rows.
Var payment_head(const Var& o_p, const Var& alloc, const Var& e, std::size_t m);

class JeaNet {
 public:
  JeaNet(JeaNetConfig cfg, std::uint64_t seed);

  const JeaNetConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // Codebooks as stored under "aem.codebook.*".
  std::vector<Codebook> codebooks() const;
  void set_codebooks(const std::vector<Codebook>& books);

  // Parameters trained by the auction objective (everything except the
  // codebooks and the reconstruction decoder).
  std::vector<std::string> mechanism_parameters() const;
  std::vector<std::string> decoder_parameters() const;

  NetOutput forward(const NetBatch& batch, const Var& bids) const;
  NetOutput forward(const NetBatch& batch) const;

  // Decoder G applied to a quantised bid block.
  Var decode(const Var& e_hat) const;
  // Number of scalars in attention layers (q, k, v, o).
  std::size_t attention_parameter_count() const;

 private:
  JeaNetConfig cfg_;
  nn::ParameterStore params_;
  nn::Mlp ue_embed_, ctx_embed_, reduce_, decoder_;
  nn::Encoder row_enc_, col_enc_;
  nn::Mlp cell_mlp_;  // kMlpDmm only
  nn::Mlp out_head_;
};

// Adapts a trained network to the Mechanism interface (one instance per
// call). With `round` set, hard_alloc carries the matching-based rounding of
// the soft allocation.
class JeaNetMechanism : public Mechanism {
 public:
  JeaNetMechanism(const JeaNet& net, bool round = false, std::string name = "jeanet")
      : net_(net), round_(round), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  const JeaNet& net() const { return net_; }
  Outcome run(const AuctionInstance& inst,
              std::span<const BidPair> bids) const override;
  // Batched evaluation at the given bids (truthful when empty).
  std::vector<Outcome> run_batch(std::span<const AuctionInstance> instances) const;

 private:
  const JeaNet& net_;
  bool round_;
  std::string name_;
};

}  // namespace jal

#endif  // JAL_NET_HPP_
