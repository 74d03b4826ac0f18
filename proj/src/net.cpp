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

#include "jal/net.hpp"

#include "jal/errors.hpp"
#include "jal/matching.hpp"

namespace jal {

using nlohmann::json;
namespace d = diff;
using diff::Shape;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kEtmDmm: return "etm+dmm";
    case Variant::kMlpDmm: return "mlp+dmm";
  }
  return "full";
}

Variant variant_from_string(std::string_view s) {
  if (s == "full") return Variant::kFull;
  if (s == "etm+dmm") return Variant::kEtmDmm;
  if (s == "mlp+dmm") return Variant::kMlpDmm;
  throw ConfigError("unknown network variant '" + std::string(s) + "'");
}

void JeaNetConfig::validate() const {
  if (codebook_size < 2) throw ConfigError("codebook_size must be at least 2");
  if (rq_depth < 1) throw ConfigError("rq_depth must be at least 1");
  if (model_dim < 4) throw ConfigError("model_dim must be at least 4");
  if (ctx_embed == 0 || ue_embed == 0 || hidden_dim == 0 || encoder_layers == 0)
    throw ConfigError("embedding widths and encoder depth must be positive");
  if (heads == 0 || hidden_dim % heads != 0)
    throw ConfigError("hidden_dim must be divisible by heads");
  if (mlp_widths.empty()) throw ConfigError("mlp_widths must not be empty");
  if (context_dim == 0) throw ConfigError("context_dim must be positive");
}

json JeaNetConfig::to_json() const {
  return json{{"variant", std::string(to_string(variant))},
              {"codebook_size", codebook_size},
              {"rq_depth", rq_depth},
              {"shared_codebook", shared_codebook},
              {"ctx_embed", ctx_embed},
              {"ue_embed", ue_embed},
              {"model_dim", model_dim},
              {"hidden_dim", hidden_dim},
              {"heads", heads},
              {"encoder_layers", encoder_layers},
              {"mlp_widths", mlp_widths},
              {"context_dim", context_dim}};
}

JeaNetConfig JeaNetConfig::from_json(const json& j) {
  JeaNetConfig c;
  try {
    if (j.contains("variant"))
      c.variant = variant_from_string(j.at("variant").get<std::string>());
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    take("codebook_size", c.codebook_size);
    take("rq_depth", c.rq_depth);
    take("shared_codebook", c.shared_codebook);
    take("ctx_embed", c.ctx_embed);
    take("ue_embed", c.ue_embed);
    take("model_dim", c.model_dim);
    take("hidden_dim", c.hidden_dim);
    take("heads", c.heads);
    take("encoder_layers", c.encoder_layers);
    take("mlp_widths", c.mlp_widths);
    take("context_dim", c.context_dim);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

NetBatch NetBatch::from(std::span<const AuctionInstance> instances) {
  if (instances.empty()) throw DomainError("empty batch");
  const auto& first = instances.front();
  NetBatch b;
  b.B = instances.size();
  b.m = first.num_ads();
  b.N = first.num_items();
  b.K = first.num_slots();
  std::size_t C = 0;
  if (b.N > 0)
    C = b.m > 0 ? first.advertisers[0].context.size() : first.organics[0].context.size();
  b.alpha = Array({b.B, b.K});
  b.ue = Array({b.B, b.N});
  b.context = Array({b.B, b.N, C});
  b.values = Array({b.B, b.m, 2});
  b.truthful = Array({b.B, b.N, 2}, 0.0);
  for (std::size_t s = 0; s < b.B; ++s) {
    const auto& inst = instances[s];
    if (inst.num_ads() != b.m || inst.num_items() != b.N || inst.num_slots() != b.K)
      throw DimensionError("batch instances differ in (m, n, K)");
    for (std::size_t k = 0; k < b.K; ++k) b.alpha[s * b.K + k] = inst.slots[k];
    for (std::size_t i = 0; i < b.N; ++i) {
      b.ue[s * b.N + i] = inst.item_ue(i);
      const auto& ctx = i < b.m ? inst.advertisers[i].context
                                : inst.organics[i - b.m].context;
      if (ctx.size() != C) throw DimensionError("context widths differ");
      std::copy(ctx.begin(), ctx.end(), b.context.data() + (s * b.N + i) * C);
      if (i < b.m) {
        const BidPair v = inst.advertisers[i].value;
        b.values[(s * b.m + i) * 2] = v.store;
        b.values[(s * b.m + i) * 2 + 1] = v.brand;
        b.truthful[(s * b.N + i) * 2] = v.store;
        b.truthful[(s * b.N + i) * 2 + 1] = v.brand;
      }
    }
  }
  return b;
}

namespace {

Array repeat_rows(const Array& a, std::size_t times) {
  Shape shape = a.shape();
  const std::size_t rows = shape[0], per = rows ? a.size() / rows : 0;
  shape[0] *= times;
  Array out(shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < times; ++t)
      std::copy(a.data() + r * per, a.data() + (r + 1) * per,
                out.data() + (r * times + t) * per);
  return out;
}

}  // namespace

NetBatch NetBatch::repeat_each(std::size_t times) const {
  NetBatch r = *this;
  r.B = B * times;
  r.alpha = repeat_rows(alpha, times);
  r.ue = repeat_rows(ue, times);
  r.context = repeat_rows(context, times);
  r.values = repeat_rows(values, times);
  r.truthful = repeat_rows(truthful, times);
  return r;
}

Array NetBatch::bids_from(std::span<const std::vector<BidPair>> bids) const {
  if (bids.size() != B) throw DimensionError("one bid vector per instance");
  Array out({B, N, 2}, 0.0);
  for (std::size_t s = 0; s < B; ++s) {
    if (bids[s].size() != m) throw DimensionError("one bid per advertiser");
    for (std::size_t i = 0; i < m; ++i) {
      out[(s * N + i) * 2] = bids[s][i].store;
      out[(s * N + i) * 2 + 1] = bids[s][i].brand;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Var bid_features(const Var& bids, const Array& alpha) {
  const std::size_t B = bids.dim(0), N = bids.dim(1), K = alpha.dim(1);
  Var a = d::constant(alpha.reshaped({B, 1, K, 1}));
  return d::reshape(bids, {B, N, 1, 2}) * a;
}

SoftAllocation allocation_head(const Var& o_r, const Var& o_c, const Var& o_a) {
  if (o_r.shape() != o_c.shape() || o_r.shape() != o_a.shape())
    throw DimensionError("allocation heads differ in shape");
  const int slot_axis = -1, item_axis = -2;
  Var r = d::softmax(o_r, slot_axis);
  Var c = d::softmax(o_c, item_axis);
  SoftAllocation s;
  s.a_hat = d::minimum(r, c);
  s.alloc = s.a_hat * d::sigmoid(o_a);
  return s;
}

Var payment_head(const Var& o_p, const Var& alloc, const Var& e, std::size_t m) {
  // o_p, e: (B, N, K, 2); alloc: (B, N, K).
  const std::size_t B = alloc.dim(0), K = alloc.dim(2);
  // The factor keeps the payment rate below one after rounding, so truthful
  // utility stays non-negative even when the sigmoid saturates.
  Var p_tilde = d::scale(d::sigmoid(d::mean(d::slice(o_p, 1, 0, m), {2})), 1.0 - 1e-9);
  Var a = d::reshape(d::slice(alloc, 1, 0, m), {B, m, K, 1});
  Var charged = d::sum(a * d::slice(e, 1, 0, m), {2});  // (B, m, 2)
  return p_tilde * charged;
}

JeaNet::JeaNet(JeaNetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng = stream_for(seed, 0x4a45);
  const std::size_t dz = cfg_.ue_embed, dc = cfg_.ctx_embed;
  const std::size_t dm = cfg_.model_dim, dh = cfg_.hidden_dim;

  const std::size_t books = cfg_.shared_codebook ? 1 : cfg_.rq_depth;
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (std::size_t b = 0; b < books; ++b) {
    Array codes({cfg_.codebook_size, 2});
    for (double& x : codes.values()) x = u(rng);
    codes[0] = codes[1] = 0.0;
    params_.add("aem.codebook." + std::to_string(b), std::move(codes));
  }
  decoder_ = nn::Mlp::create(params_, "aem.decoder", 2, {16, 2}, rng);
  ue_embed_ = nn::Mlp::create(params_, "aem.emb", 1, {dz, dz}, rng);
  ctx_embed_ = nn::Mlp::create(params_, "aem.ctx", cfg_.context_dim, {dc, dc}, rng);
  reduce_ = nn::Mlp::create(params_, "aem.reduce", 2 + dz + dc, {dm, dm - 3}, rng);

  if (cfg_.variant == Variant::kMlpDmm) {
    std::vector<std::size_t> widths = cfg_.mlp_widths;
    widths.push_back(5);
    cell_mlp_ = nn::Mlp::create(params_, "etm.mlp", dm, widths, rng);
  } else {
    row_enc_ = nn::Encoder::create(params_, "etm.row", dm, dh, cfg_.encoder_layers,
                                   cfg_.heads, rng);
    col_enc_ = nn::Encoder::create(params_, "etm.col", dm, dh, cfg_.encoder_layers,
                                   cfg_.heads, rng);
    out_head_ = nn::Mlp::create(params_, "etm.out", 2 * dh + dm, {dh, 5}, rng);
  }
}

std::vector<Codebook> JeaNet::codebooks() const {
  std::vector<Codebook> out;
  for (const auto& name : params_.names_with_prefix("aem.codebook."))
    out.emplace_back(params_.get(name).value());
  return out;
}

void JeaNet::set_codebooks(const std::vector<Codebook>& books) {
  const auto names = params_.names_with_prefix("aem.codebook.");
  if (books.size() != names.size()) throw DimensionError("codebook count mismatch");
  for (std::size_t b = 0; b < books.size(); ++b) params_.set(names[b], books[b].codes);
}

std::vector<std::string> JeaNet::mechanism_parameters() const {
  std::vector<std::string> out;
  for (const auto& n : params_.names())
    if (n.rfind("aem.codebook.", 0) != 0 && n.rfind("aem.decoder.", 0) != 0)
      out.push_back(n);
  return out;
}

std::vector<std::string> JeaNet::decoder_parameters() const {
  return params_.names_with_prefix("aem.decoder.");
}

Var JeaNet::decode(const Var& e_hat) const { return decoder_(params_, e_hat); }

std::size_t JeaNet::attention_parameter_count() const {
  std::size_t total = 0;
  for (const auto& n : params_.names())
    for (const char* tag : {".q.", ".k.", ".v.", ".o."})
      if (n.find(tag) != std::string::npos) total += params_.get(n).value().size();
  return total;
}

NetOutput JeaNet::forward(const NetBatch& batch) const {
  return forward(batch, d::constant(batch.truthful));
}

NetOutput JeaNet::forward(const NetBatch& batch, const Var& bids) const {
  const std::size_t B = batch.B, N = batch.N, K = batch.K, m = batch.m;
  if (bids.shape() != Shape{B, N, 2})
    throw DimensionError("bids must be (B, N, 2), got " + d::shape_str(bids.shape()));
  const std::size_t dm = cfg_.model_dim, dh = cfg_.hidden_dim;
  const Array alpha4 = batch.alpha.reshaped({B, 1, K, 1});

  NetOutput out;
  out.e = bid_features(bids, batch.alpha);

  Var ue_alpha = d::constant(batch.ue.reshaped({B, N, 1, 1})) * d::constant(alpha4);
  Var z = ue_embed_(params_, d::constant(batch.ue.reshaped({B, N, 1})));
  z = d::reshape(z, {B, N, 1, cfg_.ue_embed}) * d::constant(alpha4);
  Var t = ctx_embed_(params_, d::constant(batch.context));
  t = d::broadcast_to(d::reshape(t, {B, N, 1, cfg_.ctx_embed}),
                      {B, N, K, cfg_.ctx_embed});

  Var e_hat = out.e;
  if (cfg_.variant == Variant::kFull) {
    auto sums = rq_quantize_cells(out.e.value(), codebooks(), cfg_.rq_depth);
    e_hat = d::straight_through(d::constant(std::move(sums.back())), out.e);
  }
  Var T = assemble_T(params_, reduce_, e_hat, z, t, out.e, ue_alpha);

  if (cfg_.variant == Variant::kMlpDmm) {
    out.heads = cell_mlp_(params_, T);
  } else {
    Var row = row_enc_(params_, d::reshape(T, {B * N, K, dm}));
    row = d::reshape(row, {B, N, K, dh});
    Var col = d::reshape(d::permute(T, {0, 2, 1, 3}), {B * K, N, dm});
    col = d::permute(d::reshape(col_enc_(params_, col), {B, K, N, dh}), {0, 2, 1, 3});
    Var global = d::broadcast_to(d::mean(T, {1, 2}, true), {B, N, K, dm});
    out.heads = out_head_(params_, d::concat({row, col, global}, -1));
  }

  auto head = [&](std::size_t c) {
    return d::reshape(d::slice(out.heads, 3, c, c + 1), {B, N, K});
  };
  SoftAllocation s = allocation_head(head(0), head(1), head(2));
  out.a_hat = s.a_hat;
  out.alloc = s.alloc;
  out.ctr = d::sum(out.alloc * d::constant(batch.alpha.reshaped({B, 1, K})), {2});
  out.payments = payment_head(d::slice(out.heads, 3, 3, 5), out.alloc, out.e, m);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Outcome to_outcome(const NetOutput& o, std::size_t s, std::size_t N,
                   std::size_t K, std::size_t m, bool round) {
  Outcome out;
  out.soft_alloc = Matrix(N, K);
  const double* a = o.alloc.value().data() + s * N * K;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < K; ++k) out.soft_alloc(i, k) = a[i * K + k];
  const double* p = o.payments.value().data() + s * m * 2;
  for (std::size_t i = 0; i < m; ++i) out.payments.push_back({p[2 * i], p[2 * i + 1]});
  if (round) out.hard_alloc = round_allocation(out.soft_alloc);
  return out;
}

}  // namespace

Outcome JeaNetMechanism::run(const AuctionInstance& inst,
                             std::span<const BidPair> bids) const {
  if (bids.size() != inst.num_ads())
    throw DimensionError("expected " + std::to_string(inst.num_ads()) + " bids");
  d::NoGradGuard guard;
  NetBatch batch = NetBatch::from(std::span<const AuctionInstance>(&inst, 1));
  std::vector<std::vector<BidPair>> b{std::vector<BidPair>(bids.begin(), bids.end())};
  NetOutput o = net_.forward(batch, d::constant(batch.bids_from(b)));
  return to_outcome(o, 0, batch.N, batch.K, batch.m, round_);
}

std::vector<Outcome> JeaNetMechanism::run_batch(
    std::span<const AuctionInstance> instances) const {
  d::NoGradGuard guard;
  NetBatch batch = NetBatch::from(instances);
  NetOutput o = net_.forward(batch);
  std::vector<Outcome> out;
  for (std::size_t s = 0; s < batch.B; ++s)
    out.push_back(to_outcome(o, s, batch.N, batch.K, batch.m, round_));
  return out;
}

}  // namespace jal
