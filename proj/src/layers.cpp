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

#include "jal/layers.hpp"

#include <cmath>

#include "jal/errors.hpp"

namespace jal::nn {

using diff::Array;

Dense Dense::create(ParameterStore& store, std::string name, std::size_t in,
                    std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Array w({in, out});
  for (double& x : w.values()) x = u(rng);
  store.add(name + ".w", std::move(w));
  store.add(name + ".b", Array({out}, 0.0));
  return Dense{std::move(name), in, out};
}

Var Dense::operator()(const ParameterStore& store, const Var& x) const {
  return diff::linear(x, store.get(name + ".w"), store.get(name + ".b"));
}

Mlp Mlp::create(ParameterStore& store, const std::string& name, std::size_t in,
                const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.empty()) throw ConfigError("MLP " + name + " needs a layer");
  Mlp m;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    m.layers.push_back(
        Dense::create(store, name + "." + std::to_string(l), in, widths[l], rng));
    in = widths[l];
  }
  return m;
}

Var Mlp::operator()(const ParameterStore& store, const Var& x) const {
  Var h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = layers[l](store, h);
    if (l + 1 < layers.size()) h = diff::relu(h);
  }
  return h;
}

LayerNorm LayerNorm::create(ParameterStore& store, std::string name,
                            std::size_t width) {
  store.add(name + ".g", Array({width}, 1.0));
  store.add(name + ".b", Array({width}, 0.0));
  return LayerNorm{std::move(name)};
}

Var LayerNorm::operator()(const ParameterStore& store, const Var& x) const {
  return diff::layer_norm(x, store.get(name + ".g"), store.get(name + ".b"));
}

TransformerLayer TransformerLayer::create(ParameterStore& store,
                                          const std::string& name,
                                          std::size_t width, std::size_t heads,
                                          Rng& rng) {
  if (heads == 0 || width % heads != 0)
    throw ConfigError("width " + std::to_string(width) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  TransformerLayer t;
  t.heads = heads;
  t.ln1 = LayerNorm::create(store, name + ".ln1", width);
  t.q = Dense::create(store, name + ".q", width, width, rng);
  t.k = Dense::create(store, name + ".k", width, width, rng);
  t.v = Dense::create(store, name + ".v", width, width, rng);
  t.o = Dense::create(store, name + ".o", width, width, rng);
  t.ln2 = LayerNorm::create(store, name + ".ln2", width);
  t.ff1 = Dense::create(store, name + ".ff1", width, 2 * width, rng);
  t.ff2 = Dense::create(store, name + ".ff2", 2 * width, width, rng);
  return t;
}

Var TransformerLayer::operator()(const ParameterStore& store, const Var& x) const {
  Var h = ln1(store, x);
  Var att = diff::scaled_dot_attention(q(store, h), k(store, h), v(store, h), heads);
  Var y = x + o(store, att);
  Var g = ln2(store, y);
  return y + ff2(store, diff::relu(ff1(store, g)));
}

Encoder Encoder::create(ParameterStore& store, const std::string& name,
                        std::size_t in, std::size_t width, std::size_t depth,
                        std::size_t heads, Rng& rng) {
  Encoder e;
  e.input = Dense::create(store, name + ".in", in, width, rng);
  for (std::size_t l = 0; l < depth; ++l)
    e.layers.push_back(TransformerLayer::create(
        store, name + ".layer" + std::to_string(l), width, heads, rng));
  return e;
}

Var Encoder::operator()(const ParameterStore& store, const Var& x) const {
  Var h = input(store, x);
  for (const auto& layer : layers) h = layer(store, h);
  return h;
}

}  // namespace jal::nn
