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

// Parameterised building blocks over the autodiff substrate. Layers hold
// parameter names only and read values from a ParameterStore at call time,
// so one layer description serves every copy of the store.

#ifndef JAL_LAYERS_HPP_
#define JAL_LAYERS_HPP_

#include <string>
#include <vector>

#include "jal/diff/ops.hpp"
#include "jal/diff/optim.hpp"
#include "jal/distributions.hpp"

namespace jal::nn {

using diff::ParameterStore;
using diff::Var;

struct Dense {
  std::string name;
  std::size_t in = 0, out = 0;

  // Registers Xavier-uniform weights and zero bias.
  static Dense create(ParameterStore& store, std::string name, std::size_t in,
                      std::size_t out, Rng& rng);
  Var operator()(const ParameterStore& store, const Var& x) const;
};

// Dense layers with ReLU between them (none after the last).
struct Mlp {
  std::vector<Dense> layers;

  static Mlp create(ParameterStore& store, const std::string& name,
                    std::size_t in, const std::vector<std::size_t>& widths,
                    Rng& rng);
  Var operator()(const ParameterStore& store, const Var& x) const;
  std::size_t out() const { return layers.back().out; }
};

struct LayerNorm {
  std::string name;
  static LayerNorm create(ParameterStore& store, std::string name,
                          std::size_t width);
  Var operator()(const ParameterStore& store, const Var& x) const;
};

// Pre-norm transformer layer over (B, S, d): x + MHA(LN(x)), then
// x + FF(LN(x)) with a 2d-wide ReLU feed-forward.
struct TransformerLayer {
  LayerNorm ln1, ln2;
  Dense q, k, v, o, ff1, ff2;
  std::size_t heads = 1;

  static TransformerLayer create(ParameterStore& store, const std::string& name,
                                 std::size_t width, std::size_t heads, Rng& rng);
  Var operator()(const ParameterStore& store, const Var& x) const;
};

// Input projection followed by a stack of transformer layers. No positional
// encoding: the encoder is permutation equivariant along the sequence.
struct Encoder {
  Dense input;
  std::vector<TransformerLayer> layers;

  static Encoder create(ParameterStore& store, const std::string& name,
                        std::size_t in, std::size_t width, std::size_t depth,
                        std::size_t heads, Rng& rng);
  Var operator()(const ParameterStore& store, const Var& x) const;
};

}  // namespace jal::nn

#endif  // JAL_LAYERS_HPP_
