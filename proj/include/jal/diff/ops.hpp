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

// Differentiable primitives. Binary elementwise ops broadcast numpy-style
// (shapes right-aligned, extent 1 stretches).

#ifndef JAL_DIFF_OPS_HPP_
#define JAL_DIFF_OPS_HPP_

#include <vector>

#include "jal/diff/graph.hpp"

namespace jal::diff {

Shape broadcast_shape(const Shape& a, const Shape& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var add_scalar(const Var& x, double c);
Var scale(const Var& x, double c);
Var neg(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator-(const Var& a) { return neg(a); }

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var square(const Var& x);

// Elementwise min of equal shapes. The gradient goes to the smaller argument;
// exact ties split it 0.5 / 0.5.
Var minimum(const Var& a, const Var& b);

// (..., n, k) @ (k, m) -> (..., n, m), or batched (..., n, k) @ (..., k, m)
// with identical leading dims.
Var matmul(const Var& a, const Var& b);
// x @ w + bias over the last axis of x.
Var linear(const Var& x, const Var& w, const Var& bias);

Var softmax(const Var& x, int axis);
Var sum(const Var& x, std::vector<int> axes, bool keepdims = false);
Var mean(const Var& x, std::vector<int> axes, bool keepdims = false);
Var sum_all(const Var& x);
Var mean_all(const Var& x);

Var concat(const std::vector<Var>& parts, int axis);
Var slice(const Var& x, int axis, std::size_t begin, std::size_t end);
Var reshape(const Var& x, Shape shape);
Var permute(const Var& x, const std::vector<std::size_t>& perm);
Var broadcast_to(const Var& x, const Shape& shape);

// Normalises the last axis, then applies gain and bias of that width.
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               double eps = 1e-5);

// Multi-head scaled dot-product self/cross attention over (B, S, d) inputs;
// d must divide evenly into `heads`.
Var scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                         std::size_t heads);

// Forward value of `quantized`; gradient passes to `raw` unchanged and
// nothing flows into `quantized`.
Var straight_through(const Var& quantized, const Var& raw);
Var stop_gradient(const Var& x);

}  // namespace jal::diff

#endif  // JAL_DIFF_OPS_HPP_
