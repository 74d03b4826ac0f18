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

#include "jal/diff/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "jal/errors.hpp"

namespace jal::diff {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t d = s.size(); d-- > 1;) st[d - 1] = st[d] * s[d];
  return st;
}

// Index plan for iterating an output shape while tracking offsets into two
// operands whose strides are zero along broadcast axes.
struct Plan {
  Shape out;
  std::vector<std::size_t> sa;
  std::vector<std::size_t> sb;
};

std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  Shape padded(r - in.size(), 1);
  padded.insert(padded.end(), in.begin(), in.end());
  auto st = strides_of(padded);
  for (std::size_t d = 0; d < r; ++d)
    if (padded[d] == 1) st[d] = 0;
  return st;
}

Plan make_plan(const Shape& a, const Shape& b) {
  Plan p;
  p.out = broadcast_shape(a, b);
  p.sa = aligned_strides(a, p.out);
  p.sb = aligned_strides(b, p.out);
  return p;
}

template <class F>
void for_each_index(const Plan& p, F&& f) {
  const std::size_t r = p.out.size();
  if (r == 0) {
    f(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  if (shape_size(p.out) == 0) return;
  std::vector<std::size_t> idx(r, 0);
  std::size_t o = 0, ia = 0, ib = 0;
  const std::size_t inner = p.out[r - 1];
  const std::size_t as = p.sa[r - 1], bs = p.sb[r - 1];
  for (;;) {
    for (std::size_t t = 0; t < inner; ++t) f(o + t, ia + t * as, ib + t * bs);
    o += inner;
    int d = static_cast<int>(r) - 2;
    for (; d >= 0; --d) {
      ++idx[d];
      ia += p.sa[d];
      ib += p.sb[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.sa[d] * p.out[d];
      ib -= p.sb[d] * p.out[d];
      idx[d] = 0;
    }
    if (d < 0) break;
  }
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b)
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                         shape_str(b) + " differ");
}

// Elementwise binary op; da/db give the partial derivatives at (x, y).
template <class Fwd, class Da, class Db>
Var binary(const char* op, const Var& a, const Var& b, Fwd fwd, Da da, Db db) {
  const Array& x = a.value();
  const Array& y = b.value();
  if (x.shape() == y.shape()) {
    Array out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i], y[i]);
    return make_node(op, std::move(out), {a, b}, [da, db](Node& self) {
      const Array& xv = self.inputs[0]->value;
      const Array& yv = self.inputs[1]->value;
      const Array& g = self.grad;
      if (self.inputs[0]->requires_grad) {
        Array& gx = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * da(xv[i], yv[i]);
      }
      if (self.inputs[1]->requires_grad) {
        Array& gy = self.inputs[1]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * db(xv[i], yv[i]);
      }
    });
  }
  Plan plan = make_plan(x.shape(), y.shape());
  Array out(plan.out);
  for_each_index(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
    out[o] = fwd(x[ia], y[ib]);
  });
  return make_node(op, std::move(out), {a, b}, [plan, da, db](Node& self) {
    const Array& xv = self.inputs[0]->value;
    const Array& yv = self.inputs[1]->value;
    const Array& g = self.grad;
    if (self.inputs[0]->requires_grad) {
      Array& gx = self.inputs[0]->grad_buffer();
      for_each_index(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        gx[ia] += g[o] * da(xv[ia], yv[ib]);
      });
    }
    if (self.inputs[1]->requires_grad) {
      Array& gy = self.inputs[1]->grad_buffer();
      for_each_index(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        gy[ib] += g[o] * db(xv[ia], yv[ib]);
      });
    }
  });
}

// Elementwise unary op; deriv(x, y) is dy/dx.
template <class Fwd, class Deriv>
Var unary(const char* op, const Var& a, Fwd fwd, Deriv deriv) {
  const Array& x = a.value();
  Array out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return make_node(op, std::move(out), {a}, [deriv](Node& self) {
    const Array& xv = self.inputs[0]->value;
    const Array& y = self.value;
    const Array& g = self.grad;
    Array& gx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], y[i]);
  });
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t d = 0; d < r; ++d) {
    const std::size_t da = d + a.size() >= r ? a[d + a.size() - r] : 1;
    const std::size_t db = d + b.size() >= r ? b[d + b.size() - r] : 1;
    if (da != db && da != 1 && db != 1)
      throw DimensionError("cannot broadcast " + shape_str(a) + " with " +
                           shape_str(b));
    out[d] = std::max(da, db);
  }
  return out;
}

Var add(const Var& a, const Var& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var add_scalar(const Var& x, double c) {
  return unary(
      "add_scalar", x, [c](double v) { return v + c; },
      [](double, double) { return 1.0; });
}

Var scale(const Var& x, double c) {
  return unary(
      "scale", x, [c](double v) { return v * c; },
      [c](double, double) { return c; });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var relu(const Var& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var log(const Var& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var square(const Var& x) {
  return unary(
      "square", x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var minimum(const Var& a, const Var& b) {
  require_same_shape("minimum", a.shape(), b.shape());
  return binary(
      "minimum", a, b, [](double x, double y) { return x < y ? x : y; },
      [](double x, double y) { return x < y ? 1.0 : (x == y ? 0.5 : 0.0); },
      [](double x, double y) { return y < x ? 1.0 : (x == y ? 0.5 : 0.0); });
}

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2)
    throw DimensionError("matmul needs rank >= 2, got " + shape_str(sa) +
                         " and " + shape_str(sb));
  const std::size_t n = sa[sa.size() - 2], k = sa.back();
  if (sb[sb.size() - 2] != k)
    throw DimensionError("matmul inner dims differ: " + shape_str(sa) + " @ " +
                         shape_str(sb));
  const std::size_t m = sb.back();

  if (sb.size() == 2) {
    const std::size_t rows = a.value().size() / k;
    Shape out_shape(sa.begin(), sa.end() - 1);
    out_shape.push_back(m);
    Array out(out_shape);
    MapMat(out.data(), rows, m).noalias() =
        CMapMat(a.value().data(), rows, k) * CMapMat(b.value().data(), k, m);
    return make_node("matmul", std::move(out), {a, b},
                     [rows, k, m](Node& self) {
                       CMapMat g(self.grad.data(), rows, m);
                       Node& na = *self.inputs[0];
                       Node& nb = *self.inputs[1];
                       if (na.requires_grad)
                         MapMat(na.grad_buffer().data(), rows, k).noalias() +=
                             g * CMapMat(nb.value.data(), k, m).transpose();
                       if (nb.requires_grad)
                         MapMat(nb.grad_buffer().data(), k, m).noalias() +=
                             CMapMat(na.value.data(), rows, k).transpose() * g;
                     });
  }

  if (!std::equal(sa.begin(), sa.end() - 2, sb.begin(), sb.end() - 2))
    throw DimensionError("batched matmul needs equal leading dims: " +
                         shape_str(sa) + " @ " + shape_str(sb));
  const std::size_t batch = a.value().size() / (n * k);
  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(m);
  Array out(out_shape);
  for (std::size_t t = 0; t < batch; ++t)
    MapMat(out.data() + t * n * m, n, m).noalias() =
        CMapMat(a.value().data() + t * n * k, n, k) *
        CMapMat(b.value().data() + t * k * m, k, m);
  return make_node("bmm", std::move(out), {a, b},
                   [batch, n, k, m](Node& self) {
                     Node& na = *self.inputs[0];
                     Node& nb = *self.inputs[1];
                     for (std::size_t t = 0; t < batch; ++t) {
                       CMapMat g(self.grad.data() + t * n * m, n, m);
                       if (na.requires_grad)
                         MapMat(na.grad_buffer().data() + t * n * k, n, k)
                             .noalias() +=
                             g * CMapMat(nb.value.data() + t * k * m, k, m)
                                     .transpose();
                       if (nb.requires_grad)
                         MapMat(nb.grad_buffer().data() + t * k * m, k, m)
                             .noalias() +=
                             CMapMat(na.value.data() + t * n * k, n, k)
                                 .transpose() *
                             g;
                     }
                   });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.empty() || sw.size() != 2 || sx.back() != sw[0])
    throw DimensionError("linear: input " + shape_str(sx) + " vs weight " +
                         shape_str(sw));
  const std::size_t k = sw[0], m = sw[1];
  if (bias.shape() != Shape{m})
    throw DimensionError("linear: bias " + shape_str(bias.shape()) +
                         " vs weight " + shape_str(sw));
  const std::size_t rows = x.value().size() / k;
  Shape out_shape(sx.begin(), sx.end() - 1);
  out_shape.push_back(m);
  Array out(out_shape);
  MapMat o(out.data(), rows, m);
  o.noalias() = CMapMat(x.value().data(), rows, k) * CMapMat(w.value().data(), k, m);
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(), m);
  return make_node("linear", std::move(out), {x, w, bias},
                   [rows, k, m](Node& self) {
                     CMapMat g(self.grad.data(), rows, m);
                     Node& nx = *self.inputs[0];
                     Node& nw = *self.inputs[1];
                     Node& nb = *self.inputs[2];
                     if (nx.requires_grad)
                       MapMat(nx.grad_buffer().data(), rows, k).noalias() +=
                           g * CMapMat(nw.value.data(), k, m).transpose();
                     if (nw.requires_grad)
                       MapMat(nw.grad_buffer().data(), k, m).noalias() +=
                           CMapMat(nx.value.data(), rows, k).transpose() * g;
                     if (nb.requires_grad)
                       Eigen::Map<Eigen::RowVectorXd>(nb.grad_buffer().data(), m) +=
                           g.colwise().sum();
                   });
}

Var softmax(const Var& x, int axis) {
  const Shape& s = x.shape();
  const std::size_t ax = normalize_axis(axis, s.size());
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= s[d];
  for (std::size_t d = ax + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t len = s[ax];
  const Array& xv = x.value();
  Array out(s);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double mx = xv[base];
      for (std::size_t l = 1; l < len; ++l) mx = std::max(mx, xv[base + l * inner]);
      double z = 0.0;
      for (std::size_t l = 0; l < len; ++l) {
        const double e = std::exp(xv[base + l * inner] - mx);
        out[base + l * inner] = e;
        z += e;
      }
      for (std::size_t l = 0; l < len; ++l) out[base + l * inner] /= z;
    }
  return make_node("softmax", std::move(out), {x},
                   [outer, inner, len](Node& self) {
                     const Array& y = self.value;
                     const Array& g = self.grad;
                     Array& gx = self.inputs[0]->grad_buffer();
                     for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t i = 0; i < inner; ++i) {
                         const std::size_t base = o * len * inner + i;
                         double dot = 0.0;
                         for (std::size_t l = 0; l < len; ++l)
                           dot += g[base + l * inner] * y[base + l * inner];
                         for (std::size_t l = 0; l < len; ++l) {
                           const std::size_t at = base + l * inner;
                           gx[at] += y[at] * (g[at] - dot);
                         }
                       }
                   });
}

Var sum(const Var& x, std::vector<int> axes, bool keepdims) {
  const Shape& s = x.shape();
  Shape kept = s;
  std::vector<bool> reduced(s.size(), false);
  for (int a : axes) {
    const std::size_t ax = normalize_axis(a, s.size());
    reduced[ax] = true;
    kept[ax] = 1;
  }
  Plan plan = make_plan(s, kept);
  Array out(kept, 0.0);
  const Array& xv = x.value();
  for_each_index(plan, [&](std::size_t o, std::size_t, std::size_t ib) {
    out[ib] += xv[o];
  });
  if (!keepdims) {
    Shape dropped;
    for (std::size_t d = 0; d < s.size(); ++d)
      if (!reduced[d]) dropped.push_back(s[d]);
    out = out.reshaped(dropped);
  }
  return make_node("sum", std::move(out), {x}, [plan](Node& self) {
    const Array& g = self.grad;
    Array& gx = self.inputs[0]->grad_buffer();
    for_each_index(plan, [&](std::size_t o, std::size_t, std::size_t ib) {
      gx[o] += g[ib];
    });
  });
}

Var mean(const Var& x, std::vector<int> axes, bool keepdims) {
  std::size_t count = 1;
  for (int a : axes) count *= x.shape()[normalize_axis(a, x.shape().size())];
  return scale(sum(x, std::move(axes), keepdims), 1.0 / static_cast<double>(count));
}

Var sum_all(const Var& x) {
  std::vector<int> axes(x.shape().size());
  for (std::size_t d = 0; d < axes.size(); ++d) axes[d] = static_cast<int>(d);
  return sum(x, axes, false);
}

Var mean_all(const Var& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size()));
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  const Shape& s0 = parts[0].shape();
  const std::size_t ax = normalize_axis(axis, s0.size());
  Shape out_shape = s0;
  out_shape[ax] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size())
      throw DimensionError("concat rank mismatch: " + shape_str(s0) + " vs " +
                           shape_str(s));
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != ax && s[d] != s0[d])
        throw DimensionError("concat shape mismatch: " + shape_str(s0) + " vs " +
                             shape_str(s));
    out_shape[ax] += s[ax];
    widths.push_back(s[ax]);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= s0[d];
  for (std::size_t d = ax + 1; d < s0.size(); ++d) inner *= s0[d];
  const std::size_t total = out_shape[ax];
  Array out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::size_t block = widths[p] * inner;
    const double* src = parts[p].value().data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy(src + o * block, src + (o + 1) * block,
                out.data() + o * total * inner + offset * inner);
    offset += widths[p];
  }
  return make_node("concat", std::move(out), parts,
                   [widths, outer, inner, total](Node& self) {
                     std::size_t offset = 0;
                     for (std::size_t p = 0; p < widths.size(); ++p) {
                       Node& in = *self.inputs[p];
                       const std::size_t block = widths[p] * inner;
                       if (in.requires_grad) {
                         Array& gi = in.grad_buffer();
                         for (std::size_t o = 0; o < outer; ++o) {
                           const double* src = self.grad.data() +
                                               o * total * inner + offset * inner;
                           double* dst = gi.data() + o * block;
                           for (std::size_t t = 0; t < block; ++t) dst[t] += src[t];
                         }
                       }
                       offset += widths[p];
                     }
                   });
}

Var slice(const Var& x, int axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  const std::size_t ax = normalize_axis(axis, s.size());
  if (begin >= end || end > s[ax])
    throw DimensionError("slice [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= s[d];
  for (std::size_t d = ax + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t len = s[ax], width = end - begin;
  Shape out_shape = s;
  out_shape[ax] = width;
  Array out(out_shape);
  const double* src = x.value().data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy(src + (o * len + begin) * inner, src + (o * len + end) * inner,
              out.data() + o * width * inner);
  return make_node("slice", std::move(out), {x},
                   [outer, inner, len, begin, width](Node& self) {
                     Array& gx = self.inputs[0]->grad_buffer();
                     for (std::size_t o = 0; o < outer; ++o) {
                       const double* g = self.grad.data() + o * width * inner;
                       double* dst = gx.data() + (o * len + begin) * inner;
                       for (std::size_t t = 0; t < width * inner; ++t) dst[t] += g[t];
                     }
                   });
}

Var reshape(const Var& x, Shape shape) {
  Array out = x.value().reshaped(std::move(shape));
  return make_node("reshape", std::move(out), {x}, [](Node& self) {
    Array& gx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Var permute(const Var& x, const std::vector<std::size_t>& perm) {
  const Shape& s = x.shape();
  if (perm.size() != s.size())
    throw DimensionError("permute rank mismatch for " + shape_str(s));
  std::vector<bool> used(s.size(), false);
  for (auto p : perm) {
    if (p >= s.size() || used[p]) throw DimensionError("invalid permutation");
    used[p] = true;
  }
  const auto in_strides = strides_of(s);
  Plan plan;
  for (std::size_t d = 0; d < s.size(); ++d) {
    plan.out.push_back(s[perm[d]]);
    plan.sa.push_back(in_strides[perm[d]]);
    plan.sb.push_back(0);
  }
  Array out(plan.out);
  const Array& xv = x.value();
  for_each_index(plan, [&](std::size_t o, std::size_t ia, std::size_t) {
    out[o] = xv[ia];
  });
  return make_node("permute", std::move(out), {x}, [plan](Node& self) {
    Array& gx = self.inputs[0]->grad_buffer();
    const Array& g = self.grad;
    for_each_index(plan, [&](std::size_t o, std::size_t ia, std::size_t) {
      gx[ia] += g[o];
    });
  });
}

Var broadcast_to(const Var& x, const Shape& shape) {
  if (broadcast_shape(shape, x.shape()) != shape)
    throw DimensionError("cannot broadcast " + shape_str(x.shape()) + " to " +
                         shape_str(shape));
  Plan plan = make_plan(shape, x.shape());
  Array out(shape);
  const Array& xv = x.value();
  for_each_index(plan, [&](std::size_t o, std::size_t, std::size_t ib) {
    out[o] = xv[ib];
  });
  return make_node("broadcast_to", std::move(out), {x}, [plan](Node& self) {
    Array& gx = self.inputs[0]->grad_buffer();
    const Array& g = self.grad;
    for_each_index(plan, [&](std::size_t o, std::size_t, std::size_t ib) {
      gx[ib] += g[o];
    });
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Shape& s = x.shape();
  if (s.empty()) throw DimensionError("layer_norm needs rank >= 1");
  const std::size_t d = s.back();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d})
    throw DimensionError("layer_norm: gain/bias must have shape (" +
                         std::to_string(d) + ")");
  const std::size_t rows = x.value().size() / d;
  const Array& xv = x.value();
  const Array& gv = gain.value();
  const Array& bv = bias.value();
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_sd(rows);
  Array out(s);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sd[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_node(
      "layer_norm", std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), inv_sd = std::move(inv_sd), rows, d](Node& self) {
        const Array& g = self.grad;
        Node& nx = *self.inputs[0];
        Node& ng = *self.inputs[1];
        Node& nb = *self.inputs[2];
        const Array& gain_v = ng.value;
        if (ng.requires_grad) {
          Array& gg = ng.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (nb.requires_grad) {
          Array& gb = nb.grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
        if (nx.requires_grad) {
          Array& gx = nx.grad_buffer();
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g[r * d + j] * gain_v[j];
              m1 += dh;
              m2 += dh * xhat[r * d + j];
            }
            m1 *= inv_d;
            m2 *= inv_d;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g[r * d + j] * gain_v[j];
              gx[r * d + j] += inv_sd[r] * (dh - m1 - xhat[r * d + j] * m2);
            }
          }
        }
      });
}

Var scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                         std::size_t heads) {
  const Shape& sq = q.shape();
  const Shape& sk = k.shape();
  if (sq.size() != 3 || sk.size() != 3 || v.shape() != sk || sq[0] != sk[0] ||
      sq[2] != sk[2])
    throw DimensionError("attention expects q (B,S,d), k/v (B,T,d); got " +
                         shape_str(sq) + ", " + shape_str(sk) + ", " +
                         shape_str(v.shape()));
  const std::size_t batch = sq[0], S = sq[1], T = sk[1], d = sq[2];
  if (heads == 0 || d % heads != 0)
    throw DimensionError("attention width " + std::to_string(d) +
                         " not divisible by " + std::to_string(heads) + " heads");
  const std::size_t dh = d / heads;
  const double scale_f = 1.0 / std::sqrt(static_cast<double>(dh));

  Array out(sq, 0.0);
  std::vector<double> probs(batch * heads * S * T);
  RowMat scores(S, T);
  for (std::size_t b = 0; b < batch; ++b) {
    CMapMat Q(q.value().data() + b * S * d, S, d);
    CMapMat K(k.value().data() + b * T * d, T, d);
    CMapMat V(v.value().data() + b * T * d, T, d);
    MapMat O(out.data() + b * S * d, S, d);
    for (std::size_t h = 0; h < heads; ++h) {
      scores.noalias() = Q.middleCols(h * dh, dh) *
                         K.middleCols(h * dh, dh).transpose() * scale_f;
      for (std::size_t i = 0; i < S; ++i) {
        auto row = scores.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
      }
      MapMat(probs.data() + (b * heads + h) * S * T, S, T) = scores;
      O.middleCols(h * dh, dh).noalias() = scores * V.middleCols(h * dh, dh);
    }
  }
  return make_node(
      "attention", std::move(out), {q, k, v},
      [probs = std::move(probs), batch, S, T, d, heads, dh, scale_f](Node& self) {
        Node& nq = *self.inputs[0];
        Node& nk = *self.inputs[1];
        Node& nv = *self.inputs[2];
        RowMat dP(S, T), dS(S, T);
        for (std::size_t b = 0; b < batch; ++b) {
          CMapMat G(self.grad.data() + b * S * d, S, d);
          CMapMat Q(nq.value.data() + b * S * d, S, d);
          CMapMat K(nk.value.data() + b * T * d, T, d);
          CMapMat V(nv.value.data() + b * T * d, T, d);
          for (std::size_t h = 0; h < heads; ++h) {
            CMapMat P(probs.data() + (b * heads + h) * S * T, S, T);
            auto Gh = G.middleCols(h * dh, dh);
            if (nv.requires_grad) {
              MapMat GV(nv.grad_buffer().data() + b * T * d, T, d);
              GV.middleCols(h * dh, dh).noalias() += P.transpose() * Gh;
            }
            dP.noalias() = Gh * V.middleCols(h * dh, dh).transpose();
            for (std::size_t i = 0; i < S; ++i) {
              const double dot = dP.row(i).dot(P.row(i));
              dS.row(i) = P.row(i).array() * (dP.row(i).array() - dot);
            }
            if (nq.requires_grad) {
              MapMat GQ(nq.grad_buffer().data() + b * S * d, S, d);
              GQ.middleCols(h * dh, dh).noalias() +=
                  dS * K.middleCols(h * dh, dh) * scale_f;
            }
            if (nk.requires_grad) {
              MapMat GK(nk.grad_buffer().data() + b * T * d, T, d);
              GK.middleCols(h * dh, dh).noalias() +=
                  dS.transpose() * Q.middleCols(h * dh, dh) * scale_f;
            }
          }
        }
      });
}

Var straight_through(const Var& quantized, const Var& raw) {
  require_same_shape("straight_through", quantized.shape(), raw.shape());
  return make_node("straight_through", quantized.value(), {raw}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad);
  });
}

Var stop_gradient(const Var& x) { return constant(x.value()); }

}  // namespace jal::diff
