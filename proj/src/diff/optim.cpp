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

#include "jal/diff/optim.hpp"

#include <cmath>

#include "jal/errors.hpp"

namespace jal::diff {

Var ParameterStore::add(const std::string& name, Array init) {
  if (params_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
  Var v = variable(std::move(init));
  params_.emplace(name, v);
  order_.push_back(name);
  return v;
}

Var ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& n : order_)
    if (n.rfind(prefix, 0) == 0) out.push_back(n);
  return out;
}

std::size_t ParameterStore::count(const std::string& prefix) const {
  std::size_t total = 0;
  for (const auto& n : names_with_prefix(prefix)) total += get(n).value().size();
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& [name, v] : params_) v.zero_grad();
}

ParameterStore::Moments& ParameterStore::moments(const std::string& name) {
  auto it = moments_.find(name);
  if (it == moments_.end()) {
    const Shape& s = get(name).shape();
    it = moments_.emplace(name, Moments{Array(s, 0.0), Array(s, 0.0), 0}).first;
  }
  return it->second;
}

void ParameterStore::set(const std::string& name, const Array& value) {
  Var v = get(name);
  if (v.shape() != value.shape())
    throw DimensionError("parameter '" + name + "' has shape " +
                         shape_str(v.shape()) + ", got " + shape_str(value.shape()));
  v.mutable_value() = value;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& n : order_) out.add(n, get(n).value());
  out.moments_ = moments_;
  out.lambda = lambda;
  out.rho = rho;
  return out;
}

void ParameterStore::set_frozen(bool frozen) const {
  for (auto& [name, v] : params_) v.node()->requires_grad = !frozen;
}

void adam_step(ParameterStore& store, const AdamConfig& cfg,
               const std::vector<std::string>& names) {
  for (const auto& name : names) {
    Var p = store.get(name);
    if (!p.node()->has_grad()) continue;
    const Array& g = p.node()->grad;
    auto& mom = store.moments(name);
    ++mom.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(mom.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(mom.step));
    Array& w = p.mutable_value();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / c1;
      const double vhat = mom.v[i] / c2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double h) {
  if (!(h > 0.0)) throw DomainError("grad_check step must be positive");
  for (auto p : params) p.zero_grad();
  Var root = f();
  backward(root);
  std::vector<Array> analytic;
  for (const auto& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var p = params[pi];
    Array& w = p.mutable_value();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = f().value().item();
      w[i] = saved - h;
      const double down = f().value().item();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err =
          std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace jal::diff
