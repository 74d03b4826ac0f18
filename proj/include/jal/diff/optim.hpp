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

#ifndef JAL_DIFF_OPTIM_HPP_
#define JAL_DIFF_OPTIM_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jal/diff/graph.hpp"

namespace jal::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named trainable arrays, their Adam moments, and the augmented-Lagrangian
// multipliers. Copies share parameter nodes; use clone() for a detached copy.
class ParameterStore {
 public:
  struct Moments {
    Array m;
    Array v;
    long step = 0;
  };

  Var add(const std::string& name, Array init);
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  const std::vector<std::string>& names() const { return order_; }
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  // Number of scalars in parameters whose name starts with `prefix`.
  std::size_t count(const std::string& prefix = "") const;

  void zero_grad();
  Moments& moments(const std::string& name);
  const std::map<std::string, Moments>& all_moments() const { return moments_; }

  // Overwrites a parameter value in place (shape must match).
  void set(const std::string& name, const Array& value);

  ParameterStore clone() const;
  // Stops (or resumes) gradient collection on every parameter. Graphs built
  // while frozen treat parameters as constants.
  void set_frozen(bool frozen) const;

  std::vector<double> lambda;  // one multiplier per advertiser position
  double rho = 1.0;

 private:
  std::map<std::string, Var> params_;
  std::vector<std::string> order_;
  std::map<std::string, Moments> moments_;
};

// Bias-corrected Adam on the listed parameters using their accumulated grads.
void adam_step(ParameterStore& store, const AdamConfig& cfg,
               const std::vector<std::string>& names);

// Max over parameter entries of |analytic - central difference| /
// max(1, |central difference|). `f` must rebuild the scalar graph from the
// current parameter values on every call.
double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double h = 1e-5);

}  // namespace jal::diff

#endif  // JAL_DIFF_OPTIM_HPP_
