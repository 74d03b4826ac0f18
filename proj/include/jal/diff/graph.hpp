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

#ifndef JAL_DIFF_GRAPH_HPP_
#define JAL_DIFF_GRAPH_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "jal/diff/array.hpp"

namespace jal::diff {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the computation graph. `backward_fn` reads `grad` and adds
// vector-Jacobian products into the inputs that require gradients.
struct Node {
  Array value;
  Array grad;  // empty until something flows into it
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  const char* op = "leaf";

  // grad += g (allocating zeros on first use).
  void accumulate(const Array& g);
  Array& grad_buffer();
  bool has_grad() const { return grad.size() == value.size() && value.size() > 0; }
};

// Handle to a node; cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Array& value() const { return node_->value; }
  Array& mutable_value() { return node_->value; }
  // Gradient after backward(); zeros if nothing reached this node.
  Array grad() const;
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(int axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_->requires_grad; }
  const NodePtr& node() const { return node_; }
  bool valid() const { return static_cast<bool>(node_); }
  void zero_grad() { node_->grad = Array(); }

 private:
  NodePtr node_;
};

Var constant(Array value);
// Leaf that collects gradients (parameters, differentiable inputs).
Var variable(Array value);

// Builds an op node; records inputs and backward only in grad mode when an
// input needs gradients. Throws NumericError on non-finite output when
// finite checks are on.
Var make_node(const char* op, Array value, std::vector<Var> inputs,
              std::function<void(Node&)> backward_fn);

// Seeds d(root)/d(root) = 1 and runs vector-Jacobian products in reverse
// topological order. Root must be a scalar.
void backward(const Var& root);

bool grad_enabled();

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

void set_finite_checks(bool on);
bool finite_checks();

}  // namespace jal::diff

#endif  // JAL_DIFF_GRAPH_HPP_
