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

#include "jal/diff/graph.hpp"

#include <atomic>
#include <unordered_set>

#include "jal/errors.hpp"

namespace jal::diff {
namespace {

thread_local bool g_grad_enabled = true;
std::atomic<bool> g_finite_checks{true};

}  // namespace

void Node::accumulate(const Array& g) {
  if (g.size() != value.size())
    throw DimensionError(std::string("gradient shape ") + shape_str(g.shape()) +
                         " does not match value " + shape_str(value.shape()) +
                         " in " + op);
  Array& buf = grad_buffer();
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0, n = g.size(); i < n; ++i) dst[i] += src[i];
}

Array& Node::grad_buffer() {
  if (grad.size() != value.size() || grad.shape() != value.shape())
    grad = Array(value.shape(), 0.0);
  return grad;
}

Array Var::grad() const {
  if (node_->has_grad()) return node_->grad;
  return Array(node_->value.shape(), 0.0);
}

Var constant(Array value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "const";
  return Var(std::move(n));
}

Var variable(Array value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "leaf";
  return Var(std::move(n));
}

Var make_node(const char* op, Array value, std::vector<Var> inputs,
              std::function<void(Node&)> backward_fn) {
  if (g_finite_checks.load(std::memory_order_relaxed) && !value.all_finite())
    throw NumericError(std::string("non-finite output from ") + op);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->inputs.reserve(inputs.size());
      for (auto& in : inputs) n->inputs.push_back(in.node());
      n->backward_fn = std::move(backward_fn);
    }
  }
  return Var(std::move(n));
}

void backward(const Var& root) {
  if (root.value().size() != 1)
    throw DomainError("backward needs a scalar root, got shape " +
                      shape_str(root.shape()));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients restart from zero so a graph can be differentiated
  // more than once; leaves keep accumulating.
  for (Node* node : order)
    if (!node->inputs.empty()) node->grad = Array();
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->has_grad()) node->backward_fn(*node);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void set_finite_checks(bool on) { g_finite_checks.store(on); }
bool finite_checks() { return g_finite_checks.load(); }

}  // namespace jal::diff
