// Copyright 2026 The avsd-dialog Authors
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

#include "nn/tape.hpp"

#include <atomic>

#include "common/error.hpp"

namespace avsd::nn {

namespace debug {
namespace {
std::atomic<bool> g_corrupt{false};
}
void set_corrupt_backward(bool on) { g_corrupt.store(on); }
bool corrupt_backward() { return g_corrupt.load(); }
}  // namespace debug

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::push(Node node) {
  if (done_) throw UsageError("tape already consumed by backward(); call reset()");
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw InvalidArgument("non-finite constant");
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.external_value = &p.value;
  n.external_grad = &p.grad;
  n.requires_grad = true;
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Tape::frozen(const Parameter& p) {
  Node n;
  n.external_value = &p.value;
  return push(std::move(n));
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& parents,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw InvalidArgument(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape != this) throw InvalidArgument(std::string(op) + ": operand from another tape");
    if (nodes_[static_cast<std::size_t>(p.id)].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.external_value ? *n.external_value : n.value;
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.external_grad) {
    n.has_grad = true;
    return *n.external_grad;
  }
  if (!n.has_grad) {
    const Tensor& v = n.external_value ? *n.external_value : n.value;
    n.grad = Tensor(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (done_) throw UsageError("backward() called twice without reset()");
  if (loss.tape != this) throw InvalidArgument("loss belongs to another tape");
  const Tensor& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw InvalidArgument("backward() needs a scalar loss, got " + lv.shape_string());
  }
  if (nodes_[static_cast<std::size_t>(loss.id)].requires_grad) {
    grad(loss.id)(0, 0) += 1.0;
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.requires_grad && n.has_grad && n.backward) n.backward(*this, id);
    }
  }
  nodes_.clear();
  param_nodes_.clear();
  done_ = true;
}

void Tape::reset() {
  nodes_.clear();
  param_nodes_.clear();
  done_ = false;
}

}  // namespace avsd::nn
