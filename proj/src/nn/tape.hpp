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

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nn/parameter.hpp"
#include "nn/tensor.hpp"

namespace avsd::nn {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Records one forward pass. Nodes are appended in evaluation order, so
// reverse index order is a reverse topological order and backward visits
// every node once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Parameters are recorded once per tape; their gradient slot is the
  // parameter's own grad tensor, so backward accumulates into it.
  Var param(Parameter& p);
  // Records a parameter as a constant that reads the parameter's storage;
  // no gradient is produced.
  Var frozen(const Parameter& p);

  Var record(const char* op, Tensor value, const std::vector<Var>& parents,
             BackwardFn backward);

  const Tensor& value(int id) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  // Gradient buffer of a node, allocated as zeros on first use.
  Tensor& grad(int id);
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].has_grad; }

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule. Intermediate
  // values are released afterwards; a second call without reset() throws.
  void backward(Var loss);
  void reset();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool done_ = false;
};

namespace debug {
// Test hook: scales the tanh backward rule by 2 so gradient checks can be
// shown to catch a broken rule.
void set_corrupt_backward(bool on);
bool corrupt_backward();
}  // namespace debug

}  // namespace avsd::nn
