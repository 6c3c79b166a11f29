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

#include "nn/parameter.hpp"

#include <cmath>

#include "common/error.hpp"

namespace avsd::nn {

Parameter& ParameterSet::add(const std::string& name, std::size_t rows,
                             std::size_t cols) {
  if (contains(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::add_glorot(const std::string& name, std::size_t rows,
                                    std::size_t cols, Rng& rng) {
  Parameter& p = add(name, rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : p.value.values()) v = rng.uniform(-a, a);
  return p;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter '" + name + "'");
  return *params_[it->second];
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

}  // namespace avsd::nn
