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

#include "nn/optimizer.hpp"

#include <cmath>

#include "common/error.hpp"

namespace avsd::nn {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidArgument("unknown optimizer '" + name + "' (valid: adam, sgd)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

void Optimizer::restore(std::uint64_t steps, std::map<std::string, Moments> moments) {
  steps_ = steps;
  moments_ = std::move(moments);
}

void Optimizer::step(ParameterSet& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    for (double g : p.grad.values()) {
      if (!std::isfinite(g)) {
        throw InvalidArgument("non-finite gradient in parameter '" + p.name + "'");
      }
      sq += g * g;
    }
  }
  double factor = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) factor = config_.clip_norm / norm;
  }

  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        p.value[j] -= lr * factor * p.grad[j];
      }
    }
  } else {
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = params[i];
      auto [it, inserted] = moments_.try_emplace(p.name);
      Moments& mo = it->second;
      if (inserted || !mo.m.same_shape(p.value)) {
        mo.m = Tensor(p.value.rows(), p.value.cols());
        mo.v = Tensor(p.value.rows(), p.value.cols());
      }
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = factor * p.grad[j];
        mo.m[j] = b1 * mo.m[j] + (1.0 - b1) * g;
        mo.v[j] = b2 * mo.v[j] + (1.0 - b2) * g * g;
        const double mhat = mo.m[j] / c1;
        const double vhat = mo.v[j] / c2;
        p.value[j] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    }
  }
  params.zero_grad();
}

}  // namespace avsd::nn
