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

#include <cstdint>
#include <map>
#include <string>

#include "nn/parameter.hpp"

namespace avsd::nn {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescales the global gradient norm down to this value when > 0.
  double clip_norm = 0.0;

  bool operator==(const OptimizerConfig&) const = default;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  // Applies one update from the accumulated gradients, then zeroes them.
  // Throws InvalidArgument naming the first parameter with a non-finite
  // gradient, before anything is modified.
  void step(ParameterSet& params);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }

  // Adam moments, keyed by parameter name.
  struct Moments {
    Tensor m;
    Tensor v;
  };
  const std::map<std::string, Moments>& moments() const { return moments_; }
  void restore(std::uint64_t steps, std::map<std::string, Moments> moments);

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace avsd::nn
