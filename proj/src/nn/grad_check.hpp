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
#include <cstdint>
#include <functional>
#include <string>

#include "nn/parameter.hpp"
#include "nn/tape.hpp"

namespace avsd::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates checked per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t rng_seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Compares backward() gradients with central differences, using
// |a - n| / max(1, |a|, |n|) per coordinate. `build_loss` must record a
// deterministic scalar loss on the tape it is given.
GradCheckResult grad_check(const std::function<Var(Tape&)>& build_loss,
                           ParameterSet& params,
                           const GradCheckOptions& options = {});

}  // namespace avsd::nn
