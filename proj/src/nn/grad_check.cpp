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

#include "nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "common/rng.hpp"

namespace avsd::nn {

GradCheckResult grad_check(const std::function<Var(Tape&)>& build_loss,
                           ParameterSet& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = build_loss(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params[i].grad);
  params.zero_grad();

  auto evaluate = [&] {
    Tape tape;
    return build_loss(tape).value()[0];
  };

  GradCheckResult result;
  Rng rng(options.rng_seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params[pi];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t j : coords) {
      const double saved = p.value[j];
      p.value[j] = saved + options.eps;
      const double plus = evaluate();
      p.value[j] = saved - options.eps;
      const double minus = evaluate();
      p.value[j] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double a = analytic[pi][j];
      const double err = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      ++result.coords_checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_param = p.name;
          result.worst_index = j;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace avsd::nn
