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

#include <string>
#include <vector>

#include <json.hpp>

#include "model/config.hpp"

namespace avsd::pipeline {

struct CommandResult {
  nlohmann::json summary;
  bool ok = true;  // false when a check command ran but found failures
};

const std::vector<std::string>& command_names();

// Runs a subcommand on a merged config (file contents plus flag overrides).
// The whole config is validated before the filesystem is touched.
CommandResult run_command(const std::string& command, const nlohmann::json& config);

struct GradcheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_coords_per_param = 0;
  bool inject_bug = false;
  std::uint64_t seed = 0;
};

// Tiny model used by the full-model gradient check: V = 20, every width
// <= 8, two modalities, three topics.
model::ModelConfig tiny_config(model::AttentionVariant variant, model::TopicMode mode);

// Checks every (attention variant x topic mode) combination.
CommandResult run_gradcheck_suite(const GradcheckOptions& options);

}  // namespace avsd::pipeline
