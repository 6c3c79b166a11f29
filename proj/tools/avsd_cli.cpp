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

// Command-line front end. Everything goes through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avsd/avsd.h"

using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
  bool dump_attention = false;
  std::vector<std::string> subsets;
  bool inject_bug = false;
  std::string resume;
};

int report_error(avsd_status status, const std::string& message) {
  std::cerr << "error [" << avsd_status_name(status) << "]: " << message << "\n";
  return static_cast<int>(status);
}

int run(const std::string& command, const Flags& f) {
  json config = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config, std::ios::binary);
    if (!in) return report_error(AVSD_IO_ERROR, "cannot read config '" + f.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      config = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      return report_error(AVSD_CONFIG_ERROR, "config '" + f.config + "' is not valid JSON: " + e.what());
    }
    if (!config.is_object()) return report_error(AVSD_CONFIG_ERROR, "config must be a JSON object");
  }
  // Flags win over the config file.
  if (!f.out.empty()) config["out"] = f.out;
  if (f.seed_set) config["rng_seed"] = f.seed;
  if (f.force) config["force"] = true;
  if (f.dump_attention) config["dump_attention"] = true;
  if (!f.subsets.empty()) config["subsets"] = f.subsets;
  if (f.inject_bug) config["inject_bug"] = true;
  if (!f.resume.empty()) config["resume"] = f.resume;

  char* summary = nullptr;
  const avsd_status st = avsd_run_command(command.c_str(), config.dump().c_str(), &summary);
  if (summary != nullptr) {
    std::cout << summary << "\n";
    avsd_string_free(summary);
  }
  if (st != AVSD_OK) return report_error(st, avsd_last_error());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual scene-aware dialog toolkit"};
  app.set_version_flag("--version", std::string(avsd_version()));
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { flags.seed = s; flags.seed_set = true; },
        "random seed");
    sub->add_flag("--force", flags.force, "overwrite a non-empty output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  common(synth);
  CLI::App* topics = app.add_subcommand("topics", "fit an LDA or guided LDA topic model");
  common(topics);
  CLI::App* train = app.add_subcommand("train", "train a dialog model");
  common(train);
  train->add_option("--resume", flags.resume, "checkpoint to resume from");
  CLI::App* generate = app.add_subcommand("generate", "generate answers from a checkpoint");
  common(generate);
  generate->add_flag("--dump-attention", flags.dump_attention, "include attention weights");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score hypotheses against a corpus");
  common(evaluate);
  evaluate->add_option("--subset", flags.subsets, "coref, audio or binary (repeatable)");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "check model gradients");
  common(gradcheck);
  gradcheck->add_flag("--inject-bug", flags.inject_bug, "corrupt one backward rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return static_cast<int>(AVSD_USAGE_ERROR);
  }
  for (CLI::App* sub : app.get_subcommands()) return run(sub->get_name(), flags);
  return static_cast<int>(AVSD_USAGE_ERROR);
}
