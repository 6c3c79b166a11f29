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

#include "common/rng.hpp"
#include "model/avsd_model.hpp"
#include "nn/grad_check.hpp"
#include "nn/tape.hpp"
#include "pipeline/commands.hpp"

namespace avsd::pipeline {

using nlohmann::json;

model::ModelConfig tiny_config(model::AttentionVariant variant, model::TopicMode mode) {
  model::ModelConfig c;
  c.vocab_size = 20;
  c.embed_dim = 4;
  c.word_hidden = 5;
  c.sent_hidden = 6;
  c.question_hidden = 5;
  c.decoder_hidden = 6;
  c.modalities = {{"audio", 3}, {"video", 5}};
  c.modality_proj_dim = 4;
  c.av_dim = 4;
  c.attention = variant;
  c.topic_mode = mode;
  c.num_topics = mode == model::TopicMode::kNone ? 0 : 3;
  c.topic_embed_dim = 3;
  return c;
}

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) s += (x = 0.1 + rng.uniform());
  for (auto& x : v) x /= s;
  return v;
}

std::vector<int> random_ids(Rng& rng, std::size_t n) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = 4 + static_cast<int>(rng.below(16));
  return ids;
}

// Two dialogs: the first has three turns (so its last turn sees two
// history turns) and both modalities; the second lacks the video track.
std::vector<model::DialogInput> tiny_dialogs(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x67726164ULL));
  std::vector<model::DialogInput> out;
  for (std::size_t d = 0; d < 2; ++d) {
    model::DialogInput in;
    in.dialog_id = "tiny" + std::to_string(d);
    const std::size_t turns = d == 0 ? 3 : 2;
    for (std::size_t t = 0; t < turns; ++t) {
      in.questions.push_back(random_ids(rng, 2 + rng.below(2)));
      in.answers.push_back(random_ids(rng, 1 + rng.below(3)));
      in.turn_index.push_back(t);
      in.turn_theta.push_back(random_simplex(rng, 3));
      in.context_theta.push_back(random_simplex(rng, 3));
    }
    std::vector<double> audio(3), video(5);
    for (auto& x : audio) x = rng.uniform(-1.0, 1.0);
    for (auto& x : video) x = rng.uniform(-1.0, 1.0);
    in.pooled["audio"] = audio;
    if (d == 0) in.pooled["video"] = video;
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace

CommandResult run_gradcheck_suite(const GradcheckOptions& options) {
  const std::vector<model::DialogInput> dialogs = tiny_dialogs(options.seed);
  const std::vector<model::Example> examples = model::all_examples(dialogs);
  nn::debug::set_corrupt_backward(options.inject_bug);
  json combos = json::array();
  bool all_ok = true;
  double worst = 0.0;
  try {
    for (auto variant : model::all_attention_variants()) {
      for (auto mode : model::all_topic_modes()) {
        model::ModelConfig cfg = tiny_config(variant, mode);
        cfg.rng_seed = options.seed;
        model::AvsdModel m(cfg);
        nn::GradCheckOptions gopts;
        gopts.eps = options.eps;
        gopts.max_coords_per_param = options.max_coords_per_param;
        gopts.rng_seed = options.seed;
        const nn::GradCheckResult r = nn::grad_check(
            [&](nn::Tape& tape) { return m.forward_loss(tape, examples); }, m.params(), gopts);
        const bool pass = r.max_rel_error <= options.tolerance;
        all_ok = all_ok && pass;
        worst = std::max(worst, r.max_rel_error);
        combos.push_back({{"attention_variant", model::to_string(variant)},
                          {"topic_mode", model::to_string(mode)},
                          {"max_rel_error", r.max_rel_error},
                          {"worst_param", r.worst_param},
                          {"worst_index", r.worst_index},
                          {"analytic", r.worst_analytic},
                          {"numeric", r.worst_numeric},
                          {"coords_checked", r.coords_checked},
                          {"pass", pass}});
      }
    }
  } catch (...) {
    nn::debug::set_corrupt_backward(false);
    throw;
  }
  nn::debug::set_corrupt_backward(false);
  CommandResult res;
  res.ok = all_ok;
  res.summary = {{"passed", all_ok},
                 {"tolerance", options.tolerance},
                 {"eps", options.eps},
                 {"inject_bug", options.inject_bug},
                 {"max_rel_error", worst},
                 {"combinations", combos}};
  return res;
}

}  // namespace avsd::pipeline
