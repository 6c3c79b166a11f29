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

#include "model/prepare.hpp"

#include "common/error.hpp"
#include "common/rng.hpp"

namespace avsd::model {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void append(corpus::Tokens& dst, const corpus::Tokens& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

corpus::Tokens topic_context(const corpus::Dialog& d, std::size_t turn, TopicSource source) {
  corpus::Tokens doc;
  if (source != TopicSource::kQuestion) {
    for (std::size_t t = 0; t < turn; ++t) {
      append(doc, d.turns[t].question);
      append(doc, d.turns[t].answer);
    }
  }
  if (source != TopicSource::kHistory) append(doc, d.turns[turn].question);
  return doc;
}

std::vector<DialogInput> prepare_dialogs(const corpus::Corpus& corpus,
                                         const corpus::Vocab& vocab,
                                         const ModelConfig& config,
                                         const topics::TopicModel* topics) {
  if (vocab.size() != config.vocab_size) {
    throw InvalidArgument("vocabulary has " + std::to_string(vocab.size()) +
                          " tokens, model config expects " + std::to_string(config.vocab_size));
  }
  if (config.uses_topics()) {
    if (topics == nullptr) {
      throw InvalidArgument("topic_mode " + to_string(config.topic_mode) + " needs a topic model");
    }
    if (topics->num_topics() != config.num_topics) {
      throw InvalidArgument("topic model has " + std::to_string(topics->num_topics()) +
                            " topics, model config expects " + std::to_string(config.num_topics));
    }
  }
  std::vector<DialogInput> out;
  out.reserve(corpus.dialogs.size());
  for (const corpus::Dialog& d : corpus.dialogs) {
    DialogInput in;
    in.dialog_id = d.dialog_id;
    const std::uint64_t base = mix_seed(config.rng_seed, fnv1a(d.dialog_id));
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const corpus::Turn& turn = d.turns[t];
      in.questions.push_back(vocab.encode(turn.question));
      in.answers.push_back(vocab.encode(turn.answer));
      in.turn_index.push_back(turn.turn_index);
      if (config.topic_mode == TopicMode::kHistoryFeature) {
        corpus::Tokens qa = turn.question;
        append(qa, turn.answer);
        in.turn_theta.push_back(
            topics::infer_theta(*topics, qa, config.fold_in_iterations, mix_seed(base, 2 * t)));
      }
      if (config.topic_mode == TopicMode::kDecoderFeature ||
          config.topic_mode == TopicMode::kTopicEmbedding) {
        in.context_theta.push_back(topics::infer_theta(*topics,
                                                       topic_context(d, t, config.topic_source),
                                                       config.fold_in_iterations,
                                                       mix_seed(base, 2 * t + 1)));
      }
    }
    for (const ModalitySpec& m : config.modalities) {
      auto it = d.features.find(m.name);
      if (it == d.features.end()) continue;
      if (it->second.dim != m.dim) {
        throw InvalidArgument("dialog '" + d.dialog_id + "' modality '" + m.name + "' has dim " +
                              std::to_string(it->second.dim) + ", model expects " +
                              std::to_string(m.dim));
      }
      in.pooled[m.name] = it->second.mean_pool();
    }
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace avsd::model
