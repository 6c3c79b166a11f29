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
#include <string>
#include <vector>

#include <json.hpp>

namespace avsd::model {

// Which memory the decoder attends to at every step.
enum class AttentionVariant {
  kNone,                 // no attention; context is identically zero
  kWordAllStates,        // every word-LSTM output state of every history turn
  kWordLastStates,       // last word-LSTM state of each history turn
  kSentAllStates,        // sentence-LSTM output states
  kSentAllStatesPlusAv,  // sentence states plus the fused AV vector as a row
};

// How topic distributions enter the model.
enum class TopicMode {
  kNone,
  kDecoderFeature,  // theta appended to every decoder input
  kTopicEmbedding,  // embedding of argmax(theta) joins the decoder init
  kHistoryFeature,  // per-turn theta appended to the sentence-LSTM input
};

// Text the context theta is inferred from.
enum class TopicSource { kQuestion, kHistory, kQuestionHistory };

AttentionVariant parse_attention_variant(const std::string& name);
TopicMode parse_topic_mode(const std::string& name);
TopicSource parse_topic_source(const std::string& name);
std::string to_string(AttentionVariant v);
std::string to_string(TopicMode m);
std::string to_string(TopicSource s);

const std::vector<AttentionVariant>& all_attention_variants();
const std::vector<TopicMode>& all_topic_modes();

struct ModalitySpec {
  std::string name;
  std::size_t dim = 0;

  bool operator==(const ModalitySpec&) const = default;
};

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t word_hidden = 128;
  std::size_t sent_hidden = 128;
  std::size_t question_hidden = 128;
  std::size_t decoder_hidden = 128;
  std::vector<ModalitySpec> modalities;
  std::size_t modality_proj_dim = 64;
  std::size_t av_dim = 64;
  AttentionVariant attention = AttentionVariant::kNone;
  TopicMode topic_mode = TopicMode::kNone;
  std::size_t num_topics = 0;
  std::size_t topic_embed_dim = 16;
  TopicSource topic_source = TopicSource::kQuestionHistory;
  std::size_t fold_in_iterations = 20;
  bool embeddings_trainable = true;
  std::uint64_t rng_seed = 0;

  bool uses_topics() const { return topic_mode != TopicMode::kNone; }
  // Throws InvalidArgument on any broken invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);
// Names the first field that differs, or returns "".
std::string first_difference(const ModelConfig& a, const ModelConfig& b);

}  // namespace avsd::model
