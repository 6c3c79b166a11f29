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

#include "model/config.hpp"

#include <map>
#include <set>

#include "common/error.hpp"

namespace avsd::model {

using nlohmann::json;

namespace {

template <typename E>
E parse_enum(const std::string& what, const std::string& name,
             const std::vector<std::pair<const char*, E>>& table) {
  std::string valid;
  for (const auto& [n, v] : table) {
    if (name == n) return v;
    valid += valid.empty() ? "" : ", ";
    valid += n;
  }
  throw InvalidArgument("unknown " + what + " '" + name + "' (valid: " + valid + ")");
}

const std::vector<std::pair<const char*, AttentionVariant>> kVariants = {
    {"none", AttentionVariant::kNone},
    {"word_all", AttentionVariant::kWordAllStates},
    {"word_last", AttentionVariant::kWordLastStates},
    {"sent_all", AttentionVariant::kSentAllStates},
    {"sent_all_av", AttentionVariant::kSentAllStatesPlusAv},
};
const std::vector<std::pair<const char*, TopicMode>> kModes = {
    {"none", TopicMode::kNone},
    {"decoder_feature", TopicMode::kDecoderFeature},
    {"topic_embedding", TopicMode::kTopicEmbedding},
    {"history_feature", TopicMode::kHistoryFeature},
};
const std::vector<std::pair<const char*, TopicSource>> kSources = {
    {"question", TopicSource::kQuestion},
    {"history", TopicSource::kHistory},
    {"question+history", TopicSource::kQuestionHistory},
};

template <typename E>
std::string name_of(E v, const std::vector<std::pair<const char*, E>>& table) {
  for (const auto& [n, e] : table) {
    if (e == v) return n;
  }
  return "?";
}

}  // namespace

AttentionVariant parse_attention_variant(const std::string& name) {
  return parse_enum("attention_variant", name, kVariants);
}
TopicMode parse_topic_mode(const std::string& name) {
  return parse_enum("topic_mode", name, kModes);
}
TopicSource parse_topic_source(const std::string& name) {
  return parse_enum("topic_source", name, kSources);
}
std::string to_string(AttentionVariant v) { return name_of(v, kVariants); }
std::string to_string(TopicMode m) { return name_of(m, kModes); }
std::string to_string(TopicSource s) { return name_of(s, kSources); }

const std::vector<AttentionVariant>& all_attention_variants() {
  static const std::vector<AttentionVariant> v = {
      AttentionVariant::kNone, AttentionVariant::kWordAllStates,
      AttentionVariant::kWordLastStates, AttentionVariant::kSentAllStates,
      AttentionVariant::kSentAllStatesPlusAv};
  return v;
}

const std::vector<TopicMode>& all_topic_modes() {
  static const std::vector<TopicMode> m = {
      TopicMode::kNone, TopicMode::kDecoderFeature, TopicMode::kTopicEmbedding,
      TopicMode::kHistoryFeature};
  return m;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v < 1) throw InvalidArgument(std::string(field) + " must be >= 1");
  };
  positive(vocab_size, "vocab_size");
  positive(embed_dim, "embed_dim");
  positive(word_hidden, "word_hidden");
  positive(sent_hidden, "sent_hidden");
  positive(question_hidden, "question_hidden");
  positive(decoder_hidden, "decoder_hidden");
  if (!modalities.empty()) {
    positive(modality_proj_dim, "modality_proj_dim");
    positive(av_dim, "av_dim");
  }
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.name.empty()) throw InvalidArgument("modality name must be non-empty");
    if (!names.insert(m.name).second) {
      throw InvalidArgument("duplicate modality '" + m.name + "'");
    }
    if (m.dim < 1) throw InvalidArgument("modality '" + m.name + "' dim must be >= 1");
  }
  if (attention == AttentionVariant::kSentAllStatesPlusAv && modalities.empty()) {
    throw InvalidArgument("attention_variant sent_all_av needs at least one modality");
  }
  if (uses_topics()) positive(num_topics, "num_topics");
  if (topic_mode == TopicMode::kTopicEmbedding) positive(topic_embed_dim, "topic_embed_dim");
}

json to_json(const ModelConfig& c) {
  json mods = json::array();
  for (const auto& m : c.modalities) mods.push_back({{"name", m.name}, {"dim", m.dim}});
  return {{"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},
          {"word_hidden", c.word_hidden},
          {"sent_hidden", c.sent_hidden},
          {"question_hidden", c.question_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"modalities", mods},
          {"modality_proj_dim", c.modality_proj_dim},
          {"av_dim", c.av_dim},
          {"attention_variant", to_string(c.attention)},
          {"topic_mode", to_string(c.topic_mode)},
          {"num_topics", c.num_topics},
          {"topic_embed_dim", c.topic_embed_dim},
          {"topic_source", to_string(c.topic_source)},
          {"fold_in_iterations", c.fold_in_iterations},
          {"embeddings_trainable", c.embeddings_trainable},
          {"rng_seed", c.rng_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::set<std::string> known = {
      "vocab_size", "embed_dim", "word_hidden", "sent_hidden", "question_hidden",
      "decoder_hidden", "modalities", "modality_proj_dim", "av_dim",
      "attention_variant", "topic_mode", "num_topics", "topic_embed_dim",
      "topic_source", "fold_in_iterations", "embeddings_trainable", "rng_seed"};
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) throw ConfigError("unknown model config key '" + key + "'");
  }
  ModelConfig c;
  try {
    auto size = [&](const char* key, std::size_t& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::size_t>();
    };
    size("vocab_size", c.vocab_size);
    size("embed_dim", c.embed_dim);
    size("word_hidden", c.word_hidden);
    size("sent_hidden", c.sent_hidden);
    size("question_hidden", c.question_hidden);
    size("decoder_hidden", c.decoder_hidden);
    size("modality_proj_dim", c.modality_proj_dim);
    size("av_dim", c.av_dim);
    size("num_topics", c.num_topics);
    size("topic_embed_dim", c.topic_embed_dim);
    size("fold_in_iterations", c.fold_in_iterations);
    if (j.contains("modalities")) {
      for (const auto& m : j.at("modalities")) {
        c.modalities.push_back({m.at("name").get<std::string>(), m.at("dim").get<std::size_t>()});
      }
    }
    if (j.contains("attention_variant")) {
      c.attention = parse_attention_variant(j.at("attention_variant").get<std::string>());
    }
    if (j.contains("topic_mode")) c.topic_mode = parse_topic_mode(j.at("topic_mode").get<std::string>());
    if (j.contains("topic_source")) {
      c.topic_source = parse_topic_source(j.at("topic_source").get<std::string>());
    }
    if (j.contains("embeddings_trainable")) {
      c.embeddings_trainable = j.at("embeddings_trainable").get<bool>();
    }
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string first_difference(const ModelConfig& a, const ModelConfig& b) {
  const json ja = to_json(a);
  const json jb = to_json(b);
  for (const auto& [key, value] : ja.items()) {
    if (jb.at(key) != value) return key;
  }
  return "";
}

}  // namespace avsd::model
