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

#include "corpus/dialog.hpp"

namespace avsd::corpus {

struct SynthSpec {
  std::size_t n_dialogs = 32;
  std::size_t n_turns_per_dialog = 3;
  std::size_t n_topic_clusters = 2;
  // Questions at turn t >= gap ask about the object introduced gap turns
  // earlier through a pronoun. 0 disables coreference questions.
  std::size_t coref_dependency_gap = 0;
  double binary_fraction = 0.0;
  // When > 0 every dialog carries a one-hot "audio" track and one
  // "what do you hear ?" question answered by its class.
  std::size_t audio_event_classes = 0;
  std::size_t audio_frames = 4;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws InvalidArgument naming the field
};

// Activity vocabulary of one cluster. Content words of distinct clusters
// are disjoint.
struct ClusterLexicon {
  std::string room;
  std::vector<std::string> objects;
  std::vector<std::string> verbs;   // verbs[i] is what one does to objects[i]
  std::vector<std::string> colors;  // colors[i] is the color of objects[i]

  std::vector<std::string> content_words() const;  // room, objects, verbs
};

ClusterLexicon cluster_lexicon(std::size_t cluster);
std::string audio_event_name(std::size_t cls);

enum class SynthQuestionKind { kAction, kRoom, kCoref, kAudio };

struct SynthResult {
  Corpus corpus;
  std::vector<std::size_t> cluster;      // per dialog
  std::vector<std::size_t> audio_class;  // per dialog, when audio is enabled
  // per dialog, per turn
  std::vector<std::vector<SynthQuestionKind>> kinds;
};

SynthResult synthesize_labeled(const SynthSpec& spec);
Corpus synthesize_corpus(const SynthSpec& spec);

}  // namespace avsd::corpus
