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

#include "corpus/synth.hpp"

#include <array>
#include <cstdio>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/tokenizer.hpp"

namespace avsd::corpus {

namespace {

struct Theme {
  const char* room;
  std::array<const char*, 4> objects;
  std::array<const char*, 4> verbs;
};

constexpr std::array<Theme, 8> kThemes = {{
    {"kitchen", {"pan", "onion", "kettle", "dough"},
     {"stirring", "chopping", "heating", "kneading"}},
    {"hallway", {"broom", "mop", "rag", "bucket"},
     {"sweeping", "wringing", "folding", "emptying"}},
    {"lounge", {"remote", "guitar", "magazine", "console"},
     {"pressing", "strumming", "flipping", "playing"}},
    {"bedroom", {"book", "lamp", "pillow", "blanket"},
     {"reading", "adjusting", "fluffing", "smoothing"}},
    {"garage", {"dumbbell", "rope", "mat", "bike"},
     {"lifting", "skipping", "unrolling", "pedaling"}},
    {"basement", {"shirt", "sock", "basket", "towel"},
     {"ironing", "sorting", "carrying", "hanging"}},
    {"study", {"laptop", "pen", "stapler", "phone"},
     {"typing", "clicking", "loading", "dialing"}},
    {"yard", {"plant", "shovel", "hose", "flower"},
     {"watering", "swinging", "coiling", "trimming"}},
}};

constexpr std::array<const char*, 6> kColors = {"red",   "blue",  "green",
                                                "white", "black", "yellow"};

constexpr std::array<const char*, 8> kSounds = {
    "dog", "doorbell", "rain", "baby", "clock", "siren", "bird", "engine"};

struct Person {
  const char* noun;
  const char* pronoun;
};

}  // namespace

void SynthSpec::validate() const {
  if (n_dialogs > 0 && n_turns_per_dialog < 1) {
    throw InvalidArgument("n_turns_per_dialog must be >= 1");
  }
  if (n_topic_clusters < 1) {
    throw InvalidArgument("n_topic_clusters must be >= 1");
  }
  if (coref_dependency_gap > 0 &&
      coref_dependency_gap >= n_turns_per_dialog) {
    throw InvalidArgument(
        "coref_dependency_gap must be < n_turns_per_dialog");
  }
  if (!(binary_fraction >= 0.0 && binary_fraction <= 1.0)) {
    throw InvalidArgument("binary_fraction must lie in [0, 1]");
  }
  if (audio_event_classes > 0 && audio_frames < 1) {
    throw InvalidArgument("audio_frames must be >= 1");
  }
}

std::vector<std::string> ClusterLexicon::content_words() const {
  std::vector<std::string> out{room};
  out.insert(out.end(), objects.begin(), objects.end());
  out.insert(out.end(), verbs.begin(), verbs.end());
  return out;
}

ClusterLexicon cluster_lexicon(std::size_t cluster) {
  ClusterLexicon lex;
  if (cluster < kThemes.size()) {
    const Theme& t = kThemes[cluster];
    lex.room = t.room;
    lex.objects.assign(t.objects.begin(), t.objects.end());
    lex.verbs.assign(t.verbs.begin(), t.verbs.end());
  } else {
    const std::string c = std::to_string(cluster);
    lex.room = "room" + c;
    for (int i = 0; i < 4; ++i) {
      lex.objects.push_back("thing" + c + "x" + std::to_string(i));
      lex.verbs.push_back("handling" + c + "x" + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < lex.objects.size(); ++i) {
    lex.colors.push_back(kColors[(cluster * 5 + i * 7 + i / 2) % kColors.size()]);
  }
  return lex;
}

std::string audio_event_name(std::size_t cls) {
  if (cls < kSounds.size()) return kSounds[cls];
  return "sound" + std::to_string(cls);
}

SynthResult synthesize_labeled(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  SynthResult out;
  const std::size_t n = spec.n_turns_per_dialog;
  const std::size_t gap = spec.coref_dependency_gap;

  for (std::size_t di = 0; di < spec.n_dialogs; ++di) {
    Dialog d;
    char id[32];
    std::snprintf(id, sizeof id, "synth%05zu", di);
    d.dialog_id = id;

    const std::size_t cluster = rng.below(spec.n_topic_clusters);
    const ClusterLexicon lex = cluster_lexicon(cluster);
    const Person person =
        rng.bernoulli(0.5) ? Person{"man", "he"} : Person{"woman", "she"};
    const std::string noun = person.noun;
    const std::string pron = person.pronoun;

    // Question kinds. Turns referenced by a later coreference question
    // must introduce an object.
    std::vector<SynthQuestionKind> kinds(n, SynthQuestionKind::kAction);
    auto referenced = [&](std::size_t t) { return gap > 0 && t + gap < n; };
    for (std::size_t t = 0; t < n; ++t) {
      if (gap > 0 && t >= gap) {
        kinds[t] = SynthQuestionKind::kCoref;
      } else if (t >= 1 && !referenced(t) && rng.bernoulli(0.5)) {
        kinds[t] = SynthQuestionKind::kRoom;
      }
    }
    std::size_t audio_class = 0;
    if (spec.audio_event_classes > 0) {
      audio_class = rng.below(spec.audio_event_classes);
      std::size_t slot = n - 1;
      for (std::size_t t = n; t-- > 0;) {
        if (!referenced(t) && kinds[t] != SynthQuestionKind::kCoref) {
          slot = t;
          break;
        }
      }
      kinds[slot] = SynthQuestionKind::kAudio;
    }

    // Objects introduced by action turns; coreference turns inherit the
    // object of the turn gap steps back.
    std::vector<std::size_t> object_of(n, 0);
    std::vector<bool> used(lex.objects.size(), false);
    std::size_t used_count = 0;

    const std::size_t caption_obj = rng.below(lex.objects.size());
    d.caption = tokenize("a " + noun + " is " + lex.verbs[caption_obj] +
                         " the " + lex.objects[caption_obj] + " in the " +
                         lex.room + " .");

    for (std::size_t t = 0; t < n; ++t) {
      const bool binary = kinds[t] != SynthQuestionKind::kAudio &&
                          rng.bernoulli(spec.binary_fraction);
      const bool yes = binary && rng.bernoulli(0.5);
      std::string q;
      std::string a;
      switch (kinds[t]) {
        case SynthQuestionKind::kAction: {
          if (used_count == used.size()) {
            used.assign(used.size(), false);
            used_count = 0;
          }
          std::size_t o;
          do {
            o = rng.below(lex.objects.size());
          } while (used[o]);
          used[o] = true;
          ++used_count;
          object_of[t] = o;
          const std::string stmt =
              pron + " is " + lex.verbs[o] + " the " + lex.objects[o];
          if (binary) {
            std::size_t v = o;
            if (!yes) v = (o + 1 + rng.below(lex.verbs.size() - 1)) % lex.verbs.size();
            q = "is the " + noun + " " + lex.verbs[v] + " the " +
                lex.objects[o] + " ?";
            a = (yes ? "yes , " : "no , ") + stmt;
          } else {
            q = "what is the " + noun + " doing with the " + lex.objects[o] +
                " ?";
            a = stmt;
          }
          break;
        }
        case SynthQuestionKind::kRoom: {
          const std::string stmt = "the " + noun + " is in the " + lex.room;
          if (binary) {
            std::string asked = lex.room;
            if (!yes) {
              const std::size_t other =
                  spec.n_topic_clusters > 1
                      ? (cluster + 1 + rng.below(spec.n_topic_clusters - 1)) %
                            spec.n_topic_clusters
                      : cluster + 1;
              asked = cluster_lexicon(other).room;
            }
            q = "is the " + noun + " in the " + asked + " ?";
            a = (yes ? "yes , " : "no , ") + stmt;
          } else {
            q = "which room is the " + noun + " in ?";
            a = stmt;
          }
          break;
        }
        case SynthQuestionKind::kCoref: {
          const std::size_t o = object_of[t - gap];
          object_of[t] = o;
          const std::string stmt =
              "the " + lex.objects[o] + " is " + lex.colors[o];
          if (binary) {
            std::string asked = lex.colors[o];
            if (!yes) {
              std::size_t truth = 0;
              while (kColors[truth] != lex.colors[o]) ++truth;
              const std::size_t c =
                  (truth + 1 + rng.below(kColors.size() - 1)) % kColors.size();
              asked = kColors[c];
            }
            q = "is it " + asked + " ?";
            a = (yes ? "yes , " : "no , ") + stmt;
          } else {
            q = "what color is it ?";
            a = stmt;
          }
          break;
        }
        case SynthQuestionKind::kAudio:
          q = "what do you hear ?";
          a = "i hear a " + audio_event_name(audio_class);
          break;
      }
      Turn turn;
      turn.turn_index = t;
      turn.question = tokenize(q);
      turn.answer = tokenize(a);
      d.turns.push_back(std::move(turn));
    }

    if (spec.audio_event_classes > 0) {
      FeatureTrack track;
      track.modality = "audio";
      track.dim = spec.audio_event_classes;
      track.frames = spec.audio_frames;
      track.values.assign(track.dim * track.frames, 0.0f);
      for (std::size_t f = 0; f < track.frames; ++f) {
        track.values[f * track.dim + audio_class] = 1.0f;
      }
      d.features.emplace("audio", std::move(track));
    }

    out.corpus.dialogs.push_back(std::move(d));
    out.cluster.push_back(cluster);
    out.audio_class.push_back(audio_class);
    out.kinds.push_back(std::move(kinds));
  }
  return out;
}

Corpus synthesize_corpus(const SynthSpec& spec) {
  return synthesize_labeled(spec).corpus;
}

}  // namespace avsd::corpus
