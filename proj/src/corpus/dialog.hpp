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
#include <map>
#include <string>
#include <vector>

namespace avsd::corpus {

using Tokens = std::vector<std::string>;

// Precomputed per-segment features for one modality of one video
// (e.g. AclNet class posteriors or VGGish embeddings).
struct FeatureTrack {
  std::string modality;
  std::size_t dim = 0;
  std::size_t frames = 0;
  std::vector<float> values;  // frames x dim, row-major

  float at(std::size_t frame, std::size_t d) const {
    return values[frame * dim + d];
  }
  // Temporal mean over frames, accumulated in double.
  std::vector<double> mean_pool() const;
  // Throws InvalidArgument on an empty or non-finite track.
  void validate() const;

  bool operator==(const FeatureTrack&) const = default;
};

struct Turn {
  Tokens question;
  Tokens answer;
  std::size_t turn_index = 0;

  bool operator==(const Turn&) const = default;
};

struct Dialog {
  std::string dialog_id;
  Tokens caption;
  std::vector<Turn> turns;
  std::map<std::string, FeatureTrack> features;

  // Throws SchemaError describing the first broken invariant.
  void validate() const;

  bool operator==(const Dialog&) const = default;
};

struct Corpus {
  std::vector<Dialog> dialogs;

  std::size_t turn_count() const;
  const Dialog* find(const std::string& dialog_id) const;
  // Checks per-dialog invariants plus a constant dim per modality.
  void validate() const;

  bool operator==(const Corpus&) const = default;
};

}  // namespace avsd::corpus
