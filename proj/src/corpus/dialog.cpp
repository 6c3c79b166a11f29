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

#include "corpus/dialog.hpp"

#include <cmath>

#include "common/error.hpp"

namespace avsd::corpus {

std::vector<double> FeatureTrack::mean_pool() const {
  std::vector<double> pooled(dim, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t d = 0; d < dim; ++d) pooled[d] += at(f, d);
  }
  for (double& v : pooled) v /= static_cast<double>(frames);
  return pooled;
}

void FeatureTrack::validate() const {
  if (dim == 0 || frames == 0) {
    throw InvalidArgument("feature track '" + modality +
                          "' must have dim >= 1 and frames >= 1");
  }
  if (values.size() != dim * frames) {
    throw InvalidArgument("feature track '" + modality +
                          "' payload size does not match frames x dim");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidArgument("feature track '" + modality +
                            "' has a non-finite value at index " +
                            std::to_string(i));
    }
  }
}

void Dialog::validate() const {
  if (turns.empty()) {
    throw SchemaError("dialog '" + dialog_id + "' has no turns");
  }
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    if (t.question.empty()) {
      throw SchemaError("dialog '" + dialog_id + "' turn " +
                        std::to_string(i) + ": empty question");
    }
    if (t.answer.empty()) {
      throw SchemaError("dialog '" + dialog_id + "' turn " +
                        std::to_string(i) + ": empty answer");
    }
    if (i > 0 && t.turn_index <= turns[i - 1].turn_index) {
      throw SchemaError("dialog '" + dialog_id + "' turn " +
                        std::to_string(i) + ": turn_index not increasing");
    }
  }
  for (const auto& [name, track] : features) {
    if (name != track.modality) {
      throw SchemaError("dialog '" + dialog_id + "': track keyed '" + name +
                        "' declares modality '" + track.modality + "'");
    }
  }
}

std::size_t Corpus::turn_count() const {
  std::size_t n = 0;
  for (const Dialog& d : dialogs) n += d.turns.size();
  return n;
}

const Dialog* Corpus::find(const std::string& dialog_id) const {
  for (const Dialog& d : dialogs) {
    if (d.dialog_id == dialog_id) return &d;
  }
  return nullptr;
}

void Corpus::validate() const {
  std::map<std::string, std::size_t> dims;
  for (const Dialog& d : dialogs) {
    d.validate();
    for (const auto& [name, track] : d.features) {
      auto [it, inserted] = dims.emplace(name, track.dim);
      if (!inserted && it->second != track.dim) {
        throw SchemaError("modality '" + name + "' has dim " +
                          std::to_string(track.dim) + " in dialog '" +
                          d.dialog_id + "' but " + std::to_string(it->second) +
                          " elsewhere");
      }
    }
  }
}

}  // namespace avsd::corpus
