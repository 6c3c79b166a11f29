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
#include <filesystem>
#include <string>
#include <vector>

#include "corpus/dialog.hpp"
#include "corpus/vocab.hpp"

namespace avsd::corpus {

// FTRK feature-track files: "FTRK", u32 version (=1), u32 dim, u32 frames,
// then frames*dim f32 values, all little-endian, row-major.
FeatureTrack load_feature_track(const std::filesystem::path& path,
                                const std::string& modality = "");
FeatureTrack decode_feature_track(const std::vector<unsigned char>& bytes,
                                  const std::string& modality = "");
std::vector<unsigned char> encode_feature_track(const FeatureTrack& track);
void save_feature_track(const FeatureTrack& track,
                        const std::filesystem::path& path);

// AVSD challenge JSON: {"dialogs": [{"image_id", "caption"?, "summary"?,
// "dialog": [{"question", "answer"}]}]}.
Corpus load_avsd_json(const std::filesystem::path& path);
Corpus parse_avsd_json(const std::string& text);

// JSON-lines fixture format, one dialog per line. Feature tracks are written
// as FTRK files under <dir>/features/ and referenced by relative path.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus_jsonl(const std::filesystem::path& path);
// One line of that format; feature paths resolve against `base`.
Dialog parse_dialog_line(const std::string& line, const std::filesystem::path& base);

// Attaches <pattern with {id} replaced by dialog_id> to every dialog whose
// file exists. Returns the number of tracks attached.
std::size_t attach_feature_tracks(Corpus& corpus, const std::string& modality,
                                  const std::string& pattern);

struct WordVectors {
  std::size_t dim = 0;
  std::vector<double> rows;  // vocab.size() x dim; zero rows for absent tokens
  std::vector<bool> present;  // per vocab id
  std::size_t matched = 0;
};

// Text format: one line per token, "token v1 ... vD".
WordVectors load_word_vectors(const std::filesystem::path& path,
                              const Vocab& vocab);

std::string read_file(const std::filesystem::path& path);
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);

}  // namespace avsd::corpus
