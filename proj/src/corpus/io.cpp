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

#include "corpus/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "corpus/tokenizer.hpp"

namespace avsd::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kTrackMagic[4] = {'F', 'T', 'R', 'K'};
constexpr std::uint32_t kTrackVersion = 1;
constexpr std::size_t kTrackHeader = 16;

std::uint32_t read_u32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

Tokens tokens_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + " must be an array of tokens");
  Tokens out;
  for (const auto& t : j) {
    if (!t.is_string()) throw SchemaError(what + " must contain strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<unsigned char> read_binary_file(const fs::path& path) {
  const std::string s = read_file(path);
  return {s.begin(), s.end()};
}

void write_file(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- FTRK ----

FeatureTrack decode_feature_track(const std::vector<unsigned char>& bytes,
                                  const std::string& modality) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTrackMagic, 4) != 0) {
    throw FormatError("bad FTRK magic", 0);
  }
  if (bytes.size() < kTrackHeader) {
    throw FormatError("truncated FTRK header", bytes.size());
  }
  if (read_u32(bytes, 4) != kTrackVersion) {
    throw FormatError("unsupported FTRK version " +
                          std::to_string(read_u32(bytes, 4)),
                      4);
  }
  FeatureTrack track;
  track.modality = modality;
  track.dim = read_u32(bytes, 8);
  track.frames = read_u32(bytes, 12);
  if (track.dim == 0) throw FormatError("FTRK dim must be >= 1", 8);
  if (track.frames == 0) throw FormatError("FTRK frames must be >= 1", 12);
  const std::uint64_t count =
      static_cast<std::uint64_t>(track.dim) * track.frames;
  const std::uint64_t expected = kTrackHeader + 4 * count;
  if (bytes.size() < expected) {
    throw FormatError("truncated FTRK payload: expected " +
                          std::to_string(expected) + " bytes",
                      bytes.size());
  }
  if (bytes.size() > expected) {
    throw FormatError("trailing bytes after FTRK payload", expected);
  }
  track.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = kTrackHeader + 4 * i;
    const std::uint32_t raw = read_u32(bytes, at);
    float v;
    std::memcpy(&v, &raw, sizeof v);
    if (!std::isfinite(v)) throw FormatError("non-finite FTRK value", at);
    track.values[i] = v;
  }
  return track;
}

FeatureTrack load_feature_track(const fs::path& path,
                                const std::string& modality) {
  return decode_feature_track(read_binary_file(path), modality);
}

std::vector<unsigned char> encode_feature_track(const FeatureTrack& track) {
  track.validate();
  std::vector<unsigned char> out(kTrackMagic, kTrackMagic + 4);
  put_u32(out, kTrackVersion);
  put_u32(out, static_cast<std::uint32_t>(track.dim));
  put_u32(out, static_cast<std::uint32_t>(track.frames));
  out.reserve(out.size() + 4 * track.values.size());
  for (float v : track.values) {
    std::uint32_t raw;
    std::memcpy(&raw, &v, sizeof raw);
    put_u32(out, raw);
  }
  return out;
}

void save_feature_track(const FeatureTrack& track, const fs::path& path) {
  const auto bytes = encode_feature_track(track);
  write_file(path, std::string(bytes.begin(), bytes.end()));
}

// ---------------------------------------------------------------- AVSD ----

Corpus parse_avsd_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  if (!root.is_object() || !root.contains("dialogs") ||
      !root["dialogs"].is_array()) {
    throw SchemaError("top level must be an object with a \"dialogs\" array");
  }
  Corpus corpus;
  std::size_t index = 0;
  for (const json& entry : root["dialogs"]) {
    const std::string where = "dialog #" + std::to_string(index);
    if (!entry.is_object()) throw SchemaError(where + " is not an object");
    if (!entry.contains("image_id") || !entry["image_id"].is_string()) {
      throw SchemaError(where + " lacks a string \"image_id\"");
    }
    Dialog d;
    d.dialog_id = entry["image_id"].get<std::string>();
    if (!entry.contains("dialog") || !entry["dialog"].is_array()) {
      throw SchemaError("dialog '" + d.dialog_id +
                        "' is missing the \"dialog\" array");
    }
    if (entry.contains("caption") && entry["caption"].is_string()) {
      d.caption = tokenize(entry["caption"].get<std::string>());
    } else if (entry.contains("summary") && entry["summary"].is_string()) {
      d.caption = tokenize(entry["summary"].get<std::string>());
    }
    std::size_t t = 0;
    for (const json& qa : entry["dialog"]) {
      if (!qa.is_object() || !qa.contains("question") ||
          !qa.contains("answer") || !qa["question"].is_string() ||
          !qa["answer"].is_string()) {
        throw SchemaError("dialog '" + d.dialog_id + "' turn " +
                          std::to_string(t) +
                          ": needs string \"question\" and \"answer\"");
      }
      Turn turn;
      turn.turn_index = t++;
      turn.question = tokenize(qa["question"].get<std::string>());
      turn.answer = tokenize(qa["answer"].get<std::string>());
      d.turns.push_back(std::move(turn));
    }
    d.validate();
    corpus.dialogs.push_back(std::move(d));
    ++index;
  }
  return corpus;
}

Corpus load_avsd_json(const fs::path& path) {
  return parse_avsd_json(read_file(path));
}

// -------------------------------------------------------------- JSONL ----

void save_corpus_jsonl(const Corpus& corpus, const fs::path& path) {
  const fs::path base = path.has_parent_path() ? path.parent_path() : ".";
  std::string out;
  for (const Dialog& d : corpus.dialogs) {
    json j;
    j["dialog_id"] = d.dialog_id;
    j["caption"] = d.caption;
    json turns = json::array();
    for (const Turn& t : d.turns) {
      turns.push_back({{"turn_index", t.turn_index},
                       {"question", t.question},
                       {"answer", t.answer}});
    }
    j["turns"] = std::move(turns);
    json feats = json::object();
    for (const auto& [name, track] : d.features) {
      const fs::path rel =
          fs::path("features") / (d.dialog_id + "." + name + ".ftrk");
      save_feature_track(track, base / rel);
      feats[name] = rel.generic_string();
    }
    j["features"] = std::move(feats);
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

namespace {

Dialog dialog_from_json(const json& j, const fs::path& base, const std::string& where) {
  if (!j.is_object() || !j.contains("dialog_id") ||
      !j["dialog_id"].is_string() || !j.contains("turns") ||
      !j["turns"].is_array()) {
    throw SchemaError(where + ": needs \"dialog_id\" and \"turns\"");
  }
  Dialog d;
  d.dialog_id = j["dialog_id"].get<std::string>();
  if (j.contains("caption")) d.caption = tokens_from_json(j["caption"], where + " caption");
  for (const json& t : j["turns"]) {
    Turn turn;
    if (!t.is_object() || !t.contains("question") || !t.contains("answer")) {
      throw SchemaError("dialog '" + d.dialog_id +
                        "': turn lacks question/answer");
    }
    turn.turn_index = t.value("turn_index", d.turns.size());
    turn.question = tokens_from_json(t["question"], where + " question");
    turn.answer = tokens_from_json(t["answer"], where + " answer");
    d.turns.push_back(std::move(turn));
  }
  if (j.contains("features")) {
    for (const auto& [name, rel] : j["features"].items()) {
      if (!rel.is_string()) {
        throw SchemaError(where + ": feature path must be a string");
      }
      d.features.emplace(name,
                         load_feature_track(base / rel.get<std::string>(), name));
    }
  }
  d.validate();
  return d;
}

}  // namespace

Dialog parse_dialog_line(const std::string& line, const fs::path& base) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed dialog JSON: ") + e.what(),
                      e.byte > 0 ? e.byte - 1 : 0);
  }
  return dialog_from_json(j, base, "dialog");
}

Corpus load_corpus_jsonl(const fs::path& path) {
  const fs::path base = path.has_parent_path() ? path.parent_path() : ".";
  std::istringstream in(read_file(path));
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("malformed JSON on line " + std::to_string(line_no) +
                            ": " + e.what(),
                        line_offset + (e.byte > 0 ? e.byte - 1 : 0));
    }
    corpus.dialogs.push_back(dialog_from_json(j, base, "line " + std::to_string(line_no)));
  }
  corpus.validate();
  return corpus;
}

std::size_t attach_feature_tracks(Corpus& corpus, const std::string& modality,
                                  const std::string& pattern) {
  const auto slot = pattern.find("{id}");
  if (slot == std::string::npos) {
    throw InvalidArgument("feature pattern '" + pattern +
                          "' must contain {id}");
  }
  std::size_t attached = 0;
  for (Dialog& d : corpus.dialogs) {
    std::string p = pattern;
    p.replace(slot, 4, d.dialog_id);
    if (!fs::exists(p)) continue;
    d.features[modality] = load_feature_track(p, modality);
    ++attached;
  }
  corpus.validate();
  return attached;
}

// ------------------------------------------------------- word vectors ----

WordVectors load_word_vectors(const fs::path& path, const Vocab& vocab) {
  std::istringstream in(read_file(path));
  WordVectors wv;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<TokenId, std::vector<double>>> found;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ls >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw FormatError("bad vector component '" + field + "' on line " +
                              std::to_string(line_no),
                          line_no);
      }
      values.push_back(v);
    }
    if (values.empty()) {
      throw FormatError("no vector components on line " +
                            std::to_string(line_no),
                        line_no);
    }
    if (wv.dim == 0) {
      wv.dim = values.size();
    } else if (values.size() != wv.dim) {
      throw FormatError("inconsistent vector dimension " +
                            std::to_string(values.size()) + " (expected " +
                            std::to_string(wv.dim) + ") on line " +
                            std::to_string(line_no),
                        line_no);
    }
    if (vocab.contains(token) && vocab.id(token) >= static_cast<TokenId>(Vocab::kReserved)) {
      found.emplace_back(vocab.id(token), std::move(values));
    }
  }
  if (wv.dim == 0) throw FormatError("word-vector file is empty", 0);
  wv.rows.assign(vocab.size() * wv.dim, 0.0);
  wv.present.assign(vocab.size(), false);
  for (auto& [id, values] : found) {
    wv.present[static_cast<std::size_t>(id)] = true;
    std::copy(values.begin(), values.end(),
              wv.rows.begin() + static_cast<std::ptrdiff_t>(id * wv.dim));
  }
  wv.matched = static_cast<std::size_t>(
      std::count(wv.present.begin(), wv.present.end(), true));
  return wv;
}

}  // namespace avsd::corpus
