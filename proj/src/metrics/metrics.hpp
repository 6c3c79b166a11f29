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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus/dialog.hpp"

namespace avsd::metrics {

using corpus::Tokens;

struct EvalPair {
  std::string dialog_id;
  std::size_t turn_index = 0;
  Tokens question;
  Tokens hypothesis;
  std::vector<Tokens> references;  // at least one
};

// Corpus-level BLEU-1..max_n from pooled clipped n-gram counts.
std::vector<double> bleu(const std::vector<EvalPair>& pairs, std::size_t max_n = 4);

// LCS-based F measure with beta = 1.2, best reference per pair, mean over pairs.
double rouge_l_pair(const Tokens& hyp, const Tokens& ref);
double rouge_l(const std::vector<EvalPair>& pairs);

// TF-IDF n-gram cosine (n = 1..4) with reference sets as IDF documents,
// times 10, averaged over pairs. Adds a message to `warnings` when the IDF
// is degenerate (fewer than two pairs or identical reference sets).
std::vector<double> cider_per_pair(const std::vector<EvalPair>& pairs,
                                   std::vector<std::string>* warnings = nullptr);
double cider(const std::vector<EvalPair>& pairs, std::vector<std::string>* warnings = nullptr);

// Exact-match METEOR without synonym or stem tables.
double meteor_lite_pair(const Tokens& hyp, const Tokens& ref);
double meteor_lite(const std::vector<EvalPair>& pairs);

enum class BinaryClass { kYes, kNo, kOther };
BinaryClass classify_binary(const Tokens& answer);

struct BinaryPrf {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t support = 0;
};
// Positive class is Yes; pairs whose first reference is neither Yes nor No
// are ignored.
BinaryPrf binary_prf(const std::vector<EvalPair>& pairs);

const std::set<std::string>& default_coreference_words();
const std::set<std::string>& default_audio_words();

// Keeps pairs whose question contains at least one listed token.
std::vector<EvalPair> filter_by_question(const std::vector<EvalPair>& pairs,
                                         const std::set<std::string>& words);
std::vector<EvalPair> filter_coreference(
    const std::vector<EvalPair>& pairs,
    const std::set<std::string>& words = default_coreference_words());
std::vector<EvalPair> filter_audio_related(
    const std::vector<EvalPair>& pairs,
    const std::set<std::string>& words = default_audio_words());
std::vector<EvalPair> filter_binary(const std::vector<EvalPair>& pairs);

corpus::Corpus filter_corpus_by_question(const corpus::Corpus& corpus,
                                         const std::set<std::string>& words);

struct ScoreBlock {
  std::size_t n_pairs = 0;
  std::array<double, 4> bleu{};
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::optional<BinaryPrf> binary;
};

struct EvalReport {
  ScoreBlock all;
  std::map<std::string, ScoreBlock> subsets;  // empty subsets have n_pairs 0
  std::vector<std::string> warnings;
};

struct EvalOptions {
  bool coref = false;
  bool audio = false;
  bool binary = false;
  std::set<std::string> coref_words = default_coreference_words();
  std::set<std::string> audio_words = default_audio_words();
};

ScoreBlock score(const std::vector<EvalPair>& pairs, bool with_binary,
                 std::vector<std::string>* warnings);
EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const EvalOptions& options);

struct Hypothesis {
  std::string dialog_id;
  std::size_t turn_index = 0;
  Tokens tokens;
};
std::vector<Hypothesis> load_hypotheses(const std::filesystem::path& path);
// Joins hypotheses to corpus turns by (dialog_id, turn_index). Throws
// InvalidArgument listing every hypothesis without a matching turn.
std::vector<EvalPair> join_pairs(const std::vector<Hypothesis>& hypotheses,
                                 const corpus::Corpus& corpus);

nlohmann::json to_json(const EvalReport& report);
// Header "subset,Bleu1,Bleu2,Bleu3,Bleu4,Meteor,Rouge,CIDEr" then one row per block.
std::string to_csv(const EvalReport& report);

}  // namespace avsd::metrics
