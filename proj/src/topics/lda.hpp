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
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "corpus/dialog.hpp"

namespace avsd::topics {

struct TopicParams {
  std::size_t num_topics = 9;
  double alpha = 0.0;  // <= 0 selects the 50/K default
  double beta = 0.01;
  std::size_t iterations = 500;
  // topic index -> seed words. Guided fits bias the initial assignment of
  // every seed-word occurrence toward its topic.
  std::map<std::size_t, std::vector<std::string>> seed_sets;
  double seed_confidence = 0.0;
  std::uint64_t rng_seed = 0;

  double effective_alpha() const {
    return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(num_topics);
  }
  void validate() const;

  bool operator==(const TopicParams&) const = default;
};

// Bag-of-words documents over a closed word list.
struct TopicCorpus {
  std::vector<std::string> words;
  std::vector<std::vector<int>> docs;

  int word_id(const std::string& w) const;  // -1 when absent
  // Builds the word list (sorted) from raw token documents, dropping
  // punctuation-only tokens and stopwords.
  static TopicCorpus from_token_docs(
      const std::vector<corpus::Tokens>& docs,
      const std::set<std::string>& stopwords);
};

const std::set<std::string>& default_stopwords();
bool is_punctuation_token(const std::string& token);
corpus::Tokens filter_tokens(const corpus::Tokens& tokens,
                             const std::set<std::string>& stopwords);

// Which text a topic model is trained on. kAll pools the documents of every
// other category into one training set.
enum class DocCategory {
  kQuestions,
  kAnswers,
  kQaPairs,
  kCaptions,
  kHistory,
  kHistoryCaptions,
  kAll,
};
DocCategory parse_doc_category(const std::string& name);
std::string to_string(DocCategory c);

std::vector<corpus::Tokens> category_documents(const corpus::Corpus& corpus,
                                               DocCategory category);

class TopicModel {
 public:
  TopicModel() = default;

  // Counts from an explicit assignment state (z[d][i] for token i of doc d).
  static TopicModel from_assignments(
      std::vector<std::string> words, const std::vector<std::vector<int>>& docs,
      const std::vector<std::vector<int>>& z, TopicParams params);

  std::size_t num_topics() const { return k_; }
  std::size_t vocab_size() const { return words_.size(); }
  std::size_t num_docs() const { return num_docs_; }
  const std::vector<std::string>& words() const { return words_; }
  int word_id(const std::string& w) const;
  const TopicParams& params() const { return params_; }
  double alpha() const { return params_.effective_alpha(); }
  double beta() const { return params_.beta; }

  std::int64_t n_dk(std::size_t d, std::size_t k) const { return ndk_[d * k_ + k]; }
  std::int64_t n_kw(std::size_t k, std::size_t w) const { return nwk_[w * k_ + k]; }
  std::int64_t n_k(std::size_t k) const { return nk_[k]; }
  std::int64_t doc_length(std::size_t d) const;

  double phi(std::size_t k, std::size_t w) const;
  std::vector<double> doc_theta(std::size_t d) const;
  std::size_t doc_argmax(std::size_t d) const;

  // Throws InternalError when a count identity is broken.
  void check_invariants() const;

  bool operator==(const TopicModel&) const = default;

 private:
  friend class GibbsState;
  friend TopicModel load_topic_model_json(const std::string&);

  std::vector<std::string> words_;
  TopicParams params_;
  std::size_t k_ = 0;
  std::size_t num_docs_ = 0;
  std::vector<std::int64_t> ndk_;  // docs x K
  std::vector<std::int64_t> nwk_;  // V x K (word-major)
  std::vector<std::int64_t> nk_;   // K
};

// P(z = k | rest) for a token of word `word` in doc `doc`, with the token's
// current assignment `excluded` removed from the counts first (pass -1 when
// the counts already exclude it).
std::vector<double> gibbs_conditional(const TopicModel& model, std::size_t doc,
                                      std::size_t word, int excluded);

TopicModel fit_lda(const TopicCorpus& corpus, TopicParams params);
// Absent seed words are skipped and reported through `warnings`.
TopicModel fit_guided_lda(const TopicCorpus& corpus, const TopicParams& params,
                          std::vector<std::string>* warnings = nullptr);

// Fold-in Gibbs with the topic-word counts held fixed. Words outside the
// model's vocabulary are skipped.
std::vector<double> infer_theta(const TopicModel& model,
                                const corpus::Tokens& doc,
                                std::size_t iterations, std::uint64_t rng_seed);
std::vector<double> infer_theta_ids(const TopicModel& model,
                                    const std::vector<int>& doc,
                                    std::size_t iterations,
                                    std::uint64_t rng_seed);

std::vector<std::string> top_words(const TopicModel& model, std::size_t topic,
                                   std::size_t n);

std::string topic_model_to_json(const TopicModel& model);
TopicModel load_topic_model_json(const std::string& text);
void save_topic_model(const TopicModel& model,
                      const std::filesystem::path& path);
TopicModel load_topic_model(const std::filesystem::path& path);

}  // namespace avsd::topics
