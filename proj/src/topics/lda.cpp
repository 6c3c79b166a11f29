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

#include "topics/lda.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/io.hpp"

namespace avsd::topics {

using nlohmann::json;

void TopicParams::validate() const {
  if (num_topics < 1) throw InvalidArgument("num_topics must be >= 1");
  if (!(effective_alpha() > 0.0)) throw InvalidArgument("alpha must be > 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(seed_confidence >= 0.0 && seed_confidence <= 1.0)) {
    throw InvalidArgument("seed_confidence must lie in [0, 1]");
  }
  for (const auto& [topic, words] : seed_sets) {
    if (topic >= num_topics) {
      throw InvalidArgument("seed topic " + std::to_string(topic) +
                            " is not < num_topics " +
                            std::to_string(num_topics));
    }
  }
}

// ------------------------------------------------------------ documents --

int TopicCorpus::word_id(const std::string& w) const {
  auto it = std::lower_bound(words.begin(), words.end(), w);
  if (it == words.end() || *it != w) return -1;
  return static_cast<int>(it - words.begin());
}

bool is_punctuation_token(const std::string& token) {
  return std::none_of(token.begin(), token.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
  });
}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",    "the",   "is",   "are",  "was",  "were", "be",
      "what", "which", "who",   "where", "when", "how", "does", "do",
      "did",  "in",    "on",    "of",   "to",   "with", "and",  "or",
      "it",   "he",    "she",   "they", "i",    "you",  "there", "this",
      "that", "his",   "her",   "its",  "at",   "for",  "any",  "can",
      "doing"};
  return words;
}

corpus::Tokens filter_tokens(const corpus::Tokens& tokens,
                             const std::set<std::string>& stopwords) {
  corpus::Tokens out;
  for (const auto& t : tokens) {
    if (!is_punctuation_token(t) && stopwords.count(t) == 0) out.push_back(t);
  }
  return out;
}

TopicCorpus TopicCorpus::from_token_docs(
    const std::vector<corpus::Tokens>& docs,
    const std::set<std::string>& stopwords) {
  TopicCorpus tc;
  std::set<std::string> vocab;
  std::vector<corpus::Tokens> filtered;
  filtered.reserve(docs.size());
  for (const auto& d : docs) {
    filtered.push_back(filter_tokens(d, stopwords));
    vocab.insert(filtered.back().begin(), filtered.back().end());
  }
  tc.words.assign(vocab.begin(), vocab.end());
  for (const auto& d : filtered) {
    std::vector<int> ids;
    ids.reserve(d.size());
    for (const auto& t : d) ids.push_back(tc.word_id(t));
    tc.docs.push_back(std::move(ids));
  }
  return tc;
}

DocCategory parse_doc_category(const std::string& name) {
  static const std::map<std::string, DocCategory> names = {
      {"questions", DocCategory::kQuestions},
      {"answers", DocCategory::kAnswers},
      {"qa_pairs", DocCategory::kQaPairs},
      {"captions", DocCategory::kCaptions},
      {"history", DocCategory::kHistory},
      {"history_captions", DocCategory::kHistoryCaptions},
      {"all", DocCategory::kAll},
  };
  auto it = names.find(name);
  if (it == names.end()) {
    throw InvalidArgument(
        "unknown document category '" + name +
        "' (valid: questions, answers, qa_pairs, captions, history, "
        "history_captions, all)");
  }
  return it->second;
}

std::string to_string(DocCategory c) {
  switch (c) {
    case DocCategory::kQuestions: return "questions";
    case DocCategory::kAnswers: return "answers";
    case DocCategory::kQaPairs: return "qa_pairs";
    case DocCategory::kCaptions: return "captions";
    case DocCategory::kHistory: return "history";
    case DocCategory::kHistoryCaptions: return "history_captions";
    case DocCategory::kAll: return "all";
  }
  return "?";
}

std::vector<corpus::Tokens> category_documents(const corpus::Corpus& corpus,
                                               DocCategory category) {
  std::vector<corpus::Tokens> docs;
  auto append = [](corpus::Tokens& dst, const corpus::Tokens& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  if (category == DocCategory::kAll) {
    for (DocCategory c :
         {DocCategory::kQuestions, DocCategory::kAnswers,
          DocCategory::kQaPairs, DocCategory::kCaptions, DocCategory::kHistory,
          DocCategory::kHistoryCaptions}) {
      auto part = category_documents(corpus, c);
      docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
    }
    return docs;
  }
  for (const auto& d : corpus.dialogs) {
    switch (category) {
      case DocCategory::kQuestions:
        for (const auto& t : d.turns) docs.push_back(t.question);
        break;
      case DocCategory::kAnswers:
        for (const auto& t : d.turns) docs.push_back(t.answer);
        break;
      case DocCategory::kQaPairs:
        for (const auto& t : d.turns) {
          corpus::Tokens doc = t.question;
          append(doc, t.answer);
          docs.push_back(std::move(doc));
        }
        break;
      case DocCategory::kCaptions:
        docs.push_back(d.caption);
        break;
      case DocCategory::kHistory:
      case DocCategory::kHistoryCaptions: {
        corpus::Tokens doc;
        if (category == DocCategory::kHistoryCaptions) append(doc, d.caption);
        for (const auto& t : d.turns) {
          append(doc, t.question);
          append(doc, t.answer);
        }
        docs.push_back(std::move(doc));
        break;
      }
      case DocCategory::kAll:
        break;
    }
  }
  return docs;
}

// ---------------------------------------------------------------- model --

int TopicModel::word_id(const std::string& w) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), w);
  if (it == words_.end() || *it != w) return -1;
  return static_cast<int>(it - words_.begin());
}

std::int64_t TopicModel::doc_length(std::size_t d) const {
  std::int64_t n = 0;
  for (std::size_t k = 0; k < k_; ++k) n += n_dk(d, k);
  return n;
}

double TopicModel::phi(std::size_t k, std::size_t w) const {
  const double v = static_cast<double>(words_.size());
  return (static_cast<double>(n_kw(k, w)) + beta()) /
         (static_cast<double>(n_k(k)) + v * beta());
}

std::vector<double> TopicModel::doc_theta(std::size_t d) const {
  const double a = alpha();
  const double denom = static_cast<double>(doc_length(d)) +
                       static_cast<double>(k_) * a;
  std::vector<double> theta(k_);
  for (std::size_t k = 0; k < k_; ++k) {
    theta[k] = (static_cast<double>(n_dk(d, k)) + a) / denom;
  }
  return theta;
}

std::size_t TopicModel::doc_argmax(std::size_t d) const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < k_; ++k) {
    if (n_dk(d, k) > n_dk(d, best)) best = k;
  }
  return best;
}

void TopicModel::check_invariants() const {
  std::vector<std::int64_t> sums(k_, 0);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    for (std::size_t k = 0; k < k_; ++k) {
      if (n_kw(k, w) < 0) throw InternalError("negative n_kw count");
      sums[k] += n_kw(k, w);
    }
  }
  std::vector<std::int64_t> doc_sums(k_, 0);
  for (std::size_t d = 0; d < num_docs_; ++d) {
    for (std::size_t k = 0; k < k_; ++k) {
      if (n_dk(d, k) < 0) throw InternalError("negative n_dk count");
      doc_sums[k] += n_dk(d, k);
    }
  }
  for (std::size_t k = 0; k < k_; ++k) {
    if (sums[k] != nk_[k]) {
      throw InternalError("sum_w n_kw != n_k for topic " + std::to_string(k));
    }
    if (doc_sums[k] != nk_[k]) {
      throw InternalError("sum_d n_dk != n_k for topic " + std::to_string(k));
    }
  }
}

TopicModel TopicModel::from_assignments(
    std::vector<std::string> words, const std::vector<std::vector<int>>& docs,
    const std::vector<std::vector<int>>& z, TopicParams params) {
  params.validate();
  if (z.size() != docs.size()) {
    throw InvalidArgument("assignment list does not match documents");
  }
  TopicModel m;
  m.words_ = std::move(words);
  m.params_ = std::move(params);
  m.k_ = m.params_.num_topics;
  m.num_docs_ = docs.size();
  m.ndk_.assign(m.num_docs_ * m.k_, 0);
  m.nwk_.assign(m.words_.size() * m.k_, 0);
  m.nk_.assign(m.k_, 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (z[d].size() != docs[d].size()) {
      throw InvalidArgument("assignment length mismatch in doc " +
                            std::to_string(d));
    }
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto w = static_cast<std::size_t>(docs[d][i]);
      const auto k = static_cast<std::size_t>(z[d][i]);
      if (w >= m.words_.size() || k >= m.k_) {
        throw InvalidArgument("word or topic index out of range");
      }
      ++m.ndk_[d * m.k_ + k];
      ++m.nwk_[w * m.k_ + k];
      ++m.nk_[k];
    }
  }
  return m;
}

namespace {

// Normalized collapsed-Gibbs conditional from explicit count views.
void conditional_into(std::vector<double>& out, const std::int64_t* doc_counts,
                      const std::int64_t* word_counts,
                      const std::int64_t* topic_totals, std::size_t k,
                      double alpha, double beta, double vbeta) {
  out.resize(k);
  double total = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    const double p = (static_cast<double>(doc_counts[t]) + alpha) *
                     (static_cast<double>(word_counts[t]) + beta) /
                     (static_cast<double>(topic_totals[t]) + vbeta);
    out[t] = p;
    total += p;
  }
  for (double& p : out) p /= total;
}

std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return k;
  }
  return probs.size() - 1;
}

}  // namespace

std::vector<double> gibbs_conditional(const TopicModel& model, std::size_t doc,
                                      std::size_t word, int excluded) {
  const std::size_t k = model.num_topics();
  if (doc >= model.num_docs() || word >= model.vocab_size()) {
    throw InvalidArgument("document or word index out of range");
  }
  if (excluded >= static_cast<int>(k)) {
    throw InvalidArgument("excluded assignment out of range");
  }
  std::vector<std::int64_t> ndk(k), nkw(k), nk(k);
  for (std::size_t t = 0; t < k; ++t) {
    const std::int64_t drop = static_cast<int>(t) == excluded ? 1 : 0;
    ndk[t] = model.n_dk(doc, t) - drop;
    nkw[t] = model.n_kw(t, word) - drop;
    nk[t] = model.n_k(t) - drop;
    if (ndk[t] < 0 || nkw[t] < 0 || nk[t] < 0) {
      throw InternalError("negative count after excluding assignment " +
                          std::to_string(excluded));
    }
  }
  std::vector<double> out;
  conditional_into(out, ndk.data(), nkw.data(), nk.data(), k, model.alpha(),
                   model.beta(),
                   static_cast<double>(model.vocab_size()) * model.beta());
  return out;
}

class GibbsState {
 public:
  static TopicModel fit(const TopicCorpus& corpus, const TopicParams& params,
                        std::vector<std::string>* warnings) {
    params.validate();
    if (corpus.words.empty()) {
      throw InvalidArgument("topic vocabulary is empty");
    }
    if (corpus.docs.empty()) throw InvalidArgument("no documents to fit");
    const std::size_t vocab = corpus.words.size();
    for (const auto& doc : corpus.docs) {
      for (int w : doc) {
        if (w < 0 || static_cast<std::size_t>(w) >= vocab) {
          throw InvalidArgument("document word id outside the vocabulary");
        }
      }
    }

    std::vector<int> seed_topic(vocab, -1);
    for (const auto& [topic, words] : params.seed_sets) {
      for (const auto& w : words) {
        const int id = corpus.word_id(w);
        if (id < 0) {
          if (warnings) {
            warnings->push_back("seed word '" + w + "' for topic " +
                                std::to_string(topic) +
                                " is not in the vocabulary; ignored");
          }
          continue;
        }
        if (seed_topic[static_cast<std::size_t>(id)] < 0) {
          seed_topic[static_cast<std::size_t>(id)] = static_cast<int>(topic);
        }
      }
    }

    const std::size_t k = params.num_topics;
    Rng rng(params.rng_seed);
    std::vector<std::vector<int>> z(corpus.docs.size());
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
      z[d].resize(corpus.docs[d].size());
      for (std::size_t i = 0; i < corpus.docs[d].size(); ++i) {
        const int s = seed_topic[static_cast<std::size_t>(corpus.docs[d][i])];
        if (s >= 0 && rng.bernoulli(params.seed_confidence)) {
          z[d][i] = s;
        } else {
          z[d][i] = static_cast<int>(rng.below(k));
        }
      }
    }
    TopicModel m =
        TopicModel::from_assignments(corpus.words, corpus.docs, z, params);

    const double alpha = m.alpha();
    const double beta = m.beta();
    const double vbeta = static_cast<double>(vocab) * beta;
    std::vector<double> probs;
    for (std::size_t it = 0; it < params.iterations; ++it) {
      for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        std::int64_t* ndk = &m.ndk_[d * k];
        for (std::size_t i = 0; i < corpus.docs[d].size(); ++i) {
          const auto w = static_cast<std::size_t>(corpus.docs[d][i]);
          std::int64_t* nwk = &m.nwk_[w * k];
          const auto old = static_cast<std::size_t>(z[d][i]);
          --ndk[old];
          --nwk[old];
          --m.nk_[old];
          conditional_into(probs, ndk, nwk, m.nk_.data(), k, alpha, beta,
                           vbeta);
          const std::size_t fresh = sample_index(probs, rng);
          z[d][i] = static_cast<int>(fresh);
          ++ndk[fresh];
          ++nwk[fresh];
          ++m.nk_[fresh];
        }
      }
#ifndef NDEBUG
      m.check_invariants();
#endif
    }
    return m;
  }
};

TopicModel fit_lda(const TopicCorpus& corpus, TopicParams params) {
  params.seed_sets.clear();
  return GibbsState::fit(corpus, params, nullptr);
}

TopicModel fit_guided_lda(const TopicCorpus& corpus, const TopicParams& params,
                          std::vector<std::string>* warnings) {
  return GibbsState::fit(corpus, params, warnings);
}

std::vector<double> infer_theta_ids(const TopicModel& model,
                                    const std::vector<int>& doc,
                                    std::size_t iterations,
                                    std::uint64_t rng_seed) {
  const std::size_t k = model.num_topics();
  const double alpha = model.alpha();
  std::vector<std::size_t> words;
  for (int w : doc) {
    if (w >= 0 && static_cast<std::size_t>(w) < model.vocab_size()) {
      words.push_back(static_cast<std::size_t>(w));
    }
  }
  Rng rng(rng_seed);
  std::vector<std::int64_t> m(k, 0);
  std::vector<std::size_t> z(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = rng.below(k);
    ++m[z[i]];
  }
  // Word likelihood under fixed topic-word counts, cached per token.
  std::vector<double> like(words.size() * k);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t t = 0; t < k; ++t) like[i * k + t] = model.phi(t, words[i]);
  }
  std::vector<double> probs(k);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --m[z[i]];
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        probs[t] = (static_cast<double>(m[t]) + alpha) * like[i * k + t];
        total += probs[t];
      }
      for (double& p : probs) p /= total;
      z[i] = sample_index(probs, rng);
      ++m[z[i]];
    }
  }
  const double denom =
      static_cast<double>(words.size()) + static_cast<double>(k) * alpha;
  std::vector<double> theta(k);
  for (std::size_t t = 0; t < k; ++t) {
    theta[t] = (static_cast<double>(m[t]) + alpha) / denom;
  }
  return theta;
}

std::vector<double> infer_theta(const TopicModel& model,
                                const corpus::Tokens& doc,
                                std::size_t iterations,
                                std::uint64_t rng_seed) {
  std::vector<int> ids;
  ids.reserve(doc.size());
  for (const auto& t : doc) {
    const int id = model.word_id(t);
    if (id >= 0) ids.push_back(id);
  }
  return infer_theta_ids(model, ids, iterations, rng_seed);
}

std::vector<std::string> top_words(const TopicModel& model, std::size_t topic,
                                   std::size_t n) {
  if (topic >= model.num_topics()) {
    throw InvalidArgument("topic " + std::to_string(topic) +
                          " is not < K = " +
                          std::to_string(model.num_topics()));
  }
  std::vector<std::size_t> order(model.vocab_size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double pa = model.phi(topic, a);
                     const double pb = model.phi(topic, b);
                     if (pa != pb) return pa > pb;
                     return model.words()[a] < model.words()[b];
                   });
  order.resize(std::min(n, order.size()));
  std::vector<std::string> out;
  for (std::size_t w : order) out.push_back(model.words()[w]);
  return out;
}

// ---------------------------------------------------------- persistence --

namespace {
constexpr const char* kTopicFormat = "avsd-topic-model";
constexpr int kTopicVersion = 1;
}  // namespace

std::string topic_model_to_json(const TopicModel& model) {
  const TopicParams& p = model.params();
  json seeds = json::object();
  for (const auto& [topic, words] : p.seed_sets) {
    seeds[std::to_string(topic)] = words;
  }
  json params = {{"num_topics", p.num_topics},
                 {"alpha", p.alpha},
                 {"beta", p.beta},
                 {"iterations", p.iterations},
                 {"seed_sets", seeds},
                 {"seed_confidence", p.seed_confidence},
                 {"rng_seed", p.rng_seed}};
  json ndk = json::array();
  for (std::size_t d = 0; d < model.num_docs(); ++d) {
    json row = json::array();
    for (std::size_t k = 0; k < model.num_topics(); ++k) row.push_back(model.n_dk(d, k));
    ndk.push_back(std::move(row));
  }
  json nkw = json::array();
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    json row = json::array();
    for (std::size_t w = 0; w < model.vocab_size(); ++w) row.push_back(model.n_kw(k, w));
    nkw.push_back(std::move(row));
  }
  json nk = json::array();
  for (std::size_t k = 0; k < model.num_topics(); ++k) nk.push_back(model.n_k(k));
  json root = {{"format", kTopicFormat}, {"version", kTopicVersion},
               {"params", params},       {"words", model.words()},
               {"n_dk", ndk},            {"n_kw", nkw},
               {"n_k", nk}};
  return root.dump(1) + "\n";
}

TopicModel load_topic_model_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed topic model: ") + e.what(),
                      e.byte);
  }
  try {
    if (root.at("format").get<std::string>() != kTopicFormat) {
      throw FormatError("not a topic model file", 0);
    }
    const int version = root.at("version").get<int>();
    if (version != kTopicVersion) {
      throw FormatError("unsupported topic model version " +
                            std::to_string(version),
                        0);
    }
    const json& jp = root.at("params");
    TopicParams p;
    p.num_topics = jp.at("num_topics").get<std::size_t>();
    p.alpha = jp.at("alpha").get<double>();
    p.beta = jp.at("beta").get<double>();
    p.iterations = jp.at("iterations").get<std::size_t>();
    p.seed_confidence = jp.at("seed_confidence").get<double>();
    p.rng_seed = jp.at("rng_seed").get<std::uint64_t>();
    for (const auto& [topic, words] : jp.at("seed_sets").items()) {
      p.seed_sets[std::stoul(topic)] = words.get<std::vector<std::string>>();
    }
    p.validate();

    TopicModel m;
    m.params_ = p;
    m.k_ = p.num_topics;
    m.words_ = root.at("words").get<std::vector<std::string>>();
    if (!std::is_sorted(m.words_.begin(), m.words_.end())) {
      throw FormatError("topic vocabulary must be sorted", 0);
    }
    const auto ndk = root.at("n_dk").get<std::vector<std::vector<std::int64_t>>>();
    const auto nkw = root.at("n_kw").get<std::vector<std::vector<std::int64_t>>>();
    const auto nk = root.at("n_k").get<std::vector<std::int64_t>>();
    m.num_docs_ = ndk.size();
    if (nkw.size() != m.k_ || nk.size() != m.k_) {
      throw FormatError("count matrices do not match num_topics", 0);
    }
    m.ndk_.reserve(m.num_docs_ * m.k_);
    for (const auto& row : ndk) {
      if (row.size() != m.k_) throw FormatError("n_dk row has wrong width", 0);
      m.ndk_.insert(m.ndk_.end(), row.begin(), row.end());
    }
    m.nwk_.assign(m.words_.size() * m.k_, 0);
    for (std::size_t k = 0; k < m.k_; ++k) {
      if (nkw[k].size() != m.words_.size()) {
        throw FormatError("n_kw row has wrong width", 0);
      }
      for (std::size_t w = 0; w < m.words_.size(); ++w) {
        m.nwk_[w * m.k_ + k] = nkw[k][w];
      }
    }
    m.nk_ = nk;
    try {
      m.check_invariants();
    } catch (const Error& e) {
      throw FormatError(std::string("inconsistent counts: ") + e.what(), 0);
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("topic model schema: ") + e.what(), 0);
  }
}

void save_topic_model(const TopicModel& model,
                      const std::filesystem::path& path) {
  corpus::write_file(path, topic_model_to_json(model));
}

TopicModel load_topic_model(const std::filesystem::path& path) {
  return load_topic_model_json(corpus::read_file(path));
}

}  // namespace avsd::topics
