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

#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "common/error.hpp"
#include "corpus/io.hpp"
#include "corpus/tokenizer.hpp"

namespace avsd::metrics {

using nlohmann::json;

namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                 tokens.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1.0;
  }
  return out;
}

void require_pairs(const std::vector<EvalPair>& pairs, const char* what) {
  if (pairs.empty()) throw InvalidArgument(std::string(what) + " needs at least one pair");
  for (const auto& p : pairs) {
    if (p.references.empty()) {
      throw InvalidArgument("pair " + p.dialog_id + "/" + std::to_string(p.turn_index) +
                            " has no references");
    }
  }
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> bleu(const std::vector<EvalPair>& pairs, std::size_t max_n) {
  require_pairs(pairs, "bleu");
  if (max_n < 1) throw InvalidArgument("bleu max_n must be >= 1");
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  double c = 0.0, r = 0.0;
  for (const auto& p : pairs) {
    const double hl = static_cast<double>(p.hypothesis.size());
    c += hl;
    double best = 0.0, best_diff = 0.0;
    bool first = true;
    for (const auto& ref : p.references) {
      const double rl = static_cast<double>(ref.size());
      const double diff = std::abs(rl - hl);
      if (first || diff < best_diff || (diff == best_diff && rl < best)) {
        best = rl;
        best_diff = diff;
        first = false;
      }
    }
    r += best;
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts hyp = ngrams(p.hypothesis, n);
      NgramCounts max_ref;
      for (const auto& ref : p.references) {
        for (const auto& [g, cnt] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : hyp) {
        total[n - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  std::vector<double> out(max_n, 0.0);
  if (c == 0.0) return out;
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0.0) break;  // this and every longer order score 0
    log_sum += std::log(matched[n - 1] / total[n - 1]);
    out[n - 1] = bp * std::exp(log_sum / static_cast<double>(n));
  }
  return out;
}

double rouge_l_pair(const Tokens& hyp, const Tokens& ref) {
  const std::size_t l = lcs_length(hyp, ref);
  if (l == 0) return 0.0;
  constexpr double kBeta2 = 1.2 * 1.2;
  const double p = static_cast<double>(l) / static_cast<double>(hyp.size());
  const double r = static_cast<double>(l) / static_cast<double>(ref.size());
  return (1.0 + kBeta2) * p * r / (r + kBeta2 * p);
}

double rouge_l(const std::vector<EvalPair>& pairs) {
  require_pairs(pairs, "rouge_l");
  std::vector<double> scores;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& ref : p.references) best = std::max(best, rouge_l_pair(p.hypothesis, ref));
    scores.push_back(best);
  }
  return mean_of(scores);
}

std::vector<double> cider_per_pair(const std::vector<EvalPair>& pairs,
                                   std::vector<std::string>* warnings) {
  require_pairs(pairs, "cider");
  constexpr std::size_t kMaxN = 4;
  const double n_docs = static_cast<double>(pairs.size());
  if (warnings) {
    bool all_same = true;
    for (const auto& p : pairs) all_same = all_same && p.references == pairs.front().references;
    if (pairs.size() < 2 || all_same) {
      warnings->push_back("cider: IDF is degenerate (fewer than two distinct reference sets)");
    }
  }
  // Document frequency over reference sets.
  std::vector<NgramCounts> df(kMaxN);
  for (const auto& p : pairs) {
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      NgramCounts seen;
      for (const auto& ref : p.references) {
        for (const auto& [g, cnt] : ngrams(ref, n)) seen[g] = 1.0;
      }
      for (const auto& [g, one] : seen) df[n - 1][g] += one;
    }
  }
  auto idf = [&](std::size_t n, const std::vector<std::string>& g) {
    auto it = df[n - 1].find(g);
    const double d = it == df[n - 1].end() ? 1.0 : std::max(1.0, it->second);
    return std::log(n_docs / d);
  };
  // TF-IDF weights: term frequency normalized by the sentence's n-gram count.
  auto weights = [&](const NgramCounts& counts, std::size_t n) {
    double len = 0.0;
    for (const auto& [g, cnt] : counts) len += cnt;
    NgramCounts w;
    for (const auto& [g, cnt] : counts) w[g] = (cnt / len) * idf(n, g);
    return w;
  };
  auto norm = [](const NgramCounts& w) {
    double s = 0.0;
    for (const auto& [g, x] : w) s += x * x;
    return std::sqrt(s);
  };

  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    double total = 0.0;
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      const NgramCounts hyp_counts = ngrams(p.hypothesis, n);
      std::vector<NgramCounts> ref_counts;
      NgramCounts max_ref;
      for (const auto& ref : p.references) {
        ref_counts.push_back(ngrams(ref, n));
        for (const auto& [g, cnt] : ref_counts.back()) max_ref[g] = std::max(max_ref[g], cnt);
      }
      double per_n = 0.0;
      if (!hyp_counts.empty()) {
        NgramCounts clipped;
        for (const auto& [g, cnt] : hyp_counts) {
          auto it = max_ref.find(g);
          if (it != max_ref.end()) clipped[g] = std::min(cnt, it->second);
        }
        double hyp_len = 0.0;
        for (const auto& [g, cnt] : hyp_counts) hyp_len += cnt;
        const NgramCounts hyp_w = weights(hyp_counts, n);
        const double hyp_norm = norm(hyp_w);
        for (const auto& rc : ref_counts) {
          if (rc.empty() || hyp_norm == 0.0) continue;
          const NgramCounts ref_w = weights(rc, n);
          const double ref_norm = norm(ref_w);
          if (ref_norm == 0.0) continue;
          double dot = 0.0;
          for (const auto& [g, cnt] : clipped) {
            auto it = ref_w.find(g);
            if (it != ref_w.end()) dot += (cnt / hyp_len) * idf(n, g) * it->second;
          }
          per_n += dot / (hyp_norm * ref_norm);
        }
        per_n /= static_cast<double>(p.references.size());
      }
      total += per_n;
    }
    out.push_back(10.0 * total / static_cast<double>(kMaxN));
  }
  return out;
}

double cider(const std::vector<EvalPair>& pairs, std::vector<std::string>* warnings) {
  return mean_of(cider_per_pair(pairs, warnings));
}

double meteor_lite_pair(const Tokens& hyp, const Tokens& ref) {
  std::vector<bool> used(ref.size(), false);
  std::vector<std::ptrdiff_t> align(hyp.size(), -1);
  std::size_t m = 0;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && ref[j] == hyp[i]) {
        used[j] = true;
        align[i] = static_cast<std::ptrdiff_t>(j);
        ++m;
        break;
      }
    }
  }
  if (m == 0) return 0.0;
  std::size_t chunks = 0;
  std::ptrdiff_t prev = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] < 0) {
      in_chunk = false;
      continue;
    }
    if (!in_chunk || align[i] != prev + 1) ++chunks;
    in_chunk = true;
    prev = align[i];
  }
  const double md = static_cast<double>(m);
  const double p = md / static_cast<double>(hyp.size());
  const double r = md / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / md;
  return fmean * (1.0 - 0.5 * frag * frag * frag);
}

double meteor_lite(const std::vector<EvalPair>& pairs) {
  require_pairs(pairs, "meteor_lite");
  std::vector<double> scores;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& ref : p.references) best = std::max(best, meteor_lite_pair(p.hypothesis, ref));
    scores.push_back(best);
  }
  return mean_of(scores);
}

BinaryClass classify_binary(const Tokens& answer) {
  if (answer.empty()) return BinaryClass::kOther;
  const std::string& t = answer.front();
  if (t == "yes" || t == "yeah" || t == "yep") return BinaryClass::kYes;
  if (t == "no" || t == "nope" || t == "nah") return BinaryClass::kNo;
  return BinaryClass::kOther;
}

BinaryPrf binary_prf(const std::vector<EvalPair>& pairs) {
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  for (const auto& p : pairs) {
    if (p.references.empty()) continue;
    const BinaryClass ref = classify_binary(p.references.front());
    if (ref == BinaryClass::kOther) continue;
    ++support;
    const BinaryClass hyp = classify_binary(p.hypothesis);
    if (ref == BinaryClass::kYes) {
      if (hyp == BinaryClass::kYes) ++tp; else ++fn;
    } else if (hyp == BinaryClass::kYes) {
      ++fp;
    }
  }
  BinaryPrf out;
  out.support = support;
  if (support == 0) return out;
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.precision = p;
  out.recall = r;
  out.f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return out;
}

const std::set<std::string>& default_coreference_words() {
  static const std::set<std::string> words = {
      "he",  "she",  "it",    "they", "them",   "him",  "her",   "his",   "hers",
      "its", "their", "theirs", "this", "that", "these", "those", "one", "ones"};
  return words;
}

const std::set<std::string>& default_audio_words() {
  static const std::set<std::string> words = {
      "hear", "sound", "sounds", "noise", "audio", "music", "talk",
      "talking", "say", "says", "said", "speak", "speaking", "loud"};
  return words;
}

namespace {
bool mentions(const Tokens& question, const std::set<std::string>& words) {
  return std::any_of(question.begin(), question.end(),
                     [&](const std::string& t) { return words.count(t) > 0; });
}
}  // namespace

std::vector<EvalPair> filter_by_question(const std::vector<EvalPair>& pairs,
                                         const std::set<std::string>& words) {
  std::vector<EvalPair> out;
  for (const auto& p : pairs) {
    if (mentions(p.question, words)) out.push_back(p);
  }
  return out;
}

std::vector<EvalPair> filter_coreference(const std::vector<EvalPair>& pairs,
                                         const std::set<std::string>& words) {
  return filter_by_question(pairs, words);
}

std::vector<EvalPair> filter_audio_related(const std::vector<EvalPair>& pairs,
                                           const std::set<std::string>& words) {
  return filter_by_question(pairs, words);
}

std::vector<EvalPair> filter_binary(const std::vector<EvalPair>& pairs) {
  std::vector<EvalPair> out;
  for (const auto& p : pairs) {
    if (!p.references.empty() && classify_binary(p.references.front()) != BinaryClass::kOther) {
      out.push_back(p);
    }
  }
  return out;
}

corpus::Corpus filter_corpus_by_question(const corpus::Corpus& corpus,
                                         const std::set<std::string>& words) {
  corpus::Corpus out;
  for (const auto& d : corpus.dialogs) {
    corpus::Dialog kept = d;
    kept.turns.clear();
    for (const auto& t : d.turns) {
      if (mentions(t.question, words)) kept.turns.push_back(t);
    }
    if (!kept.turns.empty()) out.dialogs.push_back(std::move(kept));
  }
  return out;
}

ScoreBlock score(const std::vector<EvalPair>& pairs, bool with_binary,
                 std::vector<std::string>* warnings) {
  ScoreBlock b;
  b.n_pairs = pairs.size();
  if (with_binary) b.binary = binary_prf(pairs);
  if (pairs.empty()) return b;
  const std::vector<double> bl = bleu(pairs, 4);
  std::copy(bl.begin(), bl.end(), b.bleu.begin());
  b.meteor = meteor_lite(pairs);
  b.rouge_l = rouge_l(pairs);
  b.cider = cider(pairs, warnings);
  return b;
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const EvalOptions& options) {
  EvalReport report;
  report.all = score(pairs, options.binary, &report.warnings);
  if (options.coref) {
    report.subsets["coref"] =
        score(filter_coreference(pairs, options.coref_words), options.binary, nullptr);
  }
  if (options.audio) {
    report.subsets["audio"] =
        score(filter_audio_related(pairs, options.audio_words), options.binary, nullptr);
  }
  if (options.binary) report.subsets["binary"] = score(filter_binary(pairs), true, nullptr);
  return report;
}

std::vector<Hypothesis> load_hypotheses(const std::filesystem::path& path) {
  std::istringstream in(corpus::read_file(path));
  std::vector<Hypothesis> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Hypothesis h;
      h.dialog_id = j.at("dialog_id").get<std::string>();
      h.turn_index = j.at("turn_index").get<std::size_t>();
      const json& text = j.at("hypothesis");
      h.tokens = text.is_string() ? corpus::tokenize(text.get<std::string>()) : text.get<Tokens>();
      out.push_back(std::move(h));
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalPair> join_pairs(const std::vector<Hypothesis>& hypotheses,
                                 const corpus::Corpus& corpus) {
  std::map<std::pair<std::string, std::size_t>, const corpus::Turn*> turns;
  for (const auto& d : corpus.dialogs) {
    for (const auto& t : d.turns) turns[{d.dialog_id, t.turn_index}] = &t;
  }
  std::vector<EvalPair> out;
  std::vector<std::string> missing;
  std::set<std::pair<std::string, std::size_t>> seen;
  for (const auto& h : hypotheses) {
    const auto key = std::make_pair(h.dialog_id, h.turn_index);
    if (!seen.insert(key).second) {
      throw InvalidArgument("duplicate hypothesis for " + h.dialog_id + "/" +
                            std::to_string(h.turn_index));
    }
    auto it = turns.find(key);
    if (it == turns.end()) {
      missing.push_back(h.dialog_id + "/" + std::to_string(h.turn_index));
      continue;
    }
    out.push_back({h.dialog_id, h.turn_index, it->second->question, h.tokens,
                   {it->second->answer}});
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw InvalidArgument("hypotheses without a corpus turn: " + list);
  }
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json block_json(const ScoreBlock& b) {
  json j = {{"n_pairs", b.n_pairs}};
  if (b.n_pairs == 0) {
    j["bleu"] = nullptr;
    j["meteor"] = nullptr;
    j["rouge_l"] = nullptr;
    j["cider"] = nullptr;
  } else {
    j["bleu"] = b.bleu;
    j["meteor"] = b.meteor;
    j["rouge_l"] = b.rouge_l;
    j["cider"] = b.cider;
  }
  if (b.binary) {
    j["binary"] = {{"precision", opt(b.binary->precision)},
                   {"recall", opt(b.binary->recall)},
                   {"f1", opt(b.binary->f1)},
                   {"support", b.binary->support}};
  }
  return j;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void csv_row(std::string& out, const std::string& name, const ScoreBlock& b) {
  out += name;
  if (b.n_pairs == 0) {
    out += ",,,,,,,\n";
    return;
  }
  for (double v : b.bleu) out += "," + fmt(v);
  out += "," + fmt(b.meteor) + "," + fmt(b.rouge_l) + "," + fmt(b.cider) + "\n";
}

}  // namespace

json to_json(const EvalReport& report) {
  json j = {{"all", block_json(report.all)}, {"warnings", report.warnings}};
  json subsets = json::object();
  for (const auto& [name, b] : report.subsets) subsets[name] = block_json(b);
  j["subsets"] = subsets;
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::string out = "subset,Bleu1,Bleu2,Bleu3,Bleu4,Meteor,Rouge,CIDEr\n";
  csv_row(out, "all", report.all);
  for (const auto& [name, b] : report.subsets) csv_row(out, name, b);
  return out;
}

}  // namespace avsd::metrics
