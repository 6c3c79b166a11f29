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

#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/io.hpp"
#include "corpus/tokenizer.hpp"
#include "metrics/metrics.hpp"
#include "support/test_util.hpp"

using namespace avsd;
using namespace avsd::metrics;
using corpus::tokenize;

namespace {

EvalPair pair(const std::string& hyp, std::vector<std::string> refs,
              const std::string& question = "q ?", std::size_t turn = 0) {
  EvalPair p;
  p.dialog_id = "d" + std::to_string(turn);
  p.turn_index = turn;
  p.question = tokenize(question);
  p.hypothesis = tokenize(hyp);
  for (const auto& r : refs) p.references.push_back(tokenize(r));
  return p;
}

std::vector<EvalPair> random_pairs(Rng& rng, std::size_t n) {
  const std::vector<std::string> words = {"the", "man", "is", "cooking", "yes", "no", "he", "it", "a", "dog"};
  auto sentence = [&](std::size_t lo) {
    corpus::Tokens t;
    const std::size_t len = lo + rng.below(7);
    for (std::size_t i = 0; i < len; ++i) t.push_back(words[rng.below(words.size())]);
    return t;
  };
  std::vector<EvalPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    EvalPair p;
    p.dialog_id = "r" + std::to_string(i);
    p.question = sentence(1);
    p.hypothesis = sentence(0);
    const std::size_t refs = 1 + rng.below(3);
    for (std::size_t r = 0; r < refs; ++r) p.references.push_back(sentence(1));
    out.push_back(p);
  }
  return out;
}

std::vector<std::string> ids(const std::vector<EvalPair>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) out.push_back(p.dialog_id);
  return out;
}

}  // namespace

TEST_CASE("bleu examples") {
  const auto same = bleu({pair("the cat sat on the mat", {"the cat sat on the mat"})});
  for (double b : same) CHECK(b == doctest::Approx(1.0));
  CHECK(bleu({pair("the cat sat", {"the cat sat down"})})[0] ==
        doctest::Approx(std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-12));
  CHECK(bleu({pair("the the the", {"the cat"})})[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // No matching bigram zeroes BLEU-2 and every longer order.
  const auto b = bleu({pair("cat the", {"the cat"})});
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == 0.0);
  CHECK(b[3] == 0.0);
  // Closest reference length, ties resolved to the shorter one.
  CHECK(bleu({pair("a b c", {"a b c d e", "a b"})})[0] == doctest::Approx(1.0));
  CHECK(bleu({pair("a b c d", {"a b c d e f", "a b"})})[0] == doctest::Approx(1.0));
  CHECK(bleu({pair("", {"a b"})})[0] == 0.0);
  CHECK_THROWS_AS(bleu({}), Error);
}

TEST_CASE("rouge-l examples") {
  CHECK(rouge_l_pair(tokenize("a b c"), tokenize("a b c")) == doctest::Approx(1.0));
  const double p = 1.0, r = 0.75, b2 = 1.44;
  CHECK(rouge_l_pair(tokenize("the cat sat"), tokenize("the cat sat down")) ==
        doctest::Approx((1 + b2) * p * r / (r + b2 * p)).epsilon(1e-12));
  CHECK(rouge_l_pair(tokenize("the cat sat"), tokenize("the cat sat down")) ==
        doctest::Approx(0.83562).epsilon(1e-5));
  CHECK(rouge_l_pair(tokenize("x y"), tokenize("a b")) == 0.0);
  CHECK(rouge_l({pair("x y", {"a b", "x y"})}) == doctest::Approx(1.0));
}

TEST_CASE("meteor-lite examples") {
  CHECK(meteor_lite_pair(tokenize("a b c d"), tokenize("a b c d")) == doctest::Approx(0.9921875).epsilon(1e-12));
  CHECK(meteor_lite_pair(tokenize("x"), tokenize("a")) == 0.0);
  CHECK(meteor_lite_pair(tokenize("b a"), tokenize("a b")) == doctest::Approx(0.5).epsilon(1e-12));
  // m = 2 of hyp 3, ref 2: P = 2/3, R = 1, chunks 1.
  const double pp = 2.0 / 3.0, rr = 1.0;
  const double fmean = 10 * pp * rr / (rr + 9 * pp);
  CHECK(meteor_lite_pair(tokenize("a b z"), tokenize("a b")) ==
        doctest::Approx(fmean * (1 - 0.5 * std::pow(0.5, 3))).epsilon(1e-12));
}

TEST_CASE("cider fixture matches the step-by-step oracle") {
  // Values printed by tests/fixtures/cider_oracle.py.
  const auto fixture = nlohmann::json::parse(
      corpus::read_file(avsd::testing::fixture_path("cider_fixture.json")));
  std::vector<EvalPair> pairs;
  for (const auto& p : fixture.at("pairs")) {
    EvalPair e;
    e.hypothesis = tokenize(p.at("hypothesis").get<std::string>());
    for (const auto& r : p.at("references")) e.references.push_back(tokenize(r.get<std::string>()));
    pairs.push_back(e);
  }
  const auto per = cider_per_pair(pairs);
  CHECK(per[0] == doctest::Approx(2.9698974658).epsilon(1e-9));
  CHECK(per[1] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(per[2] == doctest::Approx(5.5329635601).epsilon(1e-9));
  CHECK(std::abs(cider(pairs) - 6.1676203420) <= 1e-6);
}

TEST_CASE("cider examples and warnings") {
  const auto two = cider_per_pair({pair("a b c d e", {"a b c d e"}), pair("v w x y z", {"q r s t u"})});
  CHECK(two[0] == doctest::Approx(10.0));
  CHECK(two[1] == 0.0);
  std::vector<std::string> warnings;
  cider({pair("a b", {"a b"})}, &warnings);
  CHECK(warnings.size() == 1);
  warnings.clear();
  cider({pair("a b", {"a b"}), pair("c", {"a b"})}, &warnings);
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(cider({}), Error);
}

TEST_CASE("binary classification and PRF") {
  CHECK(classify_binary({"yes", "she", "is"}) == BinaryClass::kYes);
  CHECK(classify_binary({"no", ",", "i", "don't"}) == BinaryClass::kNo);
  CHECK(classify_binary({"maybe"}) == BinaryClass::kOther);
  CHECK(classify_binary({}) == BinaryClass::kOther);
  CHECK(classify_binary({"yeah"}) == BinaryClass::kYes);
  CHECK(classify_binary({"nah"}) == BinaryClass::kNo);

  const auto prf = binary_prf({pair("yes", {"yes"}), pair("no", {"yes"}), pair("no", {"no"}),
                               pair("yes", {"no"}), pair("yes", {"perhaps"})});
  CHECK(*prf.precision == doctest::Approx(0.5));
  CHECK(*prf.recall == doctest::Approx(0.5));
  CHECK(*prf.f1 == doctest::Approx(0.5));
  CHECK(prf.support == 4);

  const auto perfect = binary_prf({pair("yes it is", {"yes"}), pair("no", {"no ,"})});
  CHECK(*perfect.f1 == 1.0);
  const auto other = binary_prf({pair("hmm", {"yes"}), pair("hmm", {"no"})});
  CHECK(*other.precision == 0.0);
  CHECK(*other.recall == 0.0);
  CHECK(*other.f1 == 0.0);
  const auto none = binary_prf({pair("yes", {"perhaps"})});
  CHECK_FALSE(none.precision.has_value());
  CHECK(none.support == 0);
}

TEST_CASE("question filters") {
  const auto kept = filter_coreference({pair("x", {"y"}, "is he cooking ?")});
  CHECK(kept.size() == 1);
  CHECK(filter_coreference({pair("x", {"y"}, "what is the man doing ?")}).empty());
  CHECK(filter_coreference({}).empty());
  CHECK(filter_audio_related({pair("x", {"y"}, "can you hear anything ?")}).size() == 1);
  CHECK(filter_audio_related({pair("x", {"y"}, "is the tv on ?")}).empty());
  CHECK(filter_audio_related({pair("x", {"y"}, "can you hear anything ?")}, {}).empty());
  CHECK(filter_binary({pair("x", {"yes it is"}), pair("x", {"in the kitchen"})}).size() == 1);
}

TEST_CASE("filters are idempotent and commute") {
  Rng rng(1);
  using Filter = std::function<std::vector<EvalPair>(const std::vector<EvalPair>&)>;
  const std::vector<Filter> filters = {
      [](const auto& p) { return filter_coreference(p); },
      [](const auto& p) { return filter_audio_related(p, {"dog", "man"}); },
      [](const auto& p) { return filter_binary(p); }};
  for (int trial = 0; trial < 50; ++trial) {
    const auto pairs = random_pairs(rng, 12);
    for (std::size_t a = 0; a < filters.size(); ++a) {
      CHECK(ids(filters[a](filters[a](pairs))) == ids(filters[a](pairs)));
      for (std::size_t b = 0; b < filters.size(); ++b) {
        CHECK(ids(filters[a](filters[b](pairs))) == ids(filters[b](filters[a](pairs))));
      }
    }
  }
}

TEST_CASE("metrics are permutation invariant and bounded") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    auto pairs = random_pairs(rng, 2 + rng.below(8));
    const auto b = bleu(pairs);
    const double r = rouge_l(pairs), m = meteor_lite(pairs), c = cider(pairs);
    for (double x : b) CHECK((x >= 0.0 && x <= 1.0));
    CHECK((r >= 0.0 && r <= 1.0));
    CHECK((m >= 0.0 && m <= 1.0));
    CHECK((c >= 0.0 && c <= 10.0 + 1e-9));
    rng.shuffle(std::span<EvalPair>(pairs));
    const auto b2 = bleu(pairs);
    for (std::size_t n = 0; n < 4; ++n) CHECK(b2[n] == doctest::Approx(b[n]).epsilon(1e-12));
    CHECK(rouge_l(pairs) == doctest::Approx(r).epsilon(1e-12));
    CHECK(meteor_lite(pairs) == doctest::Approx(m).epsilon(1e-12));
    CHECK(cider(pairs) == doctest::Approx(c).epsilon(1e-12));

    // Identity hypotheses maximize BLEU and ROUGE.
    auto ideal = pairs;
    for (auto& p : ideal) p.hypothesis = p.references[0];
    CHECK(rouge_l(ideal) >= r - 1e-12);
    CHECK(bleu(ideal)[0] >= b[0] - 1e-12);

    // A duplicated pair keeps per-pair means consistent.
    auto dup = pairs;
    dup.push_back(pairs[0]);
    const double expect = (r * pairs.size() + rouge_l({pairs[0]})) / (pairs.size() + 1);
    CHECK(rouge_l(dup) == doctest::Approx(expect).epsilon(1e-12));
    const double expect_m = (m * pairs.size() + meteor_lite({pairs[0]})) / (pairs.size() + 1);
    CHECK(meteor_lite(dup) == doctest::Approx(expect_m).epsilon(1e-12));
  }
}

TEST_CASE("evaluation report") {
  const std::vector<EvalPair> pairs = {
      pair("yes , he is", {"yes , he is"}, "is he cooking ?", 0),
      pair("i hear a dog barking", {"i hear a dog barking"}, "what do you hear ?", 1),
      pair("the man is in the kitchen", {"the man is in the kitchen"}, "where is the man ?", 2)};
  EvalOptions o;
  o.coref = o.audio = o.binary = true;
  const EvalReport r = evaluate_pairs(pairs, o);
  CHECK(r.all.n_pairs == 3);
  CHECK(r.all.bleu[0] == doctest::Approx(1.0));
  CHECK(r.all.bleu[3] == doctest::Approx(1.0));
  CHECK(r.all.rouge_l == doctest::Approx(1.0));
  REQUIRE(r.subsets.size() == 3);
  CHECK(r.subsets.at("coref").n_pairs == 1);
  CHECK(r.subsets.at("audio").n_pairs == 1);
  CHECK(r.subsets.at("binary").n_pairs == 1);
  CHECK(r.all.binary.has_value());

  const std::string csv = to_csv(r);
  CHECK(csv.substr(0, csv.find('\n')) == "subset,Bleu1,Bleu2,Bleu3,Bleu4,Meteor,Rouge,CIDEr");
  CHECK(csv.find("\nall,1.000000,") != std::string::npos);
  const auto j = to_json(r);
  CHECK(j.at("all").at("n_pairs") == 3);
  CHECK(j.at("subsets").contains("audio"));

  EvalOptions empty;
  empty.coref = true;
  empty.coref_words = {};
  const EvalReport e = evaluate_pairs(pairs, empty);
  CHECK(e.subsets.at("coref").n_pairs == 0);
  CHECK(to_csv(e).find("\ncoref,,,,,,,\n") != std::string::npos);
}

TEST_CASE("hypothesis files join to corpus turns") {
  avsd::testing::TempDir dir("hyp");
  const corpus::Corpus c = corpus::parse_avsd_json(
      R"({"dialogs":[{"image_id":"v1","dialog":[{"question":"is he here ?","answer":"yes"},{"question":"what now ?","answer":"no idea"}]}]})");
  corpus::write_file(dir / "h.jsonl",
                     "{\"dialog_id\":\"v1\",\"turn_index\":1,\"hypothesis\":\"no idea\"}\n"
                     "{\"dialog_id\":\"v1\",\"turn_index\":0,\"hypothesis\":\"yes\"}\n");
  const auto pairs = join_pairs(load_hypotheses(dir / "h.jsonl"), c);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].references[0] == corpus::Tokens{"no", "idea"});
  CHECK(pairs[1].question == tokenize("is he here ?"));

  corpus::write_file(dir / "bad.jsonl",
                     "{\"dialog_id\":\"v9\",\"turn_index\":0,\"hypothesis\":\"x\"}\n"
                     "{\"dialog_id\":\"v1\",\"turn_index\":7,\"hypothesis\":\"x\"}\n");
  try {
    join_pairs(load_hypotheses(dir / "bad.jsonl"), c);
    FAIL("expected throw");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("v9") != std::string::npos);
    CHECK(what.find("7") != std::string::npos);
  }
}
