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

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "avsd/avsd.h"
#include "support/test_util.hpp"

using nlohmann::json;
using avsd::testing::TempDir;

extern "C" int avsd_header_check_status(void);

namespace {

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out = s;
  avsd_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("status names and versions") {
  CHECK(std::string(avsd_version()).size() > 0);
  CHECK(std::string(avsd_status_name(AVSD_OK)) == "ok");
  CHECK(std::string(avsd_status_name(AVSD_CHECK_FAILED)).size() > 0);
  CHECK(avsd_header_check_status() == 0);
  CHECK(std::string(avsd_last_error()).find("path") != std::string::npos);
}

TEST_CASE("errors come back as status codes") {
  avsd_corpus* c = nullptr;
  CHECK(avsd_corpus_load("/nonexistent/corpus.jsonl", &c) == AVSD_IO_ERROR);
  CHECK(c == nullptr);
  CHECK(std::string(avsd_last_error()).find("nonexistent") != std::string::npos);
  CHECK(avsd_corpus_synthesize("{not json", &c) == AVSD_CONFIG_ERROR);
  CHECK(avsd_corpus_synthesize(R"({"n_dialogs": 2, "typo": 1})", &c) == AVSD_CONFIG_ERROR);
  CHECK(std::string(avsd_last_error()).find("typo") != std::string::npos);
  char* summary = nullptr;
  CHECK(avsd_run_command("dance", "{}", &summary) == AVSD_USAGE_ERROR);
  CHECK(avsd_run_command(nullptr, "{}", &summary) == AVSD_INVALID_ARGUMENT);
}

TEST_CASE("corpus, topics, training, generation and evaluation through the C API") {
  TempDir dir("capi");
  avsd_corpus* corpus = nullptr;
  REQUIRE(avsd_corpus_synthesize(R"({"n_dialogs": 6, "n_turns_per_dialog": 3, "rng_seed": 4})",
                                 &corpus) == AVSD_OK);
  size_t dialogs = 0, turns = 0;
  REQUIRE(avsd_corpus_counts(corpus, &dialogs, &turns) == AVSD_OK);
  CHECK(dialogs == 6);
  CHECK(turns == 18);
  const std::string corpus_path = (dir / "corpus.jsonl").string();
  REQUIRE(avsd_corpus_save(corpus, corpus_path.c_str()) == AVSD_OK);

  avsd_topic_model* topics = nullptr;
  REQUIRE(avsd_topic_model_fit(corpus, R"({"num_topics": 2, "iterations": 30, "rng_seed": 1})",
                               &topics) == AVSD_OK);
  size_t k = 0;
  REQUIRE(avsd_topic_model_num_topics(topics, &k) == AVSD_OK);
  CHECK(k == 2);
  char* words = nullptr;
  REQUIRE(avsd_topic_model_top_words(topics, 1, 3, &words) == AVSD_OK);
  CHECK(json::parse(take(words)).size() == 3);
  CHECK(avsd_topic_model_top_words(topics, 5, 3, &words) == AVSD_INVALID_ARGUMENT);
  double theta[2] = {0, 0};
  REQUIRE(avsd_topic_model_infer(topics, "pan onion kitchen", 10, 3, theta, 2) == AVSD_OK);
  CHECK(theta[0] + theta[1] == doctest::Approx(1.0));
  CHECK(avsd_topic_model_infer(topics, "pan", 10, 3, theta, 3) == AVSD_INVALID_ARGUMENT);
  const std::string topics_path = (dir / "topics.json").string();
  REQUIRE(avsd_topic_model_save(topics, topics_path.c_str()) == AVSD_OK);
  avsd_topic_model* reloaded = nullptr;
  REQUIRE(avsd_topic_model_load(topics_path.c_str(), &reloaded) == AVSD_OK);
  avsd_topic_model_free(reloaded);
  avsd_topic_model_free(topics);
  avsd_corpus_free(corpus);

  const json train = {
      {"train_corpus", corpus_path},
      {"out", (dir / "run").string()},
      {"model", {{"embed_dim", 8}, {"word_hidden", 8}, {"sent_hidden", 8},
                 {"question_hidden", 8}, {"decoder_hidden", 8},
                 {"attention_variant", "sent_all"}}},
      {"train", {{"epochs", 2}, {"batch_size", 3}}}};
  char* summary = nullptr;
  REQUIRE(avsd_run_command("train", train.dump().c_str(), &summary) == AVSD_OK);
  CHECK(json::parse(take(summary)).is_object());

  avsd_model* model = nullptr;
  const std::string ckpt = (dir / "run" / "checkpoints" / "last.ckpt").string();
  REQUIRE(avsd_model_load(ckpt.c_str(), &model) == AVSD_OK);
  std::string line = slurp(corpus_path);
  line = line.substr(0, line.find('\n'));
  char* result = nullptr;
  REQUIRE(avsd_model_generate(model, line.c_str(), 2, R"({"max_length": 4})", &result) == AVSD_OK);
  const json g = json::parse(take(result));
  CHECK(g.at("tokens").size() <= 4);
  CHECK(g.at("attention").size() == g.at("tokens").size() + (g.at("finished") ? 1 : 0));
  REQUIRE(avsd_model_generate(model, line.c_str(), 2, R"({"mode": "beam", "beam_width": 1, "max_length": 4})",
                              &result) == AVSD_OK);
  CHECK(json::parse(take(result)).at("tokens") == g.at("tokens"));
  CHECK(avsd_model_generate(model, line.c_str(), 9, nullptr, &result) == AVSD_INVALID_ARGUMENT);
  CHECK(avsd_model_generate(model, line.c_str(), 0, R"({"mode": "sample"})", &result) == AVSD_CONFIG_ERROR);
  avsd_model_free(model);

  // Evaluate the references against themselves.
  const std::string hyp_path = (dir / "hyp.jsonl").string();
  {
    std::istringstream lines(slurp(corpus_path));
    std::ofstream out(hyp_path);
    for (std::string l; std::getline(lines, l);) {
      const json d = json::parse(l);
      for (const auto& t : d.at("turns")) {
        out << json{{"dialog_id", d.at("dialog_id")}, {"turn_index", t.at("turn_index")},
                    {"hypothesis", t.at("answer")}}.dump() << "\n";
      }
    }
  }
  char* report = nullptr;
  REQUIRE(avsd_metrics_evaluate_file(hyp_path.c_str(), corpus_path.c_str(),
                                     R"({"subsets": ["binary"]})", &report) == AVSD_OK);
  const json r = json::parse(take(report));
  CHECK(r.at("all").at("bleu")[3] == doctest::Approx(1.0));
  CHECK(r.at("subsets").contains("binary"));
}

TEST_CASE("gradcheck command reports a failed check") {
  char* summary = nullptr;
  const avsd_status s =
      avsd_run_command("gradcheck", R"({"inject_bug": true, "max_coords_per_param": 2})", &summary);
  CHECK(s == AVSD_CHECK_FAILED);
  const json j = json::parse(take(summary));
  CHECK(j.is_object());
}
