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

#include "avsd/avsd.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "common/error.hpp"
#include "corpus/io.hpp"
#include "corpus/synth.hpp"
#include "corpus/tokenizer.hpp"
#include "metrics/metrics.hpp"
#include "model/prepare.hpp"
#include "model/trainer.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/config_reader.hpp"
#include "topics/lda.hpp"

using nlohmann::json;

struct avsd_corpus {
  avsd::corpus::Corpus corpus;
};

struct avsd_topic_model {
  avsd::topics::TopicModel model;
};

struct avsd_model {
  avsd::model::ModelBundle bundle;
};

namespace {

thread_local std::string g_last_error;

avsd_status fail(avsd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
avsd_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const avsd::Error& e) {
    return fail(static_cast<avsd_status>(static_cast<int>(e.code())), e.what());
  } catch (const json::exception& e) {
    return fail(AVSD_SCHEMA_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AVSD_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(AVSD_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(AVSD_INTERNAL_ERROR, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* name) {
  if (p == nullptr) throw avsd::InvalidArgument(std::string(name) + " must not be NULL");
}

json parse_config(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw avsd::ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

extern "C" {

const char* avsd_version(void) { return "1.0.0"; }

const char* avsd_status_name(avsd_status status) {
  switch (status) {
    case AVSD_OK: return "ok";
    case AVSD_INVALID_ARGUMENT: return "invalid-argument";
    case AVSD_FORMAT_ERROR: return "format-error";
    case AVSD_SCHEMA_ERROR: return "schema-error";
    case AVSD_IO_ERROR: return "io-error";
    case AVSD_CONFIG_ERROR: return "config-error";
    case AVSD_USAGE_ERROR: return "usage-error";
    case AVSD_INTERNAL_ERROR: return "internal-error";
    case AVSD_CHECK_FAILED: return "check-failed";
  }
  return "unknown";
}

const char* avsd_last_error(void) { return g_last_error.c_str(); }

void avsd_string_free(char* s) { std::free(s); }

avsd_status avsd_run_command(const char* command, const char* config_json, char** summary_json) {
  return guarded([&] {
    need(command, "command");
    need(summary_json, "summary_json");
    *summary_json = nullptr;
    const auto result = avsd::pipeline::run_command(command, parse_config(config_json, "config"));
    *summary_json = dup_string(result.summary.dump(2));
    if (!result.ok) return fail(AVSD_CHECK_FAILED, std::string(command) + ": check failed");
    return AVSD_OK;
  });
}

avsd_status avsd_corpus_load(const char* path, avsd_corpus** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string p = path;
    auto c = std::make_unique<avsd_corpus>();
    c->corpus = p.size() >= 6 && p.compare(p.size() - 6, 6, ".jsonl") == 0
                    ? avsd::corpus::load_corpus_jsonl(p)
                    : avsd::corpus::load_avsd_json(p);
    *out = c.release();
    return AVSD_OK;
  });
}

avsd_status avsd_corpus_synthesize(const char* spec_json, avsd_corpus** out) {
  return guarded([&] {
    need(out, "out");
    avsd::pipeline::ConfigReader r(parse_config(spec_json, "spec_json"), "spec_json");
    avsd::corpus::SynthSpec spec;
    spec.n_dialogs = r.get("n_dialogs", spec.n_dialogs);
    spec.n_turns_per_dialog = r.get("n_turns_per_dialog", spec.n_turns_per_dialog);
    spec.n_topic_clusters = r.get("n_topic_clusters", spec.n_topic_clusters);
    spec.coref_dependency_gap = r.get("coref_dependency_gap", spec.coref_dependency_gap);
    spec.binary_fraction = r.get("binary_fraction", spec.binary_fraction);
    spec.audio_event_classes = r.get("audio_event_classes", spec.audio_event_classes);
    spec.audio_frames = r.get("audio_frames", spec.audio_frames);
    spec.rng_seed = r.get("rng_seed", spec.rng_seed);
    r.finish();
    auto c = std::make_unique<avsd_corpus>();
    c->corpus = avsd::corpus::synthesize_corpus(spec);
    *out = c.release();
    return AVSD_OK;
  });
}

avsd_status avsd_corpus_save(const avsd_corpus* corpus, const char* path) {
  return guarded([&] {
    need(corpus, "corpus");
    need(path, "path");
    avsd::corpus::save_corpus_jsonl(corpus->corpus, path);
    return AVSD_OK;
  });
}

avsd_status avsd_corpus_counts(const avsd_corpus* corpus, size_t* dialogs, size_t* turns) {
  return guarded([&] {
    need(corpus, "corpus");
    if (dialogs) *dialogs = corpus->corpus.dialogs.size();
    if (turns) *turns = corpus->corpus.turn_count();
    return AVSD_OK;
  });
}

void avsd_corpus_free(avsd_corpus* corpus) { delete corpus; }

avsd_status avsd_topic_model_fit(const avsd_corpus* corpus, const char* params_json,
                                 avsd_topic_model** out) {
  return guarded([&] {
    need(corpus, "corpus");
    need(out, "out");
    avsd::pipeline::ConfigReader r(parse_config(params_json, "params_json"), "params_json");
    avsd::topics::TopicParams p;
    p.num_topics = r.get("num_topics", p.num_topics);
    p.alpha = r.get("alpha", p.alpha);
    p.beta = r.get("beta", p.beta);
    p.iterations = r.get("iterations", p.iterations);
    p.seed_confidence = r.get("seed_confidence", 0.9);
    p.rng_seed = r.get("rng_seed", p.rng_seed);
    const auto seeds =
        r.get("seeds", std::map<std::string, std::vector<std::string>>{});
    const bool guided = r.has("seeds");
    for (const auto& [key, words] : seeds) {
      if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos) {
        throw avsd::ConfigError("params_json.seeds key '" + key + "' is not a topic index");
      }
      p.seed_sets[std::stoul(key)] = words;
    }
    const auto category =
        avsd::topics::parse_doc_category(r.get("category", std::string("qa_pairs")));
    r.finish();
    const auto tc = avsd::topics::TopicCorpus::from_token_docs(
        avsd::topics::category_documents(corpus->corpus, category),
        avsd::topics::default_stopwords());
    auto m = std::make_unique<avsd_topic_model>(avsd_topic_model{
        guided ? avsd::topics::fit_guided_lda(tc, p) : avsd::topics::fit_lda(tc, p)});
    *out = m.release();
    return AVSD_OK;
  });
}

avsd_status avsd_topic_model_load(const char* path, avsd_topic_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new avsd_topic_model{avsd::topics::load_topic_model(path)};
    return AVSD_OK;
  });
}

avsd_status avsd_topic_model_save(const avsd_topic_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    avsd::topics::save_topic_model(model->model, path);
    return AVSD_OK;
  });
}

avsd_status avsd_topic_model_num_topics(const avsd_topic_model* model, size_t* k) {
  return guarded([&] {
    need(model, "model");
    need(k, "k");
    *k = model->model.num_topics();
    return AVSD_OK;
  });
}

avsd_status avsd_topic_model_top_words(const avsd_topic_model* model, size_t topic, size_t n,
                                       char** words_json) {
  return guarded([&] {
    need(model, "model");
    need(words_json, "words_json");
    *words_json = dup_string(json(avsd::topics::top_words(model->model, topic, n)).dump());
    return AVSD_OK;
  });
}

avsd_status avsd_topic_model_infer(const avsd_topic_model* model, const char* text,
                                   size_t iterations, uint64_t seed, double* theta,
                                   size_t theta_len) {
  return guarded([&] {
    need(model, "model");
    need(text, "text");
    need(theta, "theta");
    if (theta_len != model->model.num_topics()) {
      throw avsd::InvalidArgument("theta_len must equal the number of topics");
    }
    const auto v = avsd::topics::infer_theta(model->model, avsd::corpus::tokenize(text),
                                             iterations, seed);
    std::copy(v.begin(), v.end(), theta);
    return AVSD_OK;
  });
}

void avsd_topic_model_free(avsd_topic_model* model) { delete model; }

avsd_status avsd_model_load(const char* checkpoint_path, avsd_model** out) {
  return guarded([&] {
    need(checkpoint_path, "checkpoint_path");
    need(out, "out");
    *out = new avsd_model{avsd::model::load_model_checkpoint(checkpoint_path)};
    return AVSD_OK;
  });
}

avsd_status avsd_model_generate(const avsd_model* model, const char* dialog_json, size_t turn,
                                const char* decode_json, char** result_json) {
  return guarded([&] {
    need(model, "model");
    need(dialog_json, "dialog_json");
    need(result_json, "result_json");
    const auto& b = model->bundle;
    avsd::corpus::Corpus c;
    c.dialogs.push_back(avsd::corpus::parse_dialog_line(dialog_json, "."));
    for (auto& t : c.dialogs.front().turns) {
      if (t.answer.empty()) t.answer = {"<unk>"};
    }
    const auto inputs = avsd::model::prepare_dialogs(c, b.vocab, b.model.config(),
                                                     b.topics ? &*b.topics : nullptr);
    avsd::pipeline::ConfigReader d(parse_config(decode_json, "decode_json"), "decode_json");
    avsd::model::DecodeOptions opts;
    const std::string mode = d.get("mode", std::string("greedy"));
    if (mode != "greedy" && mode != "beam") {
      throw avsd::ConfigError("decode mode must be 'greedy' or 'beam'");
    }
    opts.beam = mode == "beam";
    opts.beam_width = d.get("beam_width", opts.beam_width);
    opts.max_length = d.get("max_length", opts.max_length);
    opts.length_penalty = d.get("length_penalty", opts.length_penalty);
    d.finish();
    const auto g = b.model.generate(inputs.front(), turn, opts);
    const json out = {{"tokens", b.vocab.decode(g.ids)},
                      {"log_prob", g.log_prob},
                      {"finished", g.finished},
                      {"attention", g.attention}};
    *result_json = dup_string(out.dump());
    return AVSD_OK;
  });
}

void avsd_model_free(avsd_model* model) { delete model; }

avsd_status avsd_metrics_evaluate_file(const char* hypotheses_path, const char* corpus_path,
                                       const char* options_json, char** report_json) {
  return guarded([&] {
    need(hypotheses_path, "hypotheses_path");
    need(corpus_path, "corpus_path");
    need(report_json, "report_json");
    avsd::pipeline::ConfigReader o(parse_config(options_json, "options_json"), "options_json");
    avsd::metrics::EvalOptions opts;
    const auto subsets = o.get("subsets", std::vector<std::string>{});
    o.finish();
    for (const auto& s : subsets) {
      if (s == "coref") {
        opts.coref = true;
      } else if (s == "audio") {
        opts.audio = true;
      } else if (s == "binary") {
        opts.binary = true;
      } else {
        throw avsd::ConfigError("unknown subset '" + s + "'");
      }
    }
    const std::string cp = corpus_path;
    const auto corpus = cp.size() >= 6 && cp.compare(cp.size() - 6, 6, ".jsonl") == 0
                            ? avsd::corpus::load_corpus_jsonl(cp)
                            : avsd::corpus::load_avsd_json(cp);
    const auto pairs =
        avsd::metrics::join_pairs(avsd::metrics::load_hypotheses(hypotheses_path), corpus);
    if (pairs.empty()) throw avsd::InvalidArgument("no hypotheses to evaluate");
    *report_json =
        dup_string(avsd::metrics::to_json(avsd::metrics::evaluate_pairs(pairs, opts)).dump(2));
    return AVSD_OK;
  });
}

}  // extern "C"
