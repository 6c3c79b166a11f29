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

#ifndef AVSD_AVSD_H_
#define AVSD_AVSD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AVSD_API __declspec(dllexport)
#else
#define AVSD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avsd_status {
  AVSD_OK = 0,
  AVSD_INVALID_ARGUMENT = 1,
  AVSD_FORMAT_ERROR = 2,
  AVSD_SCHEMA_ERROR = 3,
  AVSD_IO_ERROR = 4,
  AVSD_CONFIG_ERROR = 5,
  AVSD_USAGE_ERROR = 6,
  AVSD_INTERNAL_ERROR = 7,
  /* A check ran to completion and found failures (gradcheck). */
  AVSD_CHECK_FAILED = 8
} avsd_status;

AVSD_API const char* avsd_version(void);
AVSD_API const char* avsd_status_name(avsd_status status);

/* Message of the last failed call on this thread; "" when none. */
AVSD_API const char* avsd_last_error(void);

/* Frees strings returned through char** out-parameters. */
AVSD_API void avsd_string_free(char* s);

/* Runs a CLI subcommand (synth, topics, train, generate, evaluate,
 * gradcheck) on a JSON config. On success, and on AVSD_CHECK_FAILED,
 * *summary_json receives a JSON summary owned by the caller. */
AVSD_API avsd_status avsd_run_command(const char* command, const char* config_json,
                                      char** summary_json);

/* ---- corpus ---- */

typedef struct avsd_corpus avsd_corpus;

/* .jsonl files use the fixture format; anything else is read as an
 * AVSD-style JSON release. */
AVSD_API avsd_status avsd_corpus_load(const char* path, avsd_corpus** out);
/* spec_json keys as in the synth command's "synth" block plus "rng_seed". */
AVSD_API avsd_status avsd_corpus_synthesize(const char* spec_json, avsd_corpus** out);
AVSD_API avsd_status avsd_corpus_save(const avsd_corpus* corpus, const char* path);
AVSD_API avsd_status avsd_corpus_counts(const avsd_corpus* corpus, size_t* dialogs,
                                        size_t* turns);
AVSD_API void avsd_corpus_free(avsd_corpus* corpus);

/* ---- topic models ---- */

typedef struct avsd_topic_model avsd_topic_model;

/* params_json: num_topics, alpha, beta, iterations, seed_confidence,
 * rng_seed, category, seeds ({"0": ["word", ...]}). Seeds select the
 * guided fit. */
AVSD_API avsd_status avsd_topic_model_fit(const avsd_corpus* corpus, const char* params_json,
                                          avsd_topic_model** out);
AVSD_API avsd_status avsd_topic_model_load(const char* path, avsd_topic_model** out);
AVSD_API avsd_status avsd_topic_model_save(const avsd_topic_model* model, const char* path);
AVSD_API avsd_status avsd_topic_model_num_topics(const avsd_topic_model* model, size_t* k);
/* JSON array of the n most probable words of a topic. */
AVSD_API avsd_status avsd_topic_model_top_words(const avsd_topic_model* model, size_t topic,
                                                size_t n, char** words_json);
/* Fold-in theta of a whitespace-tokenized text; theta_len must equal K. */
AVSD_API avsd_status avsd_topic_model_infer(const avsd_topic_model* model, const char* text,
                                            size_t iterations, uint64_t seed, double* theta,
                                            size_t theta_len);
AVSD_API void avsd_topic_model_free(avsd_topic_model* model);

/* ---- models ---- */

typedef struct avsd_model avsd_model;

AVSD_API avsd_status avsd_model_load(const char* checkpoint_path, avsd_model** out);
/* dialog_json is one dialog in the corpus line format; the answer of turn
 * `turn` is ignored. decode_json: mode, beam_width, max_length,
 * length_penalty (may be NULL). *result_json receives
 * {"tokens": [...], "log_prob": x, "attention": [[...]]}. */
AVSD_API avsd_status avsd_model_generate(const avsd_model* model, const char* dialog_json,
                                         size_t turn, const char* decode_json,
                                         char** result_json);
AVSD_API void avsd_model_free(avsd_model* model);

/* ---- metrics ---- */

/* options_json: {"subsets": ["coref", "audio", "binary"]} (may be NULL). */
AVSD_API avsd_status avsd_metrics_evaluate_file(const char* hypotheses_path,
                                                const char* corpus_path,
                                                const char* options_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif  /* AVSD_AVSD_H_ */
