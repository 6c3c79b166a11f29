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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpus/dialog.hpp"
#include "corpus/io.hpp"
#include "model/config.hpp"
#include "nn/ops.hpp"
#include "nn/parameter.hpp"
#include "nn/tape.hpp"

namespace avsd::model {

// One dialog in model-ready form: token ids, mean-pooled modality features
// and the topic distributions each turn needs.
struct DialogInput {
  std::string dialog_id;
  std::vector<std::vector<int>> questions;
  std::vector<std::vector<int>> answers;
  std::vector<std::size_t> turn_index;
  // modality name -> pooled feature vector; absent modalities are zero
  std::map<std::string, std::vector<double>> pooled;
  // theta of each turn's own question+answer (history_feature mode)
  std::vector<std::vector<double>> turn_theta;
  // theta of each turn's context text (decoder_feature, topic_embedding)
  std::vector<std::vector<double>> context_theta;

  std::size_t num_turns() const { return questions.size(); }
};

// Training / evaluation sample: answer turn `turn` of `dialog`.
struct Example {
  const DialogInput* dialog = nullptr;
  std::size_t turn = 0;
};

std::vector<Example> all_examples(const std::vector<DialogInput>& dialogs);

// Parameters bound to one tape. Built in trainable mode (gradients flow
// into the parameters) or frozen mode (parameters are constants).
struct Bound;

// Word-level and sentence-level encodings of a dialog's turns. Because the
// sentence LSTM runs left to right, the first t entries are exactly the
// history of turn t.
struct HistoryEncoding {
  std::vector<nn::Var> word_states;  // per turn: n_j x word_hidden
  std::vector<nn::Var> last_states;  // per turn: 1 x word_hidden
  std::vector<nn::Var> sent_states;  // per turn: 1 x sent_hidden
};

struct StepOutput {
  nn::Var logits;  // 1 x vocab
  nn::LstmState state;
  std::vector<double> attention;  // weights over the memory rows
};

struct DecodeOptions {
  bool beam = false;
  std::size_t beam_width = 1;
  std::size_t max_length = 20;
  double length_penalty = 0.0;
};

struct Generation {
  std::vector<int> ids;  // without the trailing EOS
  double log_prob = 0.0;
  bool finished = false;
  std::vector<std::vector<double>> attention;  // one row per generated step
};

// Dot products x_i · q_j for a bilinear score; exposed for tests.
struct AttentionResult {
  nn::Var context;
  nn::Var weights;
};
// weights = masked_softmax((query W) memoryᵀ), context = weights memory.
AttentionResult attend(nn::Var query, nn::Var memory,
                       const std::vector<bool>& mask, nn::Var w);

class AvsdModel {
 public:
  explicit AvsdModel(ModelConfig config);
  AvsdModel(AvsdModel&&) = default;
  AvsdModel& operator=(AvsdModel&&) = default;
  ~AvsdModel();

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  // Copies matched rows of a pretrained table into the embedding.
  void load_pretrained(const corpus::WordVectors& vectors);

  std::size_t memory_dim() const;

  // Mean token loss of each example's answer + EOS under teacher forcing,
  // averaged over examples.
  nn::Var forward_loss(nn::Tape& tape, const std::vector<Example>& examples);
  double evaluate_loss(const std::vector<Example>& examples) const;

  Generation generate(const DialogInput& dialog, std::size_t turn,
                      const DecodeOptions& options) const;

  // Pieces of the forward pass, exposed for tests.
  nn::Var encode_question(nn::Tape& tape, const std::vector<int>& ids) const;
  HistoryEncoding encode_history(nn::Tape& tape, const DialogInput& dialog,
                                 std::size_t turns) const;
  // Returns an invalid Var when the model has no modalities.
  nn::Var encode_modalities(nn::Tape& tape, const DialogInput& dialog) const;
  nn::Var encode_modalities(
      nn::Tape& tape,
      const std::map<std::string, corpus::FeatureTrack>& tracks) const;

 private:
  struct TurnContext;

  Bound bind(nn::Tape& tape, bool trainable) const;
  nn::Var question_states(const Bound& b, const std::vector<int>& ids) const;
  HistoryEncoding history(const Bound& b, const DialogInput& d,
                          std::size_t turns) const;
  nn::Var modalities(const Bound& b,
                     const std::map<std::string, std::vector<double>>& pooled) const;
  TurnContext turn_context(const Bound& b, const DialogInput& d, std::size_t turn,
                           const HistoryEncoding& hist, nn::Var av) const;
  nn::Var step_features(const Bound& b, const TurnContext& ctx, int prev_id,
                        nn::LstmState& state, std::vector<double>* attention) const;
  nn::Var example_loss(const Bound& b, const TurnContext& ctx,
                       const std::vector<int>& answer) const;
  double dialog_loss_sum(nn::Tape& tape, bool trainable,
                         const std::vector<Example>& examples,
                         std::vector<nn::Var>* losses) const;

  ModelConfig config_;
  nn::ParameterSet params_;
};

}  // namespace avsd::model
