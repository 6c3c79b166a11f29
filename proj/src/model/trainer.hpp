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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/rng.hpp"
#include "corpus/vocab.hpp"
#include "model/avsd_model.hpp"
#include "nn/checkpoint.hpp"
#include "nn/optimizer.hpp"
#include "topics/lda.hpp"

namespace avsd::model {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;

  bool operator==(const EpochRecord&) const = default;
};

// Everything besides the parameters that an exact resume needs.
struct TrainingState {
  std::size_t epochs_done = 0;
  nn::OptimizerConfig optimizer;
  std::uint64_t optimizer_steps = 0;
  std::map<std::string, nn::Optimizer::Moments> moments;
  std::string rng_state;
  std::vector<EpochRecord> history;
  std::optional<double> best_loss;
  std::size_t best_epoch = 0;
};

struct ModelBundle {
  AvsdModel model;
  corpus::Vocab vocab;
  std::optional<topics::TopicModel> topics;
  std::optional<TrainingState> training;
};

void save_model_checkpoint(const std::filesystem::path& path, const AvsdModel& model,
                           const corpus::Vocab& vocab, const topics::TopicModel* topics,
                           const TrainingState* training);
ModelBundle load_model_checkpoint(const std::filesystem::path& path);
// Overwrites the parameters of an existing model. Throws ConfigError when
// the checkpoint was written by a differently configured model and
// SchemaError naming the parameter when a tensor is missing or misshapen.
void load_parameters(AvsdModel& model, const nn::CheckpointBlob& blob);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_dialogs = 4;  // every turn of a batch's dialogs is one sample
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  // When set, last.ckpt and best.ckpt are rewritten after every epoch.
  std::filesystem::path checkpoint_dir;
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
};

class Trainer {
 public:
  Trainer(AvsdModel& model, TrainOptions options, const corpus::Vocab& vocab,
          const topics::TopicModel* topics);

  // Continues from a checkpointed state instead of starting fresh.
  void restore(const TrainingState& state);
  TrainingState state() const;

  // Trains up to options.epochs total epochs; returns the full history.
  std::vector<EpochRecord> run(const std::vector<DialogInput>& train,
                               const std::vector<DialogInput>& val);

 private:
  AvsdModel& model_;
  TrainOptions options_;
  const corpus::Vocab& vocab_;
  const topics::TopicModel* topics_;
  nn::Optimizer optimizer_;
  Rng rng_;
  std::vector<EpochRecord> history_;
  std::optional<double> best_loss_;
  std::size_t best_epoch_ = 0;
};

}  // namespace avsd::model
