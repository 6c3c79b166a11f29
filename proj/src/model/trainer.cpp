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

#include "model/trainer.hpp"

#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace avsd::model {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "avsd-model";
constexpr int kVersion = 1;

json optimizer_json(const nn::OptimizerConfig& c) {
  return {{"kind", nn::to_string(c.kind)}, {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},              {"beta2", c.beta2},
          {"epsilon", c.epsilon},          {"clip_norm", c.clip_norm}};
}

nn::OptimizerConfig optimizer_from_json(const json& j) {
  nn::OptimizerConfig c;
  c.kind = nn::parse_optimizer_kind(j.at("kind").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  return c;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

const std::string kMomentM = "optim.m/";
const std::string kMomentV = "optim.v/";

}  // namespace

void save_model_checkpoint(const std::filesystem::path& path, const AvsdModel& model,
                           const corpus::Vocab& vocab, const topics::TopicModel* topics,
                           const TrainingState* training) {
  json header = {{"format", kFormat}, {"version", kVersion}, {"config", to_json(model.config())},
                 {"vocab", vocab.tokens()}};
  header["topic_model"] = topics ? json::parse(topics::topic_model_to_json(*topics)) : json(nullptr);
  nn::CheckpointBlob blob;
  const nn::ParameterSet& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) blob.tensors.emplace_back(ps[i].name, ps[i].value);
  if (training) {
    json hist = json::array();
    for (const auto& r : training->history) {
      hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss},
                      {"val_loss", optional_json(r.val_loss)}});
    }
    header["training"] = {{"epochs_done", training->epochs_done},
                          {"optimizer", optimizer_json(training->optimizer)},
                          {"optimizer_steps", training->optimizer_steps},
                          {"rng_state", training->rng_state},
                          {"history", hist},
                          {"best_loss", optional_json(training->best_loss)},
                          {"best_epoch", training->best_epoch}};
    for (const auto& [name, m] : training->moments) {
      blob.tensors.emplace_back(kMomentM + name, m.m);
      blob.tensors.emplace_back(kMomentV + name, m.v);
    }
  } else {
    header["training"] = nullptr;
  }
  blob.header_json = header.dump();
  nn::write_checkpoint(blob, path);
}

void load_parameters(AvsdModel& model, const nn::CheckpointBlob& blob) {
  json header;
  try {
    header = json::parse(blob.header_json);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kFormat) {
    throw SchemaError("checkpoint is not an avsd model checkpoint");
  }
  if (header.value("version", 0) != kVersion) {
    throw SchemaError("unsupported model checkpoint version");
  }
  const ModelConfig stored = model_config_from_json(header.at("config"));
  const std::string diff = first_difference(stored, model.config());
  if (!diff.empty()) {
    throw ConfigError("checkpoint config mismatch in '" + diff + "': checkpoint has " +
                      to_json(stored).at(diff).dump() + ", model has " +
                      to_json(model.config()).at(diff).dump());
  }
  nn::ParameterSet& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    nn::Parameter& p = ps[i];
    const nn::Tensor* t = blob.find(p.name);
    if (t == nullptr) throw SchemaError("checkpoint is missing parameter '" + p.name + "'");
    if (!t->same_shape(p.value)) {
      throw SchemaError("checkpoint parameter '" + p.name + "' has shape " + t->shape_string() +
                        ", expected " + p.value.shape_string());
    }
  }
  for (const auto& [name, t] : blob.tensors) {
    if (name.rfind("optim.", 0) == 0) continue;
    if (!ps.contains(name)) throw SchemaError("checkpoint has unknown parameter '" + name + "'");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].value = *blob.find(ps[i].name);
}

ModelBundle load_model_checkpoint(const std::filesystem::path& path) {
  nn::CheckpointBlob blob = nn::read_checkpoint(path);
  json header;
  try {
    header = json::parse(blob.header_json);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    if (!header.is_object() || header.value("format", "") != kFormat) {
      throw SchemaError("'" + path.string() + "' is not an avsd model checkpoint");
    }
    AvsdModel model(model_config_from_json(header.at("config")));
    load_parameters(model, blob);
    corpus::Vocab vocab =
        corpus::Vocab::from_token_list(header.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != model.config().vocab_size) {
      throw SchemaError("checkpoint vocabulary size does not match its model config");
    }
    std::optional<topics::TopicModel> tm;
    if (!header.at("topic_model").is_null()) {
      tm = topics::load_topic_model_json(header.at("topic_model").dump());
    }
    std::optional<TrainingState> training;
    const json& tj = header.at("training");
    if (!tj.is_null()) {
      TrainingState s;
      s.epochs_done = tj.at("epochs_done").get<std::size_t>();
      s.optimizer = optimizer_from_json(tj.at("optimizer"));
      s.optimizer_steps = tj.at("optimizer_steps").get<std::uint64_t>();
      s.rng_state = tj.at("rng_state").get<std::string>();
      for (const auto& r : tj.at("history")) {
        s.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                             optional_from(r.at("val_loss"))});
      }
      s.best_loss = optional_from(tj.at("best_loss"));
      s.best_epoch = tj.at("best_epoch").get<std::size_t>();
      for (const auto& [name, t] : blob.tensors) {
        if (name.rfind(kMomentM, 0) == 0) s.moments[name.substr(kMomentM.size())].m = t;
        if (name.rfind(kMomentV, 0) == 0) s.moments[name.substr(kMomentV.size())].v = t;
      }
      training = std::move(s);
    }
    return ModelBundle{std::move(model), std::move(vocab), std::move(tm), std::move(training)};
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint header: " + std::string(e.what()));
  }
}

void TrainOptions::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_dialogs < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(optimizer.learning_rate >= 0.0) || !std::isfinite(optimizer.learning_rate)) {
    throw InvalidArgument("learning_rate must be a finite number >= 0");
  }
  if (optimizer.clip_norm < 0.0) throw InvalidArgument("clip_norm must be >= 0");
}

Trainer::Trainer(AvsdModel& model, TrainOptions options, const corpus::Vocab& vocab,
                 const topics::TopicModel* topics)
    : model_(model),
      options_(std::move(options)),
      vocab_(vocab),
      topics_(topics),
      optimizer_(options_.optimizer),
      rng_(mix_seed(options_.seed, 0x747261696eULL)) {
  options_.validate();
}

void Trainer::restore(const TrainingState& s) {
  if (!(s.optimizer == options_.optimizer)) {
    throw ConfigError("resumed optimizer settings differ from the checkpoint");
  }
  optimizer_.restore(s.optimizer_steps, s.moments);
  rng_.deserialize(s.rng_state);
  history_ = s.history;
  best_loss_ = s.best_loss;
  best_epoch_ = s.best_epoch;
}

TrainingState Trainer::state() const {
  TrainingState s;
  s.epochs_done = history_.size();
  s.optimizer = optimizer_.config();
  s.optimizer_steps = optimizer_.steps();
  s.moments = optimizer_.moments();
  s.rng_state = rng_.serialize();
  s.history = history_;
  s.best_loss = best_loss_;
  s.best_epoch = best_epoch_;
  return s;
}

std::vector<EpochRecord> Trainer::run(const std::vector<DialogInput>& train,
                                      const std::vector<DialogInput>& val) {
  if (train.empty()) throw InvalidArgument("training set is empty");
  const std::vector<Example> val_examples = all_examples(val);
  std::vector<std::size_t> order(train.size());
  const bool freeze_embed = !model_.config().embeddings_trainable;
  for (std::size_t epoch = history_.size() + 1; epoch <= options_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng_.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t samples = 0;
    nn::Tape tape;
    for (std::size_t start = 0; start < order.size(); start += options_.batch_dialogs) {
      const std::size_t end = std::min(order.size(), start + options_.batch_dialogs);
      std::vector<Example> batch;
      for (std::size_t i = start; i < end; ++i) {
        const DialogInput& d = train[order[i]];
        for (std::size_t t = 0; t < d.num_turns(); ++t) batch.push_back({&d, t});
      }
      if (batch.empty()) continue;
      tape.reset();
      nn::Var loss = model_.forward_loss(tape, batch);
      loss_sum += loss.value()[0] * static_cast<double>(batch.size());
      samples += batch.size();
      tape.backward(loss);
      if (freeze_embed) model_.params().get("embed.tokens").grad.fill(0.0);
      optimizer_.step(model_.params());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = samples ? loss_sum / static_cast<double>(samples) : 0.0;
    if (!val_examples.empty()) rec.val_loss = model_.evaluate_loss(val_examples);
    history_.push_back(rec);
    const double score = rec.val_loss.value_or(rec.train_loss);
    const bool improved = !best_loss_ || score < *best_loss_;
    if (improved) {
      best_loss_ = score;
      best_epoch_ = epoch;
    }
    if (!options_.checkpoint_dir.empty()) {
      const TrainingState s = state();
      save_model_checkpoint(options_.checkpoint_dir / "last.ckpt", model_, vocab_, topics_, &s);
      if (improved) {
        save_model_checkpoint(options_.checkpoint_dir / "best.ckpt", model_, vocab_, topics_, &s);
      }
    }
    if (options_.on_epoch) options_.on_epoch(rec);
  }
  return history_;
}

}  // namespace avsd::model
