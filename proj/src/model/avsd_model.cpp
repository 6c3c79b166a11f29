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

#include "model/avsd_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/vocab.hpp"

namespace avsd::model {

using corpus::Vocab;
using nn::LstmState;
using nn::LstmWeights;
using nn::Tape;
using nn::Tensor;
using nn::Var;

struct Bound {
  Tape* tape = nullptr;
  Var embed;
  LstmWeights question;
  Var separator;
  LstmWeights word;
  LstmWeights sent;
  std::vector<std::pair<Var, Var>> modality;  // W, b per configured modality
  Var fuse_w, fuse_b;
  Var topic_embed;
  Var init_w, init_b;
  LstmWeights decoder;
  Var att_w;
  Var avp_w, avp_b;
  Var out_w, out_b;
};

struct AvsdModel::TurnContext {
  LstmState init;
  Var memory;  // invalid when there is nothing to attend to
  Var keys_t;  // decoder_hidden x rows: W_a memoryᵀ
  std::vector<bool> mask;
  Var zero_context;
  Var theta;  // decoder-input topic feature, or invalid
};

std::vector<Example> all_examples(const std::vector<DialogInput>& dialogs) {
  std::vector<Example> out;
  for (const auto& d : dialogs) {
    for (std::size_t t = 0; t < d.num_turns(); ++t) out.push_back({&d, t});
  }
  return out;
}

AttentionResult attend(Var query, Var memory, const std::vector<bool>& mask, Var w) {
  Var scores = nn::matmul(nn::matmul(query, w), nn::transpose(memory));
  Var weights = nn::masked_softmax(scores, mask);
  return {nn::matmul(weights, memory), weights};
}

namespace {

void add_lstm(nn::ParameterSet& ps, const std::string& prefix, std::size_t in,
              std::size_t hidden, Rng& rng) {
  ps.add_glorot(prefix + ".W", in, 4 * hidden, rng);
  ps.add_glorot(prefix + ".U", hidden, 4 * hidden, rng);
  nn::Parameter& b = ps.add(prefix + ".b", 1, 4 * hidden);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b.value[j] = 1.0;
}

std::size_t sent_input_dim(const ModelConfig& c) {
  return c.word_hidden + (c.topic_mode == TopicMode::kHistoryFeature ? c.num_topics : 0);
}

std::size_t init_input_dim(const ModelConfig& c) {
  std::size_t d = c.question_hidden + c.sent_hidden;
  if (!c.modalities.empty()) d += c.av_dim;
  if (c.topic_mode == TopicMode::kTopicEmbedding) d += c.topic_embed_dim;
  return d;
}

std::size_t decoder_input_dim(const ModelConfig& c) {
  return c.embed_dim + (c.topic_mode == TopicMode::kDecoderFeature ? c.num_topics : 0);
}

Var zeros(Tape& tape, std::size_t rows, std::size_t cols) {
  return tape.constant(Tensor(rows, cols));
}

const std::vector<double>& checked_theta(const std::vector<std::vector<double>>& thetas,
                                         std::size_t turn, std::size_t k, const char* what) {
  if (turn >= thetas.size() || thetas[turn].size() != k) {
    throw InvalidArgument(std::string("missing ") + what + " topic distribution for turn " +
                          std::to_string(turn));
  }
  return thetas[turn];
}

Var theta_row(Tape& tape, const std::vector<std::vector<double>>& thetas,
              std::size_t turn, std::size_t k, const char* what) {
  return tape.constant(Tensor::row(checked_theta(thetas, turn, k, what)));
}

std::vector<double> log_softmax(const Tensor& logits) {
  const double* p = logits.data();
  const std::size_t n = logits.size();
  const double m = *std::max_element(p, p + n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(p[i] - m);
  const double lse = m + std::log(s);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] - lse;
  return out;
}

template <typename Fetch>
Bound bind_with(const ModelConfig& c, Tape& tape, Fetch fetch) {
  Bound b;
  b.tape = &tape;
  auto lstm = [&](const std::string& p) {
    return LstmWeights{fetch(p + ".W"), fetch(p + ".U"), fetch(p + ".b")};
  };
  b.embed = fetch("embed.tokens");
  b.question = lstm("question.lstm");
  b.separator = fetch("history.separator");
  b.word = lstm("history.word.lstm");
  b.sent = lstm("history.sent.lstm");
  for (const auto& m : c.modalities) {
    b.modality.emplace_back(fetch("modality." + m.name + ".W"),
                            fetch("modality." + m.name + ".b"));
  }
  if (!c.modalities.empty()) {
    b.fuse_w = fetch("modality.fuse.W");
    b.fuse_b = fetch("modality.fuse.b");
  }
  if (c.topic_mode == TopicMode::kTopicEmbedding) b.topic_embed = fetch("topic.embed");
  b.init_w = fetch("decoder.init.W");
  b.init_b = fetch("decoder.init.b");
  b.decoder = lstm("decoder.lstm");
  if (c.attention != AttentionVariant::kNone) b.att_w = fetch("attention.W");
  if (c.attention == AttentionVariant::kSentAllStatesPlusAv) {
    b.avp_w = fetch("attention.av.W");
    b.avp_b = fetch("attention.av.b");
  }
  b.out_w = fetch("decoder.out.W");
  b.out_b = fetch("decoder.out.b");
  return b;
}

// Runs an LSTM over the rows of `inputs`; returns the hidden states.
std::vector<Var> run_lstm(Var inputs, const LstmWeights& w, std::size_t hidden) {
  Tape& tape = *inputs.tape;
  LstmState s{zeros(tape, 1, hidden), zeros(tape, 1, hidden)};
  std::vector<Var> hs;
  hs.reserve(inputs.rows());
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    s = nn::lstm_step(nn::slice_rows(inputs, r, r + 1), s, w);
    hs.push_back(s.h);
  }
  return hs;
}

}  // namespace

AvsdModel::AvsdModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const ModelConfig& c = config_;
  Rng rng(mix_seed(c.rng_seed, 0x6d6f64656cULL));
  params_.add_glorot("embed.tokens", c.vocab_size, c.embed_dim, rng);
  add_lstm(params_, "question.lstm", c.embed_dim, c.question_hidden, rng);
  params_.add_glorot("history.separator", 1, c.embed_dim, rng);
  add_lstm(params_, "history.word.lstm", c.embed_dim, c.word_hidden, rng);
  add_lstm(params_, "history.sent.lstm", sent_input_dim(c), c.sent_hidden, rng);
  for (const auto& m : c.modalities) {
    params_.add_glorot("modality." + m.name + ".W", m.dim, c.modality_proj_dim, rng);
    params_.add("modality." + m.name + ".b", 1, c.modality_proj_dim);
  }
  if (!c.modalities.empty()) {
    params_.add_glorot("modality.fuse.W", c.modality_proj_dim * c.modalities.size(),
                       c.av_dim, rng);
    params_.add("modality.fuse.b", 1, c.av_dim);
  }
  if (c.topic_mode == TopicMode::kTopicEmbedding) {
    params_.add_glorot("topic.embed", c.num_topics, c.topic_embed_dim, rng);
  }
  params_.add_glorot("decoder.init.W", init_input_dim(c), c.decoder_hidden, rng);
  params_.add("decoder.init.b", 1, c.decoder_hidden);
  add_lstm(params_, "decoder.lstm", decoder_input_dim(c), c.decoder_hidden, rng);
  if (c.attention != AttentionVariant::kNone) {
    params_.add_glorot("attention.W", c.decoder_hidden, memory_dim(), rng);
  }
  if (c.attention == AttentionVariant::kSentAllStatesPlusAv) {
    params_.add_glorot("attention.av.W", c.av_dim, c.sent_hidden, rng);
    params_.add("attention.av.b", 1, c.sent_hidden);
  }
  const std::size_t out_in =
      c.decoder_hidden + (c.attention == AttentionVariant::kNone ? 0 : memory_dim());
  params_.add_glorot("decoder.out.W", out_in, c.vocab_size, rng);
  params_.add("decoder.out.b", 1, c.vocab_size);
}

AvsdModel::~AvsdModel() = default;

std::size_t AvsdModel::memory_dim() const {
  switch (config_.attention) {
    case AttentionVariant::kNone:
      return 0;
    case AttentionVariant::kWordAllStates:
    case AttentionVariant::kWordLastStates:
      return config_.word_hidden;
    case AttentionVariant::kSentAllStates:
    case AttentionVariant::kSentAllStatesPlusAv:
      return config_.sent_hidden;
  }
  return 0;
}

void AvsdModel::load_pretrained(const corpus::WordVectors& vectors) {
  if (vectors.dim != config_.embed_dim) {
    throw InvalidArgument("pretrained vectors have dim " + std::to_string(vectors.dim) +
                          ", embedding dim is " + std::to_string(config_.embed_dim));
  }
  if (vectors.present.size() != config_.vocab_size) {
    throw InvalidArgument("pretrained table covers " + std::to_string(vectors.present.size()) +
                          " tokens, vocabulary has " + std::to_string(config_.vocab_size));
  }
  Tensor& table = params_.get("embed.tokens").value;
  for (std::size_t r = 0; r < config_.vocab_size; ++r) {
    if (!vectors.present[r]) continue;
    std::copy_n(vectors.rows.begin() + static_cast<std::ptrdiff_t>(r * vectors.dim),
                vectors.dim, table.row_ptr(r));
  }
}

Bound AvsdModel::bind(Tape& tape, bool trainable) const {
  if (trainable) {
    auto& ps = const_cast<nn::ParameterSet&>(params_);
    return bind_with(config_, tape, [&](const std::string& n) { return tape.param(ps.get(n)); });
  }
  return bind_with(config_, tape, [&](const std::string& n) { return tape.frozen(params_.get(n)); });
}

Var AvsdModel::question_states(const Bound& b, const std::vector<int>& ids) const {
  if (ids.empty()) return zeros(*b.tape, 1, config_.question_hidden);
  return run_lstm(nn::row_lookup(b.embed, ids), b.question, config_.question_hidden).back();
}

HistoryEncoding AvsdModel::history(const Bound& b, const DialogInput& d,
                                   std::size_t turns) const {
  Tape& tape = *b.tape;
  const bool keep_words = config_.attention == AttentionVariant::kWordAllStates;
  const bool theta_input = config_.topic_mode == TopicMode::kHistoryFeature;
  HistoryEncoding h;
  LstmState s{zeros(tape, 1, config_.sent_hidden), zeros(tape, 1, config_.sent_hidden)};
  for (std::size_t t = 0; t < turns; ++t) {
    std::vector<Var> parts;
    if (!d.questions[t].empty()) parts.push_back(nn::row_lookup(b.embed, d.questions[t]));
    parts.push_back(b.separator);
    if (!d.answers[t].empty()) parts.push_back(nn::row_lookup(b.embed, d.answers[t]));
    std::vector<Var> states = run_lstm(nn::concat(parts, 0), b.word, config_.word_hidden);
    h.last_states.push_back(states.back());
    if (keep_words) h.word_states.push_back(nn::concat(states, 0));
    Var x = states.back();
    if (theta_input) {
      x = nn::concat({x, theta_row(tape, d.turn_theta, t, config_.num_topics, "turn")}, 1);
    }
    s = nn::lstm_step(x, s, b.sent);
    h.sent_states.push_back(s.h);
  }
  return h;
}

Var AvsdModel::modalities(const Bound& b,
                          const std::map<std::string, std::vector<double>>& pooled) const {
  if (config_.modalities.empty()) return Var{};
  Tape& tape = *b.tape;
  std::vector<Var> slots;
  for (std::size_t m = 0; m < config_.modalities.size(); ++m) {
    const ModalitySpec& spec = config_.modalities[m];
    auto it = pooled.find(spec.name);
    if (it == pooled.end()) {
      slots.push_back(zeros(tape, 1, config_.modality_proj_dim));
      continue;
    }
    if (it->second.size() != spec.dim) {
      throw InvalidArgument("modality '" + spec.name + "' has dim " +
                            std::to_string(it->second.size()) + ", model expects " +
                            std::to_string(spec.dim));
    }
    Var x = tape.constant(Tensor::row(it->second));
    slots.push_back(nn::tanh(nn::linear(x, b.modality[m].first, b.modality[m].second)));
  }
  return nn::tanh(nn::linear(nn::concat(slots, 1), b.fuse_w, b.fuse_b));
}

AvsdModel::TurnContext AvsdModel::turn_context(const Bound& b, const DialogInput& d,
                                               std::size_t turn,
                                               const HistoryEncoding& hist, Var av) const {
  Tape& tape = *b.tape;
  const ModelConfig& c = config_;
  TurnContext ctx;
  std::vector<Var> init_parts{question_states(b, d.questions[turn])};
  init_parts.push_back(turn == 0 ? zeros(tape, 1, c.sent_hidden) : hist.sent_states[turn - 1]);
  if (av.valid()) init_parts.push_back(av);
  if (c.topic_mode == TopicMode::kTopicEmbedding) {
    const auto& v = checked_theta(d.context_theta, turn, c.num_topics, "context");
    const int top = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    init_parts.push_back(nn::row_lookup(b.topic_embed, {top}));
  }
  ctx.init.h = nn::tanh(nn::linear(nn::concat(init_parts, 1), b.init_w, b.init_b));
  ctx.init.c = zeros(tape, 1, c.decoder_hidden);
  if (c.topic_mode == TopicMode::kDecoderFeature) {
    ctx.theta = theta_row(tape, d.context_theta, turn, c.num_topics, "context");
  }

  std::vector<Var> rows;
  switch (c.attention) {
    case AttentionVariant::kNone:
      return ctx;
    case AttentionVariant::kWordAllStates:
      rows.assign(hist.word_states.begin(), hist.word_states.begin() + static_cast<std::ptrdiff_t>(turn));
      break;
    case AttentionVariant::kWordLastStates:
      rows.assign(hist.last_states.begin(), hist.last_states.begin() + static_cast<std::ptrdiff_t>(turn));
      break;
    case AttentionVariant::kSentAllStates:
    case AttentionVariant::kSentAllStatesPlusAv:
      rows.assign(hist.sent_states.begin(), hist.sent_states.begin() + static_cast<std::ptrdiff_t>(turn));
      if (c.attention == AttentionVariant::kSentAllStatesPlusAv) {
        rows.push_back(nn::tanh(nn::linear(av, b.avp_w, b.avp_b)));
      }
      break;
  }
  if (rows.empty()) {
    ctx.zero_context = zeros(tape, 1, memory_dim());
    return ctx;
  }
  ctx.memory = nn::concat(rows, 0);
  ctx.keys_t = nn::matmul(b.att_w, nn::transpose(ctx.memory));
  ctx.mask.assign(ctx.memory.rows(), true);
  return ctx;
}

Var AvsdModel::step_features(const Bound& b, const TurnContext& ctx, int prev_id,
                             LstmState& state, std::vector<double>* attention) const {
  Var x = nn::row_lookup(b.embed, {prev_id});
  if (ctx.theta.valid()) x = nn::concat({x, ctx.theta}, 1);
  state = nn::lstm_step(x, state, b.decoder);
  if (config_.attention == AttentionVariant::kNone) return state.h;
  if (!ctx.memory.valid()) {
    if (attention) attention->clear();
    return nn::concat({state.h, ctx.zero_context}, 1);
  }
  Var weights = nn::masked_softmax(nn::matmul(state.h, ctx.keys_t), ctx.mask);
  if (attention) attention->assign(weights.value().values().begin(), weights.value().values().end());
  return nn::concat({state.h, nn::matmul(weights, ctx.memory)}, 1);
}

Var AvsdModel::example_loss(const Bound& b, const TurnContext& ctx,
                            const std::vector<int>& answer) const {
  std::vector<int> targets = answer;
  targets.push_back(Vocab::kEos);
  LstmState state = ctx.init;
  std::vector<Var> features;
  features.reserve(targets.size());
  int prev = Vocab::kSos;
  for (int target : targets) {
    features.push_back(step_features(b, ctx, prev, state, nullptr));
    prev = target;
  }
  Var logits = nn::linear(nn::concat(features, 0), b.out_w, b.out_b);
  return nn::cross_entropy(logits, targets, std::vector<bool>(targets.size(), true));
}

double AvsdModel::dialog_loss_sum(Tape& tape, bool trainable,
                                  const std::vector<Example>& examples,
                                  std::vector<Var>* losses) const {
  // Group examples by dialog so each dialog's history and AV vector are
  // encoded once and shared by its turns.
  std::vector<const DialogInput*> order;
  std::unordered_map<const DialogInput*, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& e = examples[i];
    if (e.dialog == nullptr || e.turn >= e.dialog->num_turns()) {
      throw InvalidArgument("example refers to a missing turn");
    }
    if (e.dialog->answers[e.turn].empty()) {
      throw InvalidArgument("dialog '" + e.dialog->dialog_id + "' turn " +
                            std::to_string(e.turn) + " has an empty gold answer");
    }
    auto [it, fresh] = groups.try_emplace(e.dialog);
    if (fresh) order.push_back(e.dialog);
    it->second.push_back(i);
  }
  double total = 0.0;
  for (const DialogInput* d : order) {
    if (!trainable) tape.reset();
    Bound b = bind(tape, trainable);
    std::size_t max_turn = 0;
    for (std::size_t i : groups[d]) max_turn = std::max(max_turn, examples[i].turn);
    HistoryEncoding hist = history(b, *d, max_turn);
    Var av = modalities(b, d->pooled);
    for (std::size_t i : groups[d]) {
      TurnContext ctx = turn_context(b, *d, examples[i].turn, hist, av);
      Var loss = example_loss(b, ctx, d->answers[examples[i].turn]);
      total += loss.value()[0];
      if (losses) (*losses)[i] = loss;
    }
  }
  return total;
}

Var AvsdModel::forward_loss(Tape& tape, const std::vector<Example>& examples) {
  if (examples.empty()) throw InvalidArgument("forward_loss needs at least one example");
  std::vector<Var> losses(examples.size());
  dialog_loss_sum(tape, true, examples, &losses);
  return nn::mean(nn::concat(losses, 1));
}

double AvsdModel::evaluate_loss(const std::vector<Example>& examples) const {
  if (examples.empty()) throw InvalidArgument("evaluate_loss needs at least one example");
  Tape tape;
  return dialog_loss_sum(tape, false, examples, nullptr) / static_cast<double>(examples.size());
}

Var AvsdModel::encode_question(Tape& tape, const std::vector<int>& ids) const {
  if (ids.empty()) throw InvalidArgument("question has no tokens");
  return question_states(bind(tape, false), ids);
}

HistoryEncoding AvsdModel::encode_history(Tape& tape, const DialogInput& dialog,
                                          std::size_t turns) const {
  if (turns > dialog.num_turns()) throw InvalidArgument("history longer than dialog");
  return history(bind(tape, false), dialog, turns);
}

Var AvsdModel::encode_modalities(Tape& tape, const DialogInput& dialog) const {
  return modalities(bind(tape, false), dialog.pooled);
}

Var AvsdModel::encode_modalities(
    Tape& tape, const std::map<std::string, corpus::FeatureTrack>& tracks) const {
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& [name, track] : tracks) pooled[name] = track.mean_pool();
  return modalities(bind(tape, false), pooled);
}

Generation AvsdModel::generate(const DialogInput& d, std::size_t turn,
                               const DecodeOptions& options) const {
  if (turn >= d.num_turns()) throw InvalidArgument("turn out of range");
  if (options.beam && options.beam_width < 1) throw InvalidArgument("beam_width must be >= 1");
  Tape tape;
  Bound b = bind(tape, false);
  HistoryEncoding hist = history(b, d, turn);
  Var av = modalities(b, d.pooled);
  TurnContext ctx = turn_context(b, d, turn, hist, av);

  if (!options.beam) {
    Generation g;
    LstmState state = ctx.init;
    int prev = Vocab::kSos;
    std::vector<double> weights;
    for (std::size_t step = 0; step < options.max_length; ++step) {
      Var feat = step_features(b, ctx, prev, state, &weights);
      std::vector<double> lp = log_softmax(nn::linear(feat, b.out_w, b.out_b).value());
      const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      g.log_prob += lp[static_cast<std::size_t>(best)];
      g.attention.push_back(weights);
      if (best == Vocab::kEos) {
        g.finished = true;
        break;
      }
      g.ids.push_back(best);
      prev = best;
    }
    return g;
  }

  struct Hyp {
    std::vector<int> ids;
    double log_prob = 0.0;
    LstmState state;
    std::vector<std::vector<double>> attention;
  };
  auto normalized = [&](const Generation& g) {
    const double len = static_cast<double>(std::max<std::size_t>(1, g.ids.size() + (g.finished ? 1 : 0)));
    return g.log_prob / std::pow(len, options.length_penalty);
  };
  const std::size_t width = options.beam_width;
  std::vector<Hyp> live{Hyp{{}, 0.0, ctx.init, {}}};
  std::vector<Generation> finished;
  for (std::size_t step = 0; step < options.max_length && !live.empty(); ++step) {
    struct Cand {
      double log_prob;
      std::size_t hyp;
      int token;
    };
    std::vector<Cand> cands;
    std::vector<LstmState> next_states(live.size());
    std::vector<std::vector<double>> step_weights(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      next_states[h] = live[h].state;
      const int prev = live[h].ids.empty() ? Vocab::kSos : live[h].ids.back();
      Var feat = step_features(b, ctx, prev, next_states[h], &step_weights[h]);
      std::vector<double> lp = log_softmax(nn::linear(feat, b.out_w, b.out_b).value());
      for (std::size_t v = 0; v < lp.size(); ++v) {
        cands.push_back({live[h].log_prob + lp[v], h, static_cast<int>(v)});
      }
    }
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Cand& a, const Cand& c) {
                        if (a.log_prob != c.log_prob) return a.log_prob > c.log_prob;
                        if (a.hyp != c.hyp) return a.hyp < c.hyp;
                        return a.token < c.token;
                      });
    std::vector<Hyp> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Cand& cand = cands[i];
      const Hyp& parent = live[cand.hyp];
      auto attention = parent.attention;
      attention.push_back(step_weights[cand.hyp]);
      if (cand.token == Vocab::kEos) {
        finished.push_back({parent.ids, cand.log_prob, true, std::move(attention)});
      } else {
        Hyp child{parent.ids, cand.log_prob, next_states[cand.hyp], std::move(attention)};
        child.ids.push_back(cand.token);
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
    if (finished.size() >= width) break;
  }
  std::vector<Generation> pool = std::move(finished);
  if (pool.empty()) {
    for (auto& h : live) pool.push_back({h.ids, h.log_prob, false, h.attention});
  }
  if (pool.empty()) return Generation{};
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (normalized(pool[i]) > normalized(pool[best])) best = i;
  }
  return pool[best];
}

}  // namespace avsd::model
