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

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/synth.hpp"
#include "corpus/vocab.hpp"
#include "model/avsd_model.hpp"
#include "model/config.hpp"
#include "model/prepare.hpp"
#include "model/trainer.hpp"
#include "nn/ops.hpp"
#include "pipeline/commands.hpp"
#include "support/test_util.hpp"

using namespace avsd;
using namespace avsd::model;
using avsd::testing::TempDir;

namespace {

ModelConfig small_config(AttentionVariant att = AttentionVariant::kNone,
                         TopicMode mode = TopicMode::kNone) {
  ModelConfig c;
  c.vocab_size = 20;
  c.embed_dim = 6;
  c.word_hidden = 7;
  c.sent_hidden = 5;
  c.question_hidden = 6;
  c.decoder_hidden = 8;
  c.modalities = {{"audio", 4}, {"video", 6}};
  c.modality_proj_dim = 8;
  c.av_dim = 5;
  c.attention = att;
  c.topic_mode = mode;
  c.num_topics = mode == TopicMode::kNone ? 0 : 3;
  c.topic_embed_dim = 3;
  c.rng_seed = 1;
  return c;
}

std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::vector<double> v(k);
  double total = 0.0;
  for (double& x : v) total += (x = rng.uniform(0.05, 1.0));
  for (double& x : v) x /= total;
  return v;
}

// Random model-ready dialog consistent with `c`.
DialogInput random_dialog(const ModelConfig& c, std::size_t turns, Rng& rng,
                          const std::string& id = "d") {
  DialogInput d;
  d.dialog_id = id;
  auto tokens = [&](std::size_t lo, std::size_t hi) {
    std::vector<int> ids(lo + rng.below(hi - lo + 1));
    for (int& t : ids) t = 4 + static_cast<int>(rng.below(c.vocab_size - 4));
    return ids;
  };
  for (std::size_t t = 0; t < turns; ++t) {
    d.questions.push_back(tokens(1, 4));
    d.answers.push_back(tokens(1, 4));
    d.turn_index.push_back(t);
    if (c.uses_topics()) {
      d.turn_theta.push_back(random_simplex(c.num_topics, rng));
      d.context_theta.push_back(random_simplex(c.num_topics, rng));
    }
  }
  for (const auto& m : c.modalities) {
    std::vector<double> v(m.dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    d.pooled[m.name] = v;
  }
  return d;
}

corpus::Vocab vocab_of_size(std::size_t n) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = corpus::Vocab::kReserved; i < n; ++i) counts["w" + std::to_string(i)] = 1;
  return corpus::Vocab::from_counts(counts, 1);
}

double tape_loss(AvsdModel& m, const std::vector<Example>& ex) {
  nn::Tape tape;
  return m.forward_loss(tape, ex).value()[0];
}

}  // namespace

TEST_CASE("bilinear attention worked example") {
  nn::Tape t;
  const auto r = attend(t.constant(nn::Tensor::row({1, 0})),
                        t.constant(nn::Tensor(2, 2, {1, 0, 0, 1})), {true, true},
                        t.constant(nn::Tensor(2, 2, {1, 0, 0, 1})));
  const double e = std::exp(1.0);
  CHECK(r.weights.value()[0] == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(r.weights.value()[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-12));

  const nn::Tensor row = nn::Tensor::row({0.3, -0.2});
  const auto single = attend(t.constant(nn::Tensor::row({0.7, 0.1})), t.constant(row), {true},
                             t.constant(nn::Tensor(2, 2, {1, 2, 3, 4})));
  CHECK(single.weights.value()[0] == 1.0);
  CHECK(single.context.value() == row);

  const auto same = attend(t.constant(nn::Tensor::row({0.7, 0.1})),
                           t.constant(nn::Tensor(3, 2, {1, 2, 1, 2, 1, 2})), {true, true, true},
                           t.constant(nn::Tensor(2, 2, {1, 2, 3, 4})));
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.weights.value()[i] == doctest::Approx(1.0 / 3));

  const auto masked = attend(t.constant(nn::Tensor::row({0.7, 0.1})),
                             t.constant(nn::Tensor(2, 2, {1, 2, 3, 4})), {false, true},
                             t.constant(nn::Tensor(2, 2, {1, 0, 0, 1})));
  CHECK(masked.weights.value()[0] == 0.0);
  CHECK_THROWS_AS(attend(t.constant(nn::Tensor::row({0.7, 0.1})),
                         t.constant(nn::Tensor(1, 2)), {false},
                         t.constant(nn::Tensor(2, 2))),
                  Error);
}

TEST_CASE("question encoder") {
  ModelConfig c = small_config();
  AvsdModel m(c);
  nn::Tape t;
  CHECK(m.encode_question(t, {5, 6, 7}).cols() == c.question_hidden);
  CHECK_THROWS_AS(m.encode_question(t, {}), Error);

  // Length one: one lstm_step from zero state over the token embedding.
  const nn::Var q = m.encode_question(t, {9});
  const auto& p = m.params();
  nn::LstmWeights w{t.constant(p.get("question.lstm.W").value), t.constant(p.get("question.lstm.U").value),
                    t.constant(p.get("question.lstm.b").value)};
  const nn::Var x = nn::row_lookup(t.constant(p.get("embed.tokens").value), {9});
  const nn::Tensor zero(1, c.question_hidden);
  const auto s = nn::lstm_step(x, {t.constant(zero), t.constant(zero)}, w);
  CHECK(q.value() == s.h.value());

  for (std::size_t i = 0; i < m.params().size(); ++i) m.params()[i].value.fill(0.0);
  CHECK(m.encode_question(t, {5, 6}).value() == nn::Tensor(1, c.question_hidden));
}

TEST_CASE("history encoder shapes and variant equivalence") {
  Rng rng(2);
  for (AttentionVariant v : all_attention_variants()) {
    CAPTURE(to_string(v));
    const ModelConfig c = small_config(v);
    AvsdModel m(c);
    const DialogInput d = random_dialog(c, 3, rng);
    nn::Tape t;
    const HistoryEncoding none = m.encode_history(t, d, 0);
    CHECK(none.sent_states.empty());
    CHECK(none.last_states.empty());

    const HistoryEncoding one = m.encode_history(t, d, 1);
    REQUIRE(one.sent_states.size() == 1);
    CHECK(one.sent_states[0].cols() == c.sent_hidden);
    REQUIRE(one.last_states.size() == 1);
    if (v == AttentionVariant::kWordAllStates) {
      const nn::Var words = one.word_states[0];
      CHECK(words.rows() == d.questions[0].size() + d.answers[0].size() + 1);
      const nn::Var last = nn::slice_rows(words, words.rows() - 1, words.rows());
      CHECK(last.value() == one.last_states[0].value());
    }

    // Memory row counts, read off the attention weights of one decode step.
    DecodeOptions opts;
    opts.max_length = 1;
    const Generation g1 = m.generate(d, 1, opts);
    const Generation g3 = m.generate(d, 0, opts);
    std::size_t rows1 = g1.attention.empty() ? 0 : g1.attention[0].size();
    switch (v) {
      case AttentionVariant::kNone: CHECK(rows1 == 0); break;
      case AttentionVariant::kWordAllStates:
        CHECK(rows1 == d.questions[0].size() + d.answers[0].size() + 1);
        break;
      case AttentionVariant::kWordLastStates:
      case AttentionVariant::kSentAllStates: CHECK(rows1 == 1); break;
      case AttentionVariant::kSentAllStatesPlusAv: CHECK(rows1 == 2); break;
    }
    // No history: zero context, no weights, except for the AV row.
    if (v == AttentionVariant::kSentAllStatesPlusAv) {
      CHECK(g3.attention.at(0).size() == 1);
    } else {
      CHECK((g3.attention.empty() || g3.attention[0].empty()));
    }
  }
  const ModelConfig av = small_config(AttentionVariant::kSentAllStatesPlusAv);
  AvsdModel m(av);
  DialogInput d = random_dialog(av, 4, rng);
  DecodeOptions opts;
  opts.max_length = 1;
  CHECK(m.generate(d, 3, opts).attention.at(0).size() == 4);
}

TEST_CASE("topic injection shapes") {
  ModelConfig c = small_config(AttentionVariant::kNone, TopicMode::kDecoderFeature);
  c.num_topics = 9;
  AvsdModel dec(c);
  CHECK(dec.params().get("decoder.lstm.W").value.rows() == c.embed_dim + 9);
  c.topic_mode = TopicMode::kHistoryFeature;
  AvsdModel hist(c);
  CHECK(hist.params().get("history.sent.lstm.W").value.rows() == c.word_hidden + 9);
  CHECK(hist.params().get("decoder.lstm.W").value.rows() == c.embed_dim);
  c.topic_mode = TopicMode::kTopicEmbedding;
  AvsdModel emb(c);
  CHECK(emb.params().get("topic.embed").value.rows() == 9);
  CHECK_FALSE(AvsdModel(small_config()).params().contains("attention.W"));
}

TEST_CASE("modality encoder") {
  ModelConfig c = small_config();
  AvsdModel m(c);
  CHECK(m.params().get("modality.fuse.W").value.rows() == 16);

  Rng rng(3);
  corpus::FeatureTrack audio{"audio", 4, 1, {0.5f, -1.0f, 0.25f, 2.0f}};
  corpus::FeatureTrack video{"video", 6, 1, {1, 2, 3, 4, 5, 6}};
  DialogInput d = random_dialog(c, 1, rng);
  d.pooled["audio"] = {0.5, -1.0, 0.25, 2.0};
  d.pooled["video"] = {1, 2, 3, 4, 5, 6};
  nn::Tape t;
  const nn::Tensor from_tracks = m.encode_modalities(t, {{"audio", audio}, {"video", video}}).value();
  const nn::Tensor from_pooled = m.encode_modalities(t, d).value();
  CHECK(from_tracks == from_pooled);
  for (std::size_t i = 0; i < from_tracks.size(); ++i) CAPTURE(from_tracks[i] - from_pooled[i]);

  // Zero inputs: each projection is tanh(bias), then the fusion layer.
  auto& p = m.params();
  for (double& v : p.get("modality.audio.b").value.values()) v = rng.uniform(-1, 1);
  for (double& v : p.get("modality.video.b").value.values()) v = rng.uniform(-1, 1);
  d.pooled["audio"].assign(4, 0.0);
  d.pooled["video"].assign(6, 0.0);
  std::vector<double> slots;
  for (const char* name : {"modality.audio.b", "modality.video.b"}) {
    for (double b : p.get(name).value.values()) slots.push_back(std::tanh(b));
  }
  const nn::Tensor& fw = p.get("modality.fuse.W").value;
  const nn::Tensor& fb = p.get("modality.fuse.b").value;
  const nn::Tensor out = m.encode_modalities(t, d).value();
  for (std::size_t j = 0; j < c.av_dim; ++j) {
    double z = fb[j];
    for (std::size_t i = 0; i < slots.size(); ++i) z += slots[i] * fw(i, j);
    CHECK(out[j] == doctest::Approx(std::tanh(z)).epsilon(1e-12));
  }

  d.pooled["audio"].assign(3, 0.0);
  CHECK_THROWS_AS(m.encode_modalities(t, d), Error);
  CHECK_FALSE(AvsdModel([] {
                ModelConfig n = small_config();
                n.modalities.clear();
                return n;
              }())
                  .encode_modalities(t, d)
                  .valid());
}

TEST_CASE("attention weights are distributions for every variant") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto variants = all_attention_variants();
    const AttentionVariant v = variants[rng.below(variants.size())];
    ModelConfig c = small_config(v);
    c.rng_seed = trial;
    AvsdModel m(c);
    const DialogInput d = random_dialog(c, 1 + rng.below(4), rng);
    DecodeOptions opts;
    opts.max_length = 4;
    opts.beam = rng.bernoulli(0.5);
    opts.beam_width = 2;
    const Generation g = m.generate(d, d.num_turns() - 1, opts);
    for (const auto& step : g.attention) {
      double total = 0.0;
      for (double w : step) {
        CHECK(w >= 0.0);
        total += w;
      }
      if (!step.empty()) CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("initial loss is near ln V") {
  ModelConfig c;
  c.vocab_size = 50;
  AvsdModel m(c);
  Rng rng(5);
  std::vector<DialogInput> dialogs;
  for (int i = 0; i < 4; ++i) dialogs.push_back(random_dialog(c, 3, rng, "d" + std::to_string(i)));
  const double loss = m.evaluate_loss(all_examples(dialogs));
  CHECK(std::abs(loss - std::log(50.0)) <= 0.2);
}

TEST_CASE("loss is a mean over examples") {
  Rng rng(6);
  const ModelConfig c = small_config(AttentionVariant::kSentAllStates);
  AvsdModel m(c);
  const DialogInput d = random_dialog(c, 3, rng);
  const Example e{&d, 2};
  CHECK(tape_loss(m, {e, e}) == doctest::Approx(tape_loss(m, {e})).epsilon(1e-14));
  CHECK(m.evaluate_loss({e}) == tape_loss(m, {e}));
  const double a = tape_loss(m, {{&d, 0}}), b = tape_loss(m, {{&d, 1}});
  CHECK(tape_loss(m, {{&d, 0}, {&d, 1}}) == doctest::Approx((a + b) / 2).epsilon(1e-14));

  DialogInput empty = d;
  empty.answers[1].clear();
  try {
    m.evaluate_loss({{&empty, 1}});
    FAIL("expected throw");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kInvalidArgument);
  }
  nn::Tape t;
  CHECK_THROWS_AS(m.forward_loss(t, {}), Error);
}

TEST_CASE("decoding contracts") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    ModelConfig c = small_config(all_attention_variants()[trial % 5]);
    c.rng_seed = 100 + trial;
    AvsdModel m(c);
    const DialogInput d = random_dialog(c, 2, rng);
    DecodeOptions greedy;
    greedy.max_length = 6;
    DecodeOptions beam1 = greedy;
    beam1.beam = true;
    const Generation g = m.generate(d, 1, greedy);
    const Generation b = m.generate(d, 1, beam1);
    CHECK(g.ids == b.ids);
    CHECK(g.log_prob == doctest::Approx(b.log_prob));
    CHECK(m.generate(d, 1, greedy).ids == g.ids);

    DecodeOptions one = greedy;
    one.max_length = 1;
    CHECK(m.generate(d, 1, one).ids.size() <= 1);
    one.beam = true;
    one.beam_width = 3;
    CHECK(m.generate(d, 1, one).ids.size() <= 1);

    DecodeOptions zero = greedy;
    zero.beam = true;
    zero.beam_width = 0;
    CHECK_THROWS_AS(m.generate(d, 1, zero), Error);
  }
}

TEST_CASE("a model overfit on one pair reproduces it") {
  // Vocab: reserved ids, then "is", "it", "yes", "?".
  const corpus::Vocab vocab = corpus::Vocab::from_token_list(
      {"<pad>", "<sos>", "<eos>", "<unk>", "is", "it", "yes", "?"});
  ModelConfig c = small_config(AttentionVariant::kNone);
  c.vocab_size = vocab.size();
  c.modalities.clear();
  AvsdModel m(c);
  DialogInput d;
  d.dialog_id = "pair";
  d.questions = {vocab.encode({"is", "it", "?"})};
  d.answers = {vocab.encode({"yes", "it", "is"})};
  d.turn_index = {0};
  TrainOptions o;
  o.epochs = 150;
  o.optimizer.learning_rate = 0.02;
  Trainer trainer(m, o, vocab, nullptr);
  trainer.run({d}, {});
  CHECK(vocab.decode(m.generate(d, 0, {}).ids) == corpus::Tokens{"yes", "it", "is"});
}

TEST_CASE("trainer determinism and degenerate learning rate") {
  Rng rng(8);
  const ModelConfig c = small_config(AttentionVariant::kWordLastStates);
  const corpus::Vocab vocab = vocab_of_size(c.vocab_size);
  std::vector<DialogInput> dialogs;
  for (int i = 0; i < 5; ++i) dialogs.push_back(random_dialog(c, 2, rng, "d" + std::to_string(i)));

  auto history = [&](double lr, std::uint64_t seed) {
    AvsdModel m(c);
    TrainOptions o;
    o.epochs = 4;
    o.batch_dialogs = 2;
    o.seed = seed;
    o.optimizer.learning_rate = lr;
    Trainer t(m, o, vocab, nullptr);
    return t.run(dialogs, {dialogs[0]});
  };
  const auto a = history(1e-2, 3);
  CHECK(a == history(1e-2, 3));
  CHECK(a.size() == 4);
  CHECK(a[0].val_loss.has_value());
  const auto flat = history(0.0, 3);
  for (const auto& r : flat) CHECK(std::abs(r.train_loss - flat[0].train_loss) <= 1e-12);

  AvsdModel m(c);
  Trainer t(m, TrainOptions{}, vocab, nullptr);
  CHECK_THROWS_AS(t.run({}, {}), Error);
  TrainOptions bad;
  bad.optimizer.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("full-batch training loss is almost monotone on the overfit corpus") {
  corpus::SynthSpec spec;
  spec.n_topic_clusters = 4;
  const corpus::Corpus c = corpus::synthesize_corpus(spec);
  const corpus::Vocab vocab = corpus::Vocab::build(c, 1);
  ModelConfig cfg;
  cfg.vocab_size = vocab.size();
  const auto dialogs = prepare_dialogs(c, vocab, cfg, nullptr);
  AvsdModel m(cfg);
  TrainOptions o;
  o.epochs = 60;
  o.batch_dialogs = dialogs.size();  // one step per epoch, so train_loss is exact
  o.optimizer.learning_rate = 3e-3;
  o.optimizer.clip_norm = 1.0;
  Trainer t(m, o, vocab, nullptr);
  const auto h = t.run(dialogs, {});
  std::size_t down = 0;
  for (std::size_t i = 1; i < h.size(); ++i) down += h[i].train_loss <= h[i - 1].train_loss;
  CHECK(static_cast<double>(down) >= 0.95 * static_cast<double>(h.size() - 1));
}

TEST_CASE("frozen embeddings stay fixed") {
  Rng rng(9);
  ModelConfig c = small_config();
  c.embeddings_trainable = false;
  const corpus::Vocab vocab = vocab_of_size(c.vocab_size);
  AvsdModel m(c);
  const nn::Tensor before = m.params().get("embed.tokens").value;
  const nn::Tensor dec_before = m.params().get("decoder.out.W").value;
  TrainOptions o;
  o.epochs = 2;
  Trainer t(m, o, vocab, nullptr);
  t.run({random_dialog(c, 2, rng)}, {});
  CHECK(m.params().get("embed.tokens").value == before);
  CHECK_FALSE(m.params().get("decoder.out.W").value == dec_before);
}

TEST_CASE("pretrained vectors initialize matched rows") {
  ModelConfig c = small_config();
  c.vocab_size = 6;
  c.embed_dim = 2;
  AvsdModel m(c);
  corpus::WordVectors wv;
  wv.dim = 2;
  wv.rows.assign(12, 0.0);
  wv.present.assign(6, false);
  wv.rows[8] = 0.5;
  wv.rows[9] = -0.5;
  wv.present[4] = true;
  wv.matched = 1;
  const nn::Tensor before = m.params().get("embed.tokens").value;
  m.load_pretrained(wv);
  const nn::Tensor& after = m.params().get("embed.tokens").value;
  CHECK(after(4, 0) == 0.5);
  CHECK(after(4, 1) == -0.5);
  CHECK(after(5, 0) == before(5, 0));
  wv.dim = 3;
  CHECK_THROWS_AS(m.load_pretrained(wv), Error);
}

TEST_CASE("model checkpoints") {
  TempDir dir("model");
  Rng rng(10);
  const ModelConfig c = small_config(AttentionVariant::kSentAllStatesPlusAv);
  const corpus::Vocab vocab = vocab_of_size(c.vocab_size);
  AvsdModel m(c);
  const std::vector<DialogInput> ds{random_dialog(c, 3, rng)};
  const DialogInput& d = ds[0];
  const auto ex = all_examples(ds);
  save_model_checkpoint(dir / "m.ckpt", m, vocab, nullptr, nullptr);
  ModelBundle back = load_model_checkpoint(dir / "m.ckpt");
  CHECK(back.vocab == vocab);
  CHECK(back.model.config() == c);
  CHECK(back.model.evaluate_loss(ex) == m.evaluate_loss(ex));
  CHECK(back.model.generate(d, 2, {}).ids == m.generate(d, 2, {}).ids);

  // Tampered shape.
  nn::CheckpointBlob blob = nn::read_checkpoint(dir / "m.ckpt");
  for (auto& [name, tensor] : blob.tensors) {
    if (name == "decoder.out.W") tensor = nn::Tensor(2, 2);
  }
  try {
    load_parameters(m, blob);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("decoder.out.W") != std::string::npos);
  }

  // Different attention variant.
  AvsdModel other(small_config(AttentionVariant::kWordAllStates));
  try {
    load_parameters(other, nn::read_checkpoint(dir / "m.ckpt"));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    CHECK(std::string(e.what()).find("attention") != std::string::npos);
  }
}

TEST_CASE("config json round trip and validation") {
  ModelConfig c = small_config(AttentionVariant::kWordAllStates, TopicMode::kTopicEmbedding);
  CHECK(model_config_from_json(to_json(c)) == c);
  auto j = to_json(c);
  j["hidden_size"] = 3;
  try {
    model_config_from_json(j);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    CHECK(std::string(e.what()).find("hidden_size") != std::string::npos);
  }
  ModelConfig no_av = small_config(AttentionVariant::kSentAllStatesPlusAv);
  no_av.modalities.clear();
  CHECK_THROWS_AS(no_av.validate(), Error);
  CHECK_THROWS_AS(parse_attention_variant("bahdanau"), Error);
  for (auto v : all_attention_variants()) CHECK(parse_attention_variant(to_string(v)) == v);
  for (auto t : all_topic_modes()) CHECK(parse_topic_mode(to_string(t)) == t);
}

TEST_CASE("full-model gradient check over every variant and topic mode") {
  pipeline::GradcheckOptions o;
  o.max_coords_per_param = 6;
  const auto r = pipeline::run_gradcheck_suite(o);
  CHECK(r.ok);
}
