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

#include "pipeline/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/io.hpp"
#include "corpus/synth.hpp"
#include "corpus/vocab.hpp"
#include "metrics/metrics.hpp"
#include "model/avsd_model.hpp"
#include "model/prepare.hpp"
#include "model/trainer.hpp"
#include "pipeline/config_reader.hpp"
#include "topics/lda.hpp"

namespace avsd::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Settings shared by every command.
struct Common {
  std::uint64_t seed = 0;
  fs::path out;
  bool force = false;
};

Common read_common(ConfigReader& r, bool out_required) {
  Common c;
  c.seed = r.get<std::uint64_t>("rng_seed", 0);
  c.out = r.get<std::string>("out", "");
  c.force = r.get<bool>("force", false);
  if (out_required && c.out.empty()) throw ConfigError("missing required field 'out'");
  return c;
}

void require_file(const fs::path& p, const std::string& field) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw IoError("field '" + field + "': file '" + p.string() + "' does not exist");
  }
}

void check_out_dir(const Common& c) {
  if (c.out.empty()) return;
  std::error_code ec;
  if (fs::exists(c.out, ec)) {
    if (!fs::is_directory(c.out, ec)) {
      throw UsageError("output path '" + c.out.string() + "' exists and is not a directory");
    }
    if (!fs::is_empty(c.out, ec) && !c.force) {
      throw UsageError("output directory '" + c.out.string() +
                       "' is not empty; pass --force to overwrite");
    }
  }
}

void make_out_dir(const Common& c, const json& resolved) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create '" + c.out.string() + "': " + ec.message());
  corpus::write_file(c.out / "config.resolved.json", resolved.dump(2) + "\n");
}

json common_json(const Common& c) {
  return {{"rng_seed", c.seed}, {"out", c.out.string()}};
}

corpus::Corpus load_any_corpus(const fs::path& p) {
  if (p.extension() == ".jsonl") return corpus::load_corpus_jsonl(p);
  return corpus::load_avsd_json(p);
}

// ---------------------------------------------------------------- synth

CommandResult cmd_synth(const json& config) {
  ConfigReader r(config, "");
  const Common common = read_common(r, true);
  ConfigReader s = r.child("synth");
  corpus::SynthSpec spec;
  spec.n_dialogs = s.get<std::size_t>("n_dialogs", spec.n_dialogs);
  spec.n_turns_per_dialog = s.get<std::size_t>("n_turns_per_dialog", spec.n_turns_per_dialog);
  spec.n_topic_clusters = s.get<std::size_t>("n_topic_clusters", spec.n_topic_clusters);
  spec.coref_dependency_gap =
      s.get<std::size_t>("coref_dependency_gap", spec.coref_dependency_gap);
  spec.binary_fraction = s.get<double>("binary_fraction", spec.binary_fraction);
  spec.audio_event_classes = s.get<std::size_t>("audio_event_classes", spec.audio_event_classes);
  spec.audio_frames = s.get<std::size_t>("audio_frames", spec.audio_frames);
  s.finish();
  spec.rng_seed = common.seed;

  std::map<std::string, double> splits;
  if (r.has("splits")) {
    ConfigReader sp = r.child("splits");
    double total = 0.0;
    for (const char* name : {"train", "val", "test"}) {
      const double f = sp.get<double>(name, 0.0);
      if (!(f >= 0.0 && f <= 1.0)) {
        throw ConfigError("field 'splits." + std::string(name) + "' must lie in [0, 1]");
      }
      splits[name] = f;
      total += f;
    }
    sp.finish();
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("field 'splits' must sum to 1");
  } else {
    r.child("splits");
  }
  r.finish();
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
  check_out_dir(common);

  json resolved = common_json(common);
  resolved["synth"] = {{"n_dialogs", spec.n_dialogs},
                       {"n_turns_per_dialog", spec.n_turns_per_dialog},
                       {"n_topic_clusters", spec.n_topic_clusters},
                       {"coref_dependency_gap", spec.coref_dependency_gap},
                       {"binary_fraction", spec.binary_fraction},
                       {"audio_event_classes", spec.audio_event_classes},
                       {"audio_frames", spec.audio_frames}};
  if (!splits.empty()) resolved["splits"] = splits;
  make_out_dir(common, resolved);

  const corpus::Corpus c = corpus::synthesize_corpus(spec);
  corpus::save_corpus_jsonl(c, common.out / "corpus.jsonl");
  json files = json::array({"corpus.jsonl"});
  json split_counts = json::object();
  if (!splits.empty()) {
    const std::size_t n = c.dialogs.size();
    const std::size_t n_val = static_cast<std::size_t>(std::floor(splits["val"] * static_cast<double>(n)));
    const std::size_t n_test = static_cast<std::size_t>(std::floor(splits["test"] * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;
    std::size_t begin = 0;
    for (const auto& [name, count] : std::vector<std::pair<std::string, std::size_t>>{
             {"train", n_train}, {"val", n_val}, {"test", n_test}}) {
      corpus::Corpus part;
      part.dialogs.assign(c.dialogs.begin() + static_cast<std::ptrdiff_t>(begin),
                          c.dialogs.begin() + static_cast<std::ptrdiff_t>(begin + count));
      begin += count;
      corpus::save_corpus_jsonl(part, common.out / (name + ".jsonl"));
      files.push_back(name + ".jsonl");
      split_counts[name] = count;
    }
  }
  const corpus::Vocab vocab = corpus::Vocab::build(c, 1);
  CommandResult res;
  res.summary = {{"command", "synth"},
                 {"dialogs", c.dialogs.size()},
                 {"turns", c.turn_count()},
                 {"vocab_size", vocab.size()},
                 {"files", files}};
  if (!splits.empty()) res.summary["splits"] = split_counts;
  return res;
}

// ---------------------------------------------------------------- topics

std::map<std::size_t, std::vector<std::string>> parse_seed_sets(const json& j,
                                                                const std::string& where) {
  if (!j.is_object()) throw ConfigError("field '" + where + "' must map topic index to words");
  std::map<std::size_t, std::vector<std::string>> out;
  for (const auto& [key, words] : j.items()) {
    std::size_t idx = 0;
    try {
      std::size_t pos = 0;
      idx = std::stoul(key, &pos);
      if (pos != key.size()) throw std::invalid_argument(key);
      out[idx] = words.get<std::vector<std::string>>();
    } catch (const std::exception&) {
      throw ConfigError("field '" + where + "': bad seed entry '" + key + "'");
    }
  }
  return out;
}

CommandResult cmd_topics(const json& config) {
  ConfigReader r(config, "");
  const Common common = read_common(r, true);
  const fs::path corpus_path = r.require<std::string>("corpus");
  const std::string category_name = r.get<std::string>("category", "qa_pairs");
  const std::size_t top_n = r.get<std::size_t>("top_n", 10);
  ConfigReader t = r.child("topics");
  topics::TopicParams params;
  params.num_topics = t.get<std::size_t>("num_topics", params.num_topics);
  params.alpha = t.get<double>("alpha", params.alpha);
  params.beta = t.get<double>("beta", params.beta);
  params.iterations = t.get<std::size_t>("iterations", params.iterations);
  params.seed_confidence = t.get<double>("seed_confidence", 0.9);
  t.finish();
  params.rng_seed = common.seed;
  std::optional<fs::path> seeds_path;
  std::optional<json> inline_seeds;
  if (r.has("seeds")) {
    const json& s = r.raw("seeds");
    if (s.is_string()) {
      seeds_path = s.get<std::string>();
    } else {
      inline_seeds = s;
    }
  }
  std::optional<std::set<std::string>> stopwords;
  if (r.has("stopwords")) stopwords = r.get<std::set<std::string>>("stopwords", {});
  r.finish();

  topics::DocCategory category;
  try {
    category = topics::parse_doc_category(category_name);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  require_file(corpus_path, "corpus");
  if (seeds_path) require_file(*seeds_path, "seeds");
  if (inline_seeds) params.seed_sets = parse_seed_sets(*inline_seeds, "seeds");
  if (seeds_path) {
    json sj;
    try {
      sj = json::parse(corpus::read_file(*seeds_path));
    } catch (const json::exception& e) {
      throw ConfigError("seeds file is not valid JSON: " + std::string(e.what()));
    }
    params.seed_sets = parse_seed_sets(sj, "seeds");
  }
  const bool guided = seeds_path.has_value() || inline_seeds.has_value();
  try {
    params.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("topics: ") + e.what());
  }
  check_out_dir(common);

  json resolved = common_json(common);
  resolved["corpus"] = corpus_path.string();
  resolved["category"] = topics::to_string(category);
  resolved["top_n"] = top_n;
  resolved["topics"] = {{"num_topics", params.num_topics},
                        {"alpha", params.effective_alpha()},
                        {"beta", params.beta},
                        {"iterations", params.iterations},
                        {"seed_confidence", params.seed_confidence}};
  if (guided) {
    json sj = json::object();
    for (const auto& [k, words] : params.seed_sets) sj[std::to_string(k)] = words;
    resolved["seeds"] = sj;
  }
  if (stopwords) resolved["stopwords"] = *stopwords;
  const corpus::Corpus c = load_any_corpus(corpus_path);
  make_out_dir(common, resolved);

  const auto docs = topics::category_documents(c, category);
  const topics::TopicCorpus tc = topics::TopicCorpus::from_token_docs(
      docs, stopwords ? *stopwords : topics::default_stopwords());
  std::vector<std::string> warnings;
  const topics::TopicModel model =
      guided ? topics::fit_guided_lda(tc, params, &warnings) : topics::fit_lda(tc, params);
  topics::save_topic_model(model, common.out / "topic_model.json");
  std::string listing;
  json top = json::array();
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    const auto words = topics::top_words(model, k, top_n);
    top.push_back(words);
    listing += "topic " + std::to_string(k) + ":";
    for (const auto& w : words) listing += " " + w;
    listing += "\n";
  }
  corpus::write_file(common.out / "top_words.txt", listing);
  CommandResult res;
  res.summary = {{"command", "topics"},
                 {"guided", guided},
                 {"documents", tc.docs.size()},
                 {"words", tc.words.size()},
                 {"top_words", top},
                 {"warnings", warnings}};
  return res;
}

// ---------------------------------------------------------------- train

struct TrainPlan {
  Common common;
  fs::path train_corpus;
  std::optional<fs::path> val_corpus, topic_model, word_vectors, resume;
  int min_count = 1;
  model::ModelConfig config;  // vocab_size and modality dims filled later
  std::vector<std::string> modality_names;
  model::TrainOptions train;
};

TrainPlan read_train(const json& config) {
  TrainPlan p;
  ConfigReader r(config, "");
  p.common = read_common(r, true);
  p.train_corpus = r.require<std::string>("train_corpus");
  if (r.has("val_corpus")) p.val_corpus = r.get<std::string>("val_corpus", "");
  if (r.has("topic_model")) p.topic_model = r.get<std::string>("topic_model", "");
  if (r.has("word_vectors")) p.word_vectors = r.get<std::string>("word_vectors", "");
  if (r.has("resume")) p.resume = r.get<std::string>("resume", "");
  p.min_count = r.get<int>("min_count", 1);
  ConfigReader m = r.child("model");
  model::ModelConfig& c = p.config;
  c.embed_dim = m.get<std::size_t>("embed_dim", c.embed_dim);
  c.word_hidden = m.get<std::size_t>("word_hidden", c.word_hidden);
  c.sent_hidden = m.get<std::size_t>("sent_hidden", c.sent_hidden);
  c.question_hidden = m.get<std::size_t>("question_hidden", c.question_hidden);
  c.decoder_hidden = m.get<std::size_t>("decoder_hidden", c.decoder_hidden);
  c.modality_proj_dim = m.get<std::size_t>("modality_proj_dim", c.modality_proj_dim);
  c.av_dim = m.get<std::size_t>("av_dim", c.av_dim);
  p.modality_names = m.get<std::vector<std::string>>("modalities", {});
  c.num_topics = m.get<std::size_t>("num_topics", 0);
  c.topic_embed_dim = m.get<std::size_t>("topic_embed_dim", c.topic_embed_dim);
  c.fold_in_iterations = m.get<std::size_t>("fold_in_iterations", c.fold_in_iterations);
  c.embeddings_trainable = m.get<bool>("embeddings_trainable", c.embeddings_trainable);
  try {
    c.attention = model::parse_attention_variant(m.get<std::string>("attention_variant", "none"));
    c.topic_mode = model::parse_topic_mode(m.get<std::string>("topic_mode", "none"));
    c.topic_source =
        model::parse_topic_source(m.get<std::string>("topic_source", "question+history"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  m.finish();
  c.rng_seed = p.common.seed;

  ConfigReader t = r.child("train");
  p.train.epochs = t.get<std::size_t>("epochs", 300);
  p.train.batch_dialogs = t.get<std::size_t>("batch_size", 4);
  try {
    p.train.optimizer.kind = nn::parse_optimizer_kind(t.get<std::string>("optimizer", "adam"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  p.train.optimizer.learning_rate = t.get<double>("learning_rate", 3e-3);
  p.train.optimizer.beta1 = t.get<double>("beta1", 0.9);
  p.train.optimizer.beta2 = t.get<double>("beta2", 0.999);
  p.train.optimizer.epsilon = t.get<double>("epsilon", 1e-8);
  p.train.optimizer.clip_norm = t.get<double>("clip_norm", 1.0);
  t.finish();
  r.finish();
  p.train.seed = p.common.seed;
  if (p.min_count < 1) throw ConfigError("field 'min_count' must be >= 1");
  if (p.train.optimizer.learning_rate < 0.0 || !std::isfinite(p.train.optimizer.learning_rate)) {
    throw ConfigError("field 'train.learning_rate' must be a finite number >= 0");
  }
  if (p.train.epochs < 1) throw ConfigError("field 'train.epochs' must be >= 1");
  if (p.train.batch_dialogs < 1) throw ConfigError("field 'train.batch_size' must be >= 1");
  if (p.config.uses_topics() && !p.topic_model && !p.resume) {
    throw ConfigError("topic_mode " + model::to_string(p.config.topic_mode) +
                      " needs field 'topic_model'");
  }
  require_file(p.train_corpus, "train_corpus");
  if (p.val_corpus) require_file(*p.val_corpus, "val_corpus");
  if (p.topic_model) require_file(*p.topic_model, "topic_model");
  if (p.word_vectors) require_file(*p.word_vectors, "word_vectors");
  if (p.resume) require_file(*p.resume, "resume");
  return p;
}

std::string fmt_loss(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CommandResult cmd_train(const json& config) {
  TrainPlan p = read_train(config);
  check_out_dir(p.common);

  const corpus::Corpus train_c = load_any_corpus(p.train_corpus);
  if (train_c.dialogs.empty()) throw InvalidArgument("training corpus is empty");
  corpus::Corpus val_c;
  if (p.val_corpus) val_c = load_any_corpus(*p.val_corpus);

  std::optional<model::ModelBundle> resumed;
  if (p.resume) resumed = model::load_model_checkpoint(*p.resume);

  corpus::Vocab vocab = corpus::Vocab::build(train_c, p.min_count);
  std::optional<topics::TopicModel> tm;
  if (p.topic_model) {
    tm = topics::load_topic_model(*p.topic_model);
  } else if (resumed && resumed->topics) {
    tm = resumed->topics;
  }
  model::ModelConfig& c = p.config;
  c.vocab_size = vocab.size();
  for (const auto& name : p.modality_names) {
    std::optional<std::size_t> dim;
    for (const auto& d : train_c.dialogs) {
      auto it = d.features.find(name);
      if (it != d.features.end()) {
        dim = it->second.dim;
        break;
      }
    }
    if (!dim) throw ConfigError("modality '" + name + "' has no feature tracks in train_corpus");
    c.modalities.push_back({name, *dim});
  }
  if (c.uses_topics()) {
    if (c.num_topics == 0) c.num_topics = tm->num_topics();
    if (c.num_topics != tm->num_topics()) {
      throw ConfigError("field 'model.num_topics' is " + std::to_string(c.num_topics) +
                        " but the topic model has " + std::to_string(tm->num_topics()) +
                        " topics");
    }
  } else {
    c.num_topics = 0;
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (resumed) {
    const std::string diff = model::first_difference(resumed->model.config(), c);
    if (!diff.empty()) throw ConfigError("resume checkpoint differs in model field '" + diff + "'");
    if (!(resumed->vocab == vocab)) {
      throw ConfigError("resume checkpoint vocabulary differs from train_corpus");
    }
    if (!resumed->training) throw ConfigError("resume checkpoint has no training state");
  }

  json resolved = common_json(p.common);
  resolved["train_corpus"] = p.train_corpus.string();
  if (p.val_corpus) resolved["val_corpus"] = p.val_corpus->string();
  if (p.topic_model) resolved["topic_model"] = p.topic_model->string();
  if (p.word_vectors) resolved["word_vectors"] = p.word_vectors->string();
  if (p.resume) resolved["resume"] = p.resume->string();
  resolved["min_count"] = p.min_count;
  resolved["model"] = model::to_json(c);
  resolved["train"] = {{"epochs", p.train.epochs},
                       {"batch_size", p.train.batch_dialogs},
                       {"optimizer", nn::to_string(p.train.optimizer.kind)},
                       {"learning_rate", p.train.optimizer.learning_rate},
                       {"beta1", p.train.optimizer.beta1},
                       {"beta2", p.train.optimizer.beta2},
                       {"epsilon", p.train.optimizer.epsilon},
                       {"clip_norm", p.train.optimizer.clip_norm}};
  make_out_dir(p.common, resolved);

  model::AvsdModel m = resumed ? std::move(resumed->model) : model::AvsdModel(c);
  if (p.word_vectors && !resumed) m.load_pretrained(corpus::load_word_vectors(*p.word_vectors, vocab));
  const topics::TopicModel* tmp = c.uses_topics() ? &*tm : nullptr;
  const auto train_in = model::prepare_dialogs(train_c, vocab, c, tmp);
  const auto val_in = model::prepare_dialogs(val_c, vocab, c, tmp);

  p.train.checkpoint_dir = p.common.out / "checkpoints";
  fs::create_directories(p.train.checkpoint_dir);
  model::Trainer trainer(m, p.train, vocab, tmp);
  if (resumed) trainer.restore(*resumed->training);
  const auto history = trainer.run(train_in, val_in);

  std::string csv = "epoch,train_loss,val_loss\n";
  json hist = json::array();
  for (const auto& rec : history) {
    csv += std::to_string(rec.epoch) + "," + fmt_loss(rec.train_loss) + "," +
           (rec.val_loss ? fmt_loss(*rec.val_loss) : "") + "\n";
    hist.push_back({{"epoch", rec.epoch},
                    {"train_loss", rec.train_loss},
                    {"val_loss", rec.val_loss ? json(*rec.val_loss) : json(nullptr)}});
  }
  corpus::write_file(p.common.out / "loss.csv", csv);
  const model::TrainingState st = trainer.state();
  CommandResult res;
  res.summary = {{"command", "train"},
                 {"epochs", history.size()},
                 {"vocab_size", vocab.size()},
                 {"parameters", m.params().scalar_count()},
                 {"final_train_loss", history.back().train_loss},
                 {"best_epoch", st.best_epoch},
                 {"history", hist}};
  if (history.back().val_loss) res.summary["final_val_loss"] = *history.back().val_loss;
  return res;
}

// ---------------------------------------------------------------- generate

CommandResult cmd_generate(const json& config) {
  ConfigReader r(config, "");
  const Common common = read_common(r, true);
  const fs::path ckpt = r.require<std::string>("checkpoint");
  const fs::path corpus_path = r.require<std::string>("corpus");
  const bool dump_attention = r.get<bool>("dump_attention", false);
  const double min_coverage = r.get<double>("min_vocab_coverage", 0.5);
  ConfigReader d = r.child("decode");
  model::DecodeOptions opts;
  const std::string mode = d.get<std::string>("mode", "greedy");
  opts.beam_width = d.get<std::size_t>("beam_width", 1);
  opts.max_length = d.get<std::size_t>("max_length", 20);
  opts.length_penalty = d.get<double>("length_penalty", 0.0);
  d.finish();
  r.finish();
  if (mode != "greedy" && mode != "beam") {
    throw ConfigError("field 'decode.mode' must be 'greedy' or 'beam'");
  }
  opts.beam = mode == "beam";
  if (opts.beam && opts.beam_width < 1) {
    throw ConfigError("field 'decode.beam_width' must be >= 1");
  }
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw ConfigError("field 'min_vocab_coverage' must lie in [0, 1]");
  }
  require_file(ckpt, "checkpoint");
  require_file(corpus_path, "corpus");
  check_out_dir(common);

  model::ModelBundle bundle = model::load_model_checkpoint(ckpt);
  const corpus::Corpus c = load_any_corpus(corpus_path);
  std::size_t known = 0, total = 0;
  for (const auto& dlg : c.dialogs) {
    for (const auto& t : dlg.turns) {
      for (const auto& tok : t.question) {
        ++total;
        if (bundle.vocab.contains(tok)) ++known;
      }
    }
  }
  if (total > 0 && static_cast<double>(known) < min_coverage * static_cast<double>(total)) {
    throw InvalidArgument("corpus does not match the checkpoint vocabulary (" +
                          std::to_string(known) + " of " + std::to_string(total) +
                          " question tokens known)");
  }
  const auto inputs = model::prepare_dialogs(c, bundle.vocab, bundle.model.config(),
                                             bundle.topics ? &*bundle.topics : nullptr);

  json resolved = common_json(common);
  resolved["checkpoint"] = ckpt.string();
  resolved["corpus"] = corpus_path.string();
  resolved["dump_attention"] = dump_attention;
  resolved["min_vocab_coverage"] = min_coverage;
  resolved["decode"] = {{"mode", mode},
                        {"beam_width", opts.beam_width},
                        {"max_length", opts.max_length},
                        {"length_penalty", opts.length_penalty}};
  make_out_dir(common, resolved);

  std::string out;
  std::size_t records = 0;
  for (std::size_t di = 0; di < inputs.size(); ++di) {
    const model::DialogInput& in = inputs[di];
    for (std::size_t t = 0; t < in.num_turns(); ++t) {
      const model::Generation g = bundle.model.generate(in, t, opts);
      json rec = {{"dialog_id", in.dialog_id},
                  {"turn_index", in.turn_index[t]},
                  {"question", c.dialogs[di].turns[t].question},
                  {"reference", c.dialogs[di].turns[t].answer},
                  {"hypothesis", bundle.vocab.decode(g.ids)}};
      if (dump_attention) rec["attention_weights"] = g.attention;
      out += rec.dump() + "\n";
      ++records;
    }
  }
  corpus::write_file(common.out / "hypotheses.jsonl", out);
  CommandResult res;
  res.summary = {{"command", "generate"}, {"records", records}};
  return res;
}

// ---------------------------------------------------------------- evaluate

CommandResult cmd_evaluate(const json& config) {
  ConfigReader r(config, "");
  const Common common = read_common(r, true);
  const fs::path hyp_path = r.require<std::string>("hypotheses");
  const fs::path corpus_path = r.require<std::string>("corpus");
  const auto subsets = r.get<std::vector<std::string>>("subsets", {});
  metrics::EvalOptions opts;
  opts.coref_words = r.get<std::set<std::string>>("coref_words", opts.coref_words);
  opts.audio_words = r.get<std::set<std::string>>("audio_words", opts.audio_words);
  r.finish();
  for (const auto& s : subsets) {
    if (s == "coref") {
      opts.coref = true;
    } else if (s == "audio") {
      opts.audio = true;
    } else if (s == "binary") {
      opts.binary = true;
    } else {
      throw ConfigError("unknown subset '" + s + "' (valid: coref, audio, binary)");
    }
  }
  require_file(hyp_path, "hypotheses");
  require_file(corpus_path, "corpus");
  check_out_dir(common);

  const auto hyps = metrics::load_hypotheses(hyp_path);
  const corpus::Corpus c = load_any_corpus(corpus_path);
  const auto pairs = metrics::join_pairs(hyps, c);
  if (pairs.empty()) throw InvalidArgument("no hypotheses to evaluate");

  json resolved = common_json(common);
  resolved["hypotheses"] = hyp_path.string();
  resolved["corpus"] = corpus_path.string();
  std::vector<std::string> chosen;
  if (opts.coref) chosen.push_back("coref");
  if (opts.audio) chosen.push_back("audio");
  if (opts.binary) chosen.push_back("binary");
  resolved["subsets"] = chosen;
  resolved["coref_words"] = opts.coref_words;
  resolved["audio_words"] = opts.audio_words;
  make_out_dir(common, resolved);

  const metrics::EvalReport report = metrics::evaluate_pairs(pairs, opts);
  const json rj = metrics::to_json(report);
  corpus::write_file(common.out / "report.json", rj.dump(2) + "\n");
  corpus::write_file(common.out / "report.csv", metrics::to_csv(report));
  CommandResult res;
  res.summary = {{"command", "evaluate"}, {"report", rj}};
  return res;
}

// ---------------------------------------------------------------- gradcheck

CommandResult cmd_gradcheck(const json& config) {
  ConfigReader r(config, "");
  const Common common = read_common(r, false);
  GradcheckOptions o;
  o.eps = r.get<double>("eps", o.eps);
  o.tolerance = r.get<double>("tolerance", o.tolerance);
  o.max_coords_per_param = r.get<std::size_t>("max_coords_per_param", o.max_coords_per_param);
  o.inject_bug = r.get<bool>("inject_bug", false);
  r.finish();
  o.seed = common.seed;
  if (!(o.eps > 0.0)) throw ConfigError("field 'eps' must be > 0");
  if (!(o.tolerance > 0.0)) throw ConfigError("field 'tolerance' must be > 0");
  check_out_dir(common);
  CommandResult res = run_gradcheck_suite(o);
  res.summary["command"] = "gradcheck";
  if (!common.out.empty()) {
    json resolved = common_json(common);
    resolved["eps"] = o.eps;
    resolved["tolerance"] = o.tolerance;
    resolved["max_coords_per_param"] = o.max_coords_per_param;
    resolved["inject_bug"] = o.inject_bug;
    make_out_dir(common, resolved);
    corpus::write_file(common.out / "gradcheck.json", res.summary.dump(2) + "\n");
  }
  return res;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"synth", "topics", "train",
                                                 "generate", "evaluate", "gradcheck"};
  return names;
}

CommandResult run_command(const std::string& command, const json& config) {
  if (command == "synth") return cmd_synth(config);
  if (command == "topics") return cmd_topics(config);
  if (command == "train") return cmd_train(config);
  if (command == "generate") return cmd_generate(config);
  if (command == "evaluate") return cmd_evaluate(config);
  if (command == "gradcheck") return cmd_gradcheck(config);
  throw UsageError("unknown command '" + command +
                   "' (valid: synth, topics, train, generate, evaluate, gradcheck)");
}

}  // namespace avsd::pipeline
