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

#include "corpus/vocab.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace avsd::corpus {

namespace {
const char* const kReservedTokens[] = {"<pad>", "<sos>", "<eos>", "<unk>"};
}

Vocab::Vocab() {
  for (const char* t : kReservedTokens) add(t);
}

void Vocab::add(const std::string& token) {
  token_to_id_.emplace(token, static_cast<TokenId>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocab Vocab::from_counts(const std::map<std::string, std::size_t>& counts,
                         int min_count) {
  if (min_count < 1) {
    throw InvalidArgument("min_count must be >= 1, got " +
                          std::to_string(min_count));
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(min_count) &&
        std::find(std::begin(kReservedTokens), std::end(kReservedTokens),
                  tok) == std::end(kReservedTokens)) {
      kept.emplace_back(tok, n);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  v.min_count_ = min_count;
  for (const auto& [tok, n] : kept) v.add(tok);
  return v;
}

Vocab Vocab::build(const Corpus& corpus, int min_count) {
  if (corpus.dialogs.empty()) {
    throw InvalidArgument("cannot build a vocabulary from an empty corpus");
  }
  std::map<std::string, std::size_t> counts;
  for (const Dialog& d : corpus.dialogs) {
    for (const auto& t : d.caption) ++counts[t];
    for (const Turn& turn : d.turns) {
      for (const auto& t : turn.question) ++counts[t];
      for (const auto& t : turn.answer) ++counts[t];
    }
  }
  return from_counts(counts, min_count);
}

Vocab Vocab::from_token_list(const std::vector<std::string>& tokens) {
  if (tokens.size() < kReserved) {
    throw InvalidArgument("token list shorter than the reserved block");
  }
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (tokens[i] != kReservedTokens[i]) {
      throw InvalidArgument("reserved token " + std::to_string(i) +
                            " must be '" + kReservedTokens[i] + "'");
    }
  }
  Vocab v;
  for (std::size_t i = kReserved; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) {
      throw InvalidArgument("duplicate token '" + tokens[i] + "'");
    }
    v.add(tokens[i]);
  }
  return v;
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

TokenId Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw InvalidArgument("token id " + std::to_string(id) +
                          " out of range [0, " +
                          std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode(const Tokens& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocab::decode(const std::vector<TokenId>& ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

}  // namespace avsd::corpus
