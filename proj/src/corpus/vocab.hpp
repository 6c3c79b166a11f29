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
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus/dialog.hpp"

namespace avsd::corpus {

using TokenId = int;

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kSos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocab();

  // Counts question, answer and caption tokens. Tokens seen at least
  // min_count times get ids in order of descending frequency, ties broken
  // lexicographically.
  static Vocab build(const Corpus& corpus, int min_count);
  static Vocab from_counts(const std::map<std::string, std::size_t>& counts,
                           int min_count);
  // Restores a vocab from its full id-ordered token list (reserved tokens
  // included), as stored in checkpoints.
  static Vocab from_token_list(const std::vector<std::string>& tokens);

  std::size_t size() const { return id_to_token_.size(); }
  int min_count() const { return min_count_; }
  bool contains(const std::string& token) const;
  TokenId id(const std::string& token) const;  // kUnk when absent
  const std::string& token(TokenId id) const;  // throws when out of range
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<TokenId> encode(const Tokens& tokens) const;
  Tokens decode(const std::vector<TokenId>& ids) const;

  bool operator==(const Vocab& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  void add(const std::string& token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  int min_count_ = 1;
};

}  // namespace avsd::corpus
