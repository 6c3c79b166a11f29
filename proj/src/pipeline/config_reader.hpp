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

#include <set>
#include <string>

#include <json.hpp>

#include "common/error.hpp"

namespace avsd::pipeline {

// Typed access to one JSON object of a run config. Every key read is
// remembered so finish() can reject the ones nobody asked for.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string where);

  bool has(const std::string& key) const;

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("field '" + path(key) + "' has the wrong type");
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required field '" + path(key) + "'");
    return get<T>(key, T{});
  }

  ConfigReader child(const std::string& key);
  const nlohmann::json& raw(const std::string& key);
  std::string path(const std::string& key) const;

  // Throws ConfigError naming the first unknown key.
  void finish() const;

 private:
  nlohmann::json j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace avsd::pipeline
