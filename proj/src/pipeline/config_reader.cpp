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

#include "pipeline/config_reader.hpp"

namespace avsd::pipeline {

ConfigReader::ConfigReader(const nlohmann::json& j, std::string where)
    : j_(j.is_null() ? nlohmann::json::object() : j), where_(std::move(where)) {
  if (!j_.is_object()) {
    throw ConfigError((where_.empty() ? std::string("config") : "field '" + where_ + "'") +
                      " must be a JSON object");
  }
}

bool ConfigReader::has(const std::string& key) const {
  return j_.contains(key) && !j_.at(key).is_null();
}

ConfigReader ConfigReader::child(const std::string& key) {
  seen_.insert(key);
  return ConfigReader(has(key) ? j_.at(key) : nlohmann::json::object(), path(key));
}

const nlohmann::json& ConfigReader::raw(const std::string& key) {
  seen_.insert(key);
  return j_.at(key);
}

std::string ConfigReader::path(const std::string& key) const {
  return where_.empty() ? key : where_ + "." + key;
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (seen_.count(key) == 0) throw ConfigError("unknown config key '" + path(key) + "'");
  }
}

}  // namespace avsd::pipeline
