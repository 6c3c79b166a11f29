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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nn/tensor.hpp"

namespace avsd::nn {

// Binary container: "AVCK", u32 version, u64 header length, JSON header,
// u32 tensor count, then per tensor: u32 name length, name, u32 rows,
// u32 cols, rows*cols little-endian f64. Round-trips bit-exactly.
struct CheckpointBlob {
  std::string header_json;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

std::vector<unsigned char> encode_checkpoint(const CheckpointBlob& blob);
CheckpointBlob decode_checkpoint(const std::vector<unsigned char>& bytes);
void write_checkpoint(const CheckpointBlob& blob,
                      const std::filesystem::path& path);
CheckpointBlob read_checkpoint(const std::filesystem::path& path);

}  // namespace avsd::nn
