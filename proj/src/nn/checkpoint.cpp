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

#include "nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>

#include "common/error.hpp"
#include "corpus/io.hpp"

namespace avsd::nn {

namespace {

constexpr char kMagic[4] = {'A', 'V', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::uint64_t uint(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* CheckpointBlob::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::vector<unsigned char> encode_checkpoint(const CheckpointBlob& blob) {
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put(out, kVersion, 4);
  put(out, blob.header_json.size(), 8);
  out.insert(out.end(), blob.header_json.begin(), blob.header_json.end());
  put(out, blob.tensors.size(), 4);
  for (const auto& [name, t] : blob.tensors) {
    put(out, name.size(), 4);
    out.insert(out.end(), name.begin(), name.end());
    put(out, t.rows(), 4);
    put(out, t.cols(), 4);
    for (double v : t.values()) {
      std::uint64_t raw;
      std::memcpy(&raw, &v, sizeof raw);
      put(out, raw, 8);
    }
  }
  return out;
}

CheckpointBlob decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic", 0);
  }
  Reader r(bytes);
  r.str(4, "magic");
  const auto version = r.uint(4, "version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  CheckpointBlob blob;
  const auto header_len = r.uint(8, "header length");
  blob.header_json = r.str(header_len, "header");
  const auto count = r.uint(4, "tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.uint(4, "tensor name length");
    std::string name = r.str(name_len, "tensor name");
    const auto rows = r.uint(4, "tensor rows");
    const auto cols = r.uint(4, "tensor cols");
    Tensor t(rows, cols);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const std::uint64_t raw = r.uint(8, "tensor payload");
      std::memcpy(&t[j], &raw, sizeof raw);
    }
    blob.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return blob;
}

void write_checkpoint(const CheckpointBlob& blob, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(blob);
  corpus::write_file(path, std::string(bytes.begin(), bytes.end()));
}

CheckpointBlob read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(corpus::read_binary_file(path));
}

}  // namespace avsd::nn
