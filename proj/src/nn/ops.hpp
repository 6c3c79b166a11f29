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
#include <utility>
#include <vector>

#include "nn/tape.hpp"

namespace avsd::nn {

// Elementwise a + b. b may also be a 1 x cols row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var matmul(Var a, Var b);
Var transpose(Var a);
// x W + b with b broadcast over rows.
Var linear(Var x, Var w, Var b);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

// axis 0 stacks rows, axis 1 joins columns.
Var concat(const std::vector<Var>& parts, int axis);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
// Embedding lookup: one output row per id.
Var row_lookup(Var table, const std::vector<int>& ids);

// axis 1 normalizes each row, axis 0 each column.
Var softmax(Var a, int axis);
// Row-wise softmax over the unmasked columns; masked columns get weight 0.
Var masked_softmax(Var a, const std::vector<bool>& mask);

Var sum(Var a);
Var mean(Var a);
// Column sums over the rows whose mask entry is true (1 x cols).
Var masked_sum(Var a, const std::vector<bool>& row_mask);

// Mean of -log softmax(logits[t])[targets[t]] over rows with mask[t] set.
Var cross_entropy(Var logits, const std::vector<int>& targets,
                  const std::vector<bool>& mask);

struct LstmWeights {
  Var w;  // in x 4H, gate blocks ordered i, f, o, g
  Var u;  // H x 4H
  Var b;  // 1 x 4H
};

struct LstmState {
  Var h;
  Var c;
};

// i = σ(xW_i + hU_i + b_i), f, o likewise, g = tanh(...),
// c' = f⊙c + i⊙g, h' = o⊙tanh(c'). Rows of x are independent batch items.
LstmState lstm_step(Var x, LstmState prev, const LstmWeights& weights);

}  // namespace avsd::nn
