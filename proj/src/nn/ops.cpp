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

#include "nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "common/error.hpp"

namespace avsd::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw InvalidArgument(std::string(op) + ": incompatible shapes " +
                        a.shape_string() + " and " + b.shape_string());
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw InvalidArgument("operation on an invalid Var");
  return *a.tape;
}

// c += a * b  (a: m x k, b: k x n, c: m x n)
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.row_ptr(i);
    const double* arow = a.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T  (a: m x n, b: k x n, c: m x k)
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.row_ptr(p);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      crow[p] += s;
    }
  }
}

// c += a^T * b  (a: m x k, b: m x n, c: k x n)
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    const double* brow = b.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() > 1;
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Fwd, typename Deriv>
Var unary(const char* op, Var a, Fwd fwd, Deriv deriv) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  const int ai = a.id;
  return tape_of(a).record(op, std::move(out), {a}, [ai, deriv](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const Tensor& x = t.value(ai);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool bcast = is_row_broadcast(av, bv);
  if (!bcast && !av.same_shape(bv)) shape_error("add", av, bv);
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* o = out.row_ptr(r);
    const double* br = bcast ? bv.row_ptr(0) : bv.row_ptr(r);
    for (std::size_t c = 0; c < out.cols(); ++c) o[c] += br[c];
  }
  const int ai = a.id, bi = b.id;
  return tape_of(a).record("add", std::move(out), {a, b}, [ai, bi, bcast](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      if (bcast) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* gr = g.row_ptr(r);
          for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += gr[c];
        }
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const int ai = a.id, bi = b.id;
  return tape_of(a).record("mul", std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      const Tensor& bv = t.value(bi);
      Tensor& ga = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      const Tensor& av = t.value(ai);
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  const int ai = a.id;
  return tape_of(a).record("scale", std::move(out), {a}, [ai, s](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  gemm_nn(av, bv, out);
  const int ai = a.id, bi = b.id;
  return tape_of(a).record("matmul", std::move(out), {a, b}, [ai, bi](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) gemm_nt(g, t.value(bi), t.grad(ai));
    if (t.requires_grad(bi)) gemm_tn(t.value(ai), g, t.grad(bi));
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.cols(), av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  }
  const int ai = a.id;
  return tape_of(a).record("transpose", std::move(out), {a}, [ai](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
    }
  });
}

Var linear(Var x, Var w, Var b) { return add(matmul(x, w), b); }

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_scalar,
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) {
                 const double d = 1.0 - y * y;
                 return debug::corrupt_backward() ? 2.0 * d : d;
               });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw InvalidArgument("concat of zero tensors");
  if (axis != 0 && axis != 1) throw InvalidArgument("concat axis must be 0 or 1");
  const Tensor& first = parts.front().value();
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (axis == 0) {
      if (v.cols() != first.cols()) shape_error("concat(axis=0)", first, v);
      rows += v.rows();
    } else {
      if (v.rows() != first.rows()) shape_error("concat(axis=1)", first, v);
      cols += v.cols();
    }
  }
  if (axis == 0) cols = first.cols(); else rows = first.rows();
  Tensor out(rows, cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    ids.push_back(p.id);
    offsets.push_back(off);
    for (std::size_t r = 0; r < v.rows(); ++r) {
      const double* src = v.row_ptr(r);
      double* dst = axis == 0 ? out.row_ptr(off + r) : out.row_ptr(r) + off;
      std::copy(src, src + v.cols(), dst);
    }
    off += axis == 0 ? v.rows() : v.cols();
  }
  return tape_of(parts.front()).record(
      "concat", std::move(out), parts, [ids, offsets, axis](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad(ids[k]);
          for (std::size_t r = 0; r < gp.rows(); ++r) {
            const double* src = axis == 0 ? g.row_ptr(offsets[k] + r)
                                          : g.row_ptr(r) + offsets[k];
            double* dst = gp.row_ptr(r);
            for (std::size_t c = 0; c < gp.cols(); ++c) dst[c] += src[c];
          }
        }
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (begin > end || end > av.cols()) {
    throw InvalidArgument("slice_cols [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") out of range for " +
                          av.shape_string());
  }
  Tensor out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row_ptr(r) + begin, av.row_ptr(r) + end, out.row_ptr(r));
  }
  const int ai = a.id;
  return tape_of(a).record("slice_cols", std::move(out), {a}, [ai, begin](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double* dst = ga.row_ptr(r) + begin;
      const double* src = g.row_ptr(r);
      for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (begin > end || end > av.rows()) {
    throw InvalidArgument("slice_rows [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") out of range for " +
                          av.shape_string());
  }
  Tensor out(end - begin, av.cols());
  std::copy(av.row_ptr(begin), av.row_ptr(begin) + out.size(), out.data());
  const int ai = a.id;
  return tape_of(a).record("slice_rows", std::move(out), {a}, [ai, begin](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    double* dst = t.grad(ai).row_ptr(begin);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Var row_lookup(Var table, const std::vector<int>& ids) {
  const Tensor& tv = table.value();
  Tensor out(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= tv.rows()) {
      throw InvalidArgument("row_lookup id " + std::to_string(ids[r]) +
                            " outside table " + tv.shape_string());
    }
    const double* src = tv.row_ptr(static_cast<std::size_t>(ids[r]));
    std::copy(src, src + tv.cols(), out.row_ptr(r));
  }
  const int ti = table.id;
  return tape_of(table).record("row_lookup", std::move(out), {table}, [ti, ids](Tape& t, int self) {
    if (!t.requires_grad(ti)) return;
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad(ti);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      double* dst = gt.row_ptr(static_cast<std::size_t>(ids[r]));
      const double* src = g.row_ptr(r);
      for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
    }
  });
}

namespace {

// Softmax over the elements of `a` addressed by (line, k) -> index.
template <typename Index>
void softmax_lines(const Tensor& a, Tensor& out, std::size_t lines,
                   std::size_t len, Index idx, const std::vector<bool>* mask) {
  for (std::size_t l = 0; l < lines; ++l) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) {
      if (mask && !(*mask)[k]) continue;
      mx = std::max(mx, a[idx(l, k)]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t i = idx(l, k);
      if (mask && !(*mask)[k]) {
        out[i] = 0.0;
        continue;
      }
      out[i] = std::exp(a[i] - mx);
      total += out[i];
    }
    for (std::size_t k = 0; k < len; ++k) out[idx(l, k)] /= total;
  }
}

template <typename Index>
void softmax_backward(const Tensor& y, const Tensor& g, Tensor& ga,
                      std::size_t lines, std::size_t len, Index idx) {
  for (std::size_t l = 0; l < lines; ++l) {
    double dot = 0.0;
    for (std::size_t k = 0; k < len; ++k) dot += g[idx(l, k)] * y[idx(l, k)];
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t i = idx(l, k);
      ga[i] += y[i] * (g[i] - dot);
    }
  }
}

}  // namespace

Var softmax(Var a, int axis) {
  const Tensor& av = a.value();
  if (axis != 0 && axis != 1) throw InvalidArgument("softmax axis must be 0 or 1");
  Tensor out(av.rows(), av.cols());
  const std::size_t cols = av.cols();
  const std::size_t lines = axis == 1 ? av.rows() : av.cols();
  const std::size_t len = axis == 1 ? av.cols() : av.rows();
  auto idx_row = [cols](std::size_t l, std::size_t k) { return l * cols + k; };
  auto idx_col = [cols](std::size_t l, std::size_t k) { return k * cols + l; };
  if (axis == 1) softmax_lines(av, out, lines, len, idx_row, nullptr);
  else softmax_lines(av, out, lines, len, idx_col, nullptr);
  const int ai = a.id;
  return tape_of(a).record("softmax", std::move(out), {a},
                           [ai, axis, cols, lines, len, idx_row, idx_col](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    if (axis == 1) softmax_backward(t.value(self), t.grad(self), t.grad(ai), lines, len, idx_row);
    else softmax_backward(t.value(self), t.grad(self), t.grad(ai), lines, len, idx_col);
  });
}

Var masked_softmax(Var a, const std::vector<bool>& mask) {
  const Tensor& av = a.value();
  if (mask.size() != av.cols()) {
    throw InvalidArgument("masked_softmax: mask length " +
                          std::to_string(mask.size()) + " != columns of " +
                          av.shape_string());
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool m) { return m; })) {
    throw InvalidArgument("masked_softmax: every position is masked");
  }
  Tensor out(av.rows(), av.cols());
  const std::size_t cols = av.cols();
  auto idx = [cols](std::size_t l, std::size_t k) { return l * cols + k; };
  softmax_lines(av, out, av.rows(), cols, idx, &mask);
  const int ai = a.id;
  return tape_of(a).record("masked_softmax", std::move(out), {a}, [ai, idx, cols](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& y = t.value(self);
    softmax_backward(y, t.grad(self), t.grad(ai), y.rows(), cols, idx);
  });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
  const int ai = a.id;
  return tape_of(a).record("sum", Tensor::scalar(s), {a}, [ai](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw InvalidArgument("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var masked_sum(Var a, const std::vector<bool>& row_mask) {
  const Tensor& av = a.value();
  if (row_mask.size() != av.rows()) {
    throw InvalidArgument("masked_sum: mask length does not match rows of " +
                          av.shape_string());
  }
  Tensor out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    if (!row_mask[r]) continue;
    for (std::size_t c = 0; c < av.cols(); ++c) out[c] += av(r, c);
  }
  const int ai = a.id;
  return tape_of(a).record("masked_sum", std::move(out), {a}, [ai, row_mask](Tape& t, int self) {
    if (!t.requires_grad(ai)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ai);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      if (!row_mask[r]) continue;
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c];
    }
  });
}

Var cross_entropy(Var logits, const std::vector<int>& targets,
                  const std::vector<bool>& mask) {
  const Tensor& lv = logits.value();
  const std::size_t rows = lv.rows(), v = lv.cols();
  if (targets.size() != rows || mask.size() != rows) {
    throw InvalidArgument("cross_entropy: targets/mask length must equal rows of " +
                          lv.shape_string());
  }
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    ++count;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= v) {
      throw InvalidArgument("cross_entropy: target " + std::to_string(targets[r]) +
                            " outside vocabulary of " + std::to_string(v));
    }
  }
  if (count == 0) throw InvalidArgument("cross_entropy: every position is masked");

  auto probs = std::make_shared<Tensor>(rows, v);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    const double* lr = lv.row_ptr(r);
    double mx = lr[0];
    for (std::size_t c = 1; c < v; ++c) mx = std::max(mx, lr[c]);
    double total = 0.0;
    double* pr = probs->row_ptr(r);
    for (std::size_t c = 0; c < v; ++c) {
      pr[c] = std::exp(lr[c] - mx);
      total += pr[c];
    }
    for (std::size_t c = 0; c < v; ++c) pr[c] /= total;
    loss += std::log(total) + mx - lr[targets[r]];
  }
  loss /= static_cast<double>(count);
  const int li = logits.id;
  return tape_of(logits).record(
      "cross_entropy", Tensor::scalar(loss), {logits},
      [li, probs, targets, mask, count](Tape& t, int self) {
        if (!t.requires_grad(li)) return;
        const double g = t.grad(self)[0] / static_cast<double>(count);
        Tensor& gl = t.grad(li);
        for (std::size_t r = 0; r < gl.rows(); ++r) {
          if (!mask[r]) continue;
          const double* pr = probs->row_ptr(r);
          double* dst = gl.row_ptr(r);
          for (std::size_t c = 0; c < gl.cols(); ++c) dst[c] += g * pr[c];
          dst[targets[r]] -= g;
        }
      });
}

LstmState lstm_step(Var x, LstmState prev, const LstmWeights& weights) {
  const Tensor& xv = x.value();
  const Tensor& hv = prev.h.value();
  const Tensor& cv = prev.c.value();
  const Tensor& wv = weights.w.value();
  const Tensor& uv = weights.u.value();
  const Tensor& bv = weights.b.value();
  const std::size_t m = xv.rows();
  const std::size_t hidden = uv.rows();
  if (wv.rows() != xv.cols() || wv.cols() != 4 * hidden) shape_error("lstm_step(x, W)", xv, wv);
  if (uv.cols() != 4 * hidden) shape_error("lstm_step(U)", hv, uv);
  if (hv.rows() != m || hv.cols() != hidden) shape_error("lstm_step(h, U)", hv, uv);
  if (!cv.same_shape(hv)) shape_error("lstm_step(c, h)", cv, hv);
  if (bv.rows() != 1 || bv.cols() != 4 * hidden) shape_error("lstm_step(b)", bv, wv);

  // gates holds post-activation i, f, o, g per row.
  auto gates = std::make_shared<Tensor>(m, 4 * hidden);
  for (std::size_t r = 0; r < m; ++r) std::copy(bv.data(), bv.data() + 4 * hidden, gates->row_ptr(r));
  gemm_nn(xv, wv, *gates);
  gemm_nn(hv, uv, *gates);
  Tensor out(m, 2 * hidden);
  for (std::size_t r = 0; r < m; ++r) {
    double* gr = gates->row_ptr(r);
    double* o = out.row_ptr(r);
    const double* cp = cv.row_ptr(r);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = sigmoid_scalar(gr[j]);
      const double f = sigmoid_scalar(gr[hidden + j]);
      const double og = sigmoid_scalar(gr[2 * hidden + j]);
      const double g = std::tanh(gr[3 * hidden + j]);
      gr[j] = i;
      gr[hidden + j] = f;
      gr[2 * hidden + j] = og;
      gr[3 * hidden + j] = g;
      const double c = f * cp[j] + i * g;
      o[hidden + j] = c;
      o[j] = og * std::tanh(c);
    }
  }
  const int xi = x.id, hi = prev.h.id, ci = prev.c.id;
  const int wi = weights.w.id, ui = weights.u.id, bi = weights.b.id;
  Var packed = tape_of(x).record(
      "lstm_step", std::move(out), {x, prev.h, prev.c, weights.w, weights.u, weights.b},
      [=](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        const Tensor& cprev = t.value(ci);
        Tensor dz(m, 4 * hidden);
        for (std::size_t r = 0; r < m; ++r) {
          const double* gr = gates->row_ptr(r);
          const double* gy = g.row_ptr(r);
          const double* yr = y.row_ptr(r);
          const double* cp = cprev.row_ptr(r);
          double* d = dz.row_ptr(r);
          for (std::size_t j = 0; j < hidden; ++j) {
            const double i = gr[j], f = gr[hidden + j], o = gr[2 * hidden + j],
                         gg = gr[3 * hidden + j];
            const double tc = std::tanh(yr[hidden + j]);
            const double dh = gy[j];
            const double dc = gy[hidden + j] + dh * o * (1.0 - tc * tc);
            d[j] = dc * gg * i * (1.0 - i);
            d[hidden + j] = dc * cp[j] * f * (1.0 - f);
            d[2 * hidden + j] = dh * tc * o * (1.0 - o);
            d[3 * hidden + j] = dc * i * (1.0 - gg * gg);
          }
        }
        if (t.requires_grad(ci)) {
          Tensor& gc = t.grad(ci);
          for (std::size_t r = 0; r < m; ++r) {
            const double* gr = gates->row_ptr(r);
            const double* gy = g.row_ptr(r);
            const double* yr = y.row_ptr(r);
            for (std::size_t j = 0; j < hidden; ++j) {
              const double o = gr[2 * hidden + j];
              const double tc = std::tanh(yr[hidden + j]);
              const double dc = gy[hidden + j] + gy[j] * o * (1.0 - tc * tc);
              gc(r, j) += dc * gr[hidden + j];
            }
          }
        }
        if (t.requires_grad(xi)) gemm_nt(dz, t.value(wi), t.grad(xi));
        if (t.requires_grad(wi)) gemm_tn(t.value(xi), dz, t.grad(wi));
        if (t.requires_grad(hi)) gemm_nt(dz, t.value(ui), t.grad(hi));
        if (t.requires_grad(ui)) gemm_tn(t.value(hi), dz, t.grad(ui));
        if (t.requires_grad(bi)) {
          Tensor& gb = t.grad(bi);
          for (std::size_t r = 0; r < m; ++r) {
            const double* d = dz.row_ptr(r);
            for (std::size_t j = 0; j < 4 * hidden; ++j) gb[j] += d[j];
          }
        }
      });
  return {slice_cols(packed, 0, hidden), slice_cols(packed, hidden, 2 * hidden)};
}

}  // namespace avsd::nn
