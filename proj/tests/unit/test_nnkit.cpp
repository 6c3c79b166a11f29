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
#include <functional>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "nn/checkpoint.hpp"
#include "nn/grad_check.hpp"
#include "nn/ops.hpp"
#include "nn/optimizer.hpp"
#include "nn/parameter.hpp"
#include "nn/tape.hpp"
#include "support/test_util.hpp"

using namespace avsd;
using namespace avsd::nn;

namespace {

Parameter& random_param(ParameterSet& ps, const std::string& name, std::size_t r,
                        std::size_t c, Rng& rng) {
  Parameter& p = ps.add(name, r, c);
  for (double& v : p.value.values()) v = rng.uniform(-1.0, 1.0);
  return p;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Contracts an op output with fixed random weights so every output
// coordinate contributes a distinct gradient.
Var probe(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, tape.constant(random_tensor(out.rows(), out.cols(), rng))));
}

double check_op(ParameterSet& ps, const std::function<Var(Tape&)>& op) {
  return grad_check([&](Tape& t) { return probe(t, op(t), 99); }, ps).max_rel_error;
}

struct CorruptGuard {
  CorruptGuard() { debug::set_corrupt_backward(true); }
  ~CorruptGuard() { debug::set_corrupt_backward(false); }
};

Tensor eval(const std::function<Var(Tape&)>& f) {
  Tape t;
  return f(t).value();
}

}  // namespace

TEST_CASE("op forward examples") {
  Tape t;
  const Var s = softmax(t.constant(Tensor::row({0, 0, 0})), 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.value()[i] == doctest::Approx(1.0 / 3.0));
  const Tensor a(2, 2, {1.5, -2, 3, 4});
  const Var id = t.constant(Tensor(2, 2, {1, 0, 0, 1}));
  CHECK(matmul(id, t.constant(a)).value() == a);
  CHECK(sigmoid(t.constant(Tensor::scalar(0))).value()[0] == 0.5);
  CHECK(transpose(t.constant(Tensor(1, 2, {1, 2}))).value() == Tensor(2, 1, {1, 2}));
  CHECK(add(t.constant(a), t.constant(Tensor::row({1, 1}))).value() == Tensor(2, 2, {2.5, -1, 4, 5}));
}

TEST_CASE("shape mismatches name both shapes") {
  Tape t;
  try {
    matmul(t.constant(Tensor(2, 3)), t.constant(Tensor(2, 3)));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    const std::string what = e.what();
    CHECK(what.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(add(t.constant(Tensor(2, 3)), t.constant(Tensor(3, 2))), Error);
  CHECK_THROWS_AS(slice_cols(t.constant(Tensor(1, 3)), 2, 4), Error);
  CHECK_THROWS_AS(row_lookup(t.constant(Tensor(3, 2)), {3}), Error);
  CHECK_THROWS_AS(t.constant(Tensor::scalar(std::nan(""))), Error);
  CHECK_THROWS_AS(scale(t.constant(Tensor::scalar(1e308)), 1e10), Error);
}

TEST_CASE("softmax rows sum to one and cross entropy is non-negative") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Tape t;
    const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(6);
    Tensor x = random_tensor(r, c, rng);
    for (double& v : x.values()) v *= 20.0;
    const Var s = softmax(t.constant(x), 1);
    for (std::size_t i = 0; i < r; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) total += s.value()(i, j);
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    std::vector<int> targets;
    for (std::size_t i = 0; i < r; ++i) targets.push_back(static_cast<int>(rng.below(c)));
    CHECK(cross_entropy(t.constant(x), targets, std::vector<bool>(r, true)).value()[0] >= 0.0);
  }
}

TEST_CASE("cross entropy examples") {
  Tape t;
  CHECK(cross_entropy(t.constant(Tensor(1, 50)), {7}, {true}).value()[0] ==
        doctest::Approx(std::log(50.0)).epsilon(1e-12));
  Tensor peaked(1, 4);
  peaked[2] = 100.0;
  CHECK(cross_entropy(t.constant(peaked), {2}, {true}).value()[0] < 1e-40 + 1e-15);
  Tensor two(2, 3, {0.1, 0.5, -0.2, 3.0, 1.0, 0.0});
  const double both = cross_entropy(t.constant(two), {1, 0}, {true, false}).value()[0];
  const double single =
      cross_entropy(t.constant(Tensor::row({0.1, 0.5, -0.2})), {1}, {true}).value()[0];
  CHECK(both == single);
  CHECK_THROWS_AS(cross_entropy(t.constant(two), {1, 0}, {false, false}), Error);
}

TEST_CASE("masked softmax zeroes masked columns") {
  Tape t;
  const Var s = masked_softmax(t.constant(Tensor::row({1.0, 5.0, 0.0})), {true, false, true});
  CHECK(s.value()[1] == 0.0);
  CHECK(s.value()[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));
  CHECK_THROWS_AS(masked_softmax(t.constant(Tensor::row({1.0})), {false}), Error);
}

TEST_CASE("lstm step closed forms") {
  Tape t;
  const std::size_t h = 3, in = 2;
  LstmWeights zero{t.constant(Tensor(in, 4 * h)), t.constant(Tensor(h, 4 * h)),
                   t.constant(Tensor(1, 4 * h))};
  const Var x = t.constant(Tensor::row({0.3, -0.7}));
  const LstmState s0 = lstm_step(x, {t.constant(Tensor(1, h)), t.constant(Tensor(1, h))}, zero);
  CHECK(s0.h.value() == Tensor(1, h));
  CHECK(s0.c.value() == Tensor(1, h));
  const Tensor c = Tensor::row({1.0, -2.0, 0.25});
  const LstmState s1 = lstm_step(x, {t.constant(Tensor(1, h)), t.constant(c)}, zero);
  for (std::size_t i = 0; i < h; ++i) CHECK(s1.c.value()[i] == 0.5 * c[i]);
  CHECK_THROWS_AS(lstm_step(t.constant(Tensor(1, 3)), {t.constant(Tensor(1, h)), t.constant(Tensor(1, h))}, zero),
                  Error);
}

TEST_CASE("every differentiable op passes a finite-difference check") {
  Rng rng(2024);
  ParameterSet ps;
  Parameter& a = random_param(ps, "a", 3, 4, rng);
  Parameter& b = random_param(ps, "b", 3, 4, rng);
  Parameter& row = random_param(ps, "row", 1, 4, rng);
  Parameter& m = random_param(ps, "m", 4, 2, rng);
  const std::vector<bool> mask = {true, false, true, true};
  const std::vector<bool> rows = {true, false, true};
  const double tol = 1e-4;

  struct Case {
    const char* name;
    std::function<Var(Tape&)> op;
  };
  const std::vector<Case> cases = {
      {"add", [&](Tape& t) { return add(t.param(a), t.param(b)); }},
      {"add_broadcast", [&](Tape& t) { return add(t.param(a), t.param(row)); }},
      {"sub", [&](Tape& t) { return sub(t.param(a), t.param(b)); }},
      {"mul", [&](Tape& t) { return mul(t.param(a), t.param(b)); }},
      {"scale", [&](Tape& t) { return scale(t.param(a), -1.7); }},
      {"matmul", [&](Tape& t) { return matmul(t.param(a), t.param(m)); }},
      {"transpose", [&](Tape& t) { return transpose(t.param(a)); }},
      {"linear", [&](Tape& t) { return linear(t.param(b), t.param(m), t.constant(Tensor::row({0.1, 0.2}))); }},
      {"sigmoid", [&](Tape& t) { return sigmoid(t.param(a)); }},
      {"tanh", [&](Tape& t) { return nn::tanh(t.param(a)); }},
      {"relu", [&](Tape& t) { return relu(t.param(a)); }},
      {"concat0", [&](Tape& t) { return concat({t.param(a), t.param(row), t.param(b)}, 0); }},
      {"concat1", [&](Tape& t) { return concat({t.param(a), t.param(b)}, 1); }},
      {"slice_cols", [&](Tape& t) { return slice_cols(t.param(a), 1, 3); }},
      {"slice_rows", [&](Tape& t) { return slice_rows(t.param(a), 1, 3); }},
      {"row_lookup", [&](Tape& t) { return row_lookup(t.param(a), {2, 0, 2}); }},
      {"softmax1", [&](Tape& t) { return softmax(t.param(a), 1); }},
      {"softmax0", [&](Tape& t) { return softmax(t.param(a), 0); }},
      {"masked_softmax", [&](Tape& t) { return masked_softmax(t.param(a), mask); }},
      {"sum", [&](Tape& t) { return sum(t.param(a)); }},
      {"mean", [&](Tape& t) { return mean(t.param(a)); }},
      {"masked_sum", [&](Tape& t) { return masked_sum(t.param(a), rows); }},
      {"cross_entropy", [&](Tape& t) { return cross_entropy(t.param(a), {1, 3, 0}, rows); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(check_op(ps, c.op) <= tol);
  }

  SUBCASE("lstm step") {
    ParameterSet lp;
    Parameter& x = random_param(lp, "x", 2, 3, rng);
    Parameter& h = random_param(lp, "h", 2, 4, rng);
    Parameter& c = random_param(lp, "c", 2, 4, rng);
    Parameter& w = random_param(lp, "w", 3, 16, rng);
    Parameter& u = random_param(lp, "u", 4, 16, rng);
    Parameter& bias = random_param(lp, "bias", 1, 16, rng);
    auto build = [&](Tape& t) {
      LstmWeights wts{t.param(w), t.param(u), t.param(bias)};
      const LstmState s = lstm_step(t.param(x), {t.param(h), t.param(c)}, wts);
      return add(probe(t, s.h, 5), probe(t, s.c, 6));
    };
    CHECK(grad_check(build, lp).max_rel_error <= tol);
  }
}

TEST_CASE("tape backward examples") {
  ParameterSet ps;
  Parameter& x = ps.add("x", 1, 2);
  x.value = Tensor::row({1, 2});
  Parameter& unused = ps.add("unused", 1, 1);
  Tape t;
  t.param(unused);
  const Var xv = t.param(x);
  t.backward(sum(mul(xv, xv)));
  CHECK(x.grad == Tensor::row({2, 4}));
  CHECK(unused.grad[0] == 0.0);
  try {
    t.backward(xv);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUsage);
  }
  t.reset();
  ps.zero_grad();
  t.backward(sum(t.param(x)));
  CHECK(x.grad == Tensor::row({1, 1}));
}

TEST_CASE("tanh chain matches finite differences") {
  Rng rng(3);
  ParameterSet ps;
  Parameter& x = random_param(ps, "x", 1, 6, rng);
  const auto build = [&](Tape& t) { return sum(nn::tanh(nn::tanh(t.param(x)))); };
  CHECK(grad_check(build, ps).max_rel_error <= 1e-6);
}

TEST_CASE("grad check exactness and sensitivity") {
  Rng rng(4);
  ParameterSet ps;
  Parameter& x = random_param(ps, "x", 2, 3, rng);
  const auto quad = [&](Tape& t) {
    const Var v = t.param(x);
    return sum(mul(v, v));
  };
  CHECK(grad_check(quad, ps).max_rel_error <= 1e-8);

  const auto chain = [&](Tape& t) { return probe(t, nn::tanh(t.param(x)), 1); };
  CorruptGuard guard;
  const GradCheckResult r = grad_check(chain, ps);
  CHECK(r.max_rel_error >= 0.3);
  CHECK(r.worst_param == "x");
}

TEST_CASE("forward results are bit-identical across runs") {
  Rng rng(5);
  const Tensor a = random_tensor(4, 5, rng), w = random_tensor(5, 3, rng);
  const auto f = [&](Tape& t) { return softmax(nn::tanh(matmul(t.constant(a), t.constant(w))), 1); };
  CHECK(eval(f) == eval(f));
}

TEST_CASE("optimizer updates") {
  SUBCASE("adam first step is -lr * sign(g)") {
    ParameterSet ps;
    Parameter& p = ps.add("p", 1, 3);
    p.grad = Tensor::row({0.5, -2.0, 1e-3});
    OptimizerConfig cfg;
    cfg.learning_rate = 0.01;
    Optimizer opt(cfg);
    opt.step(ps);
    CHECK(p.value[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.value[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p.value[2] == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(p.grad == Tensor::row({0, 0, 0}));
    CHECK(opt.steps() == 1);
  }
  SUBCASE("sgd with lr 0 leaves parameters unchanged") {
    ParameterSet ps;
    Parameter& p = ps.add("p", 2, 2);
    p.value = Tensor(2, 2, {1, 2, 3, 4});
    p.grad = Tensor(2, 2, {5, 6, 7, 8});
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::kSgd;
    cfg.learning_rate = 0.0;
    Optimizer(cfg).step(ps);
    CHECK(p.value == Tensor(2, 2, {1, 2, 3, 4}));
  }
  SUBCASE("sgd and clipping") {
    ParameterSet ps;
    Parameter& p = ps.add("p", 1, 2);
    p.grad = Tensor::row({3, 4});
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::kSgd;
    cfg.learning_rate = 0.5;
    cfg.clip_norm = 1.0;
    Optimizer(cfg).step(ps);
    CHECK(p.value[0] == doctest::Approx(-0.3));
    CHECK(p.value[1] == doctest::Approx(-0.4));
  }
  SUBCASE("identical state gives identical updates") {
    Rng rng(6);
    ParameterSet a, b;
    Parameter& pa = random_param(a, "p", 3, 3, rng);
    Parameter& pb = b.add("p", 3, 3);
    pb.value = pa.value;
    Optimizer oa({}), ob({});
    for (int step = 0; step < 5; ++step) {
      const Tensor g = random_tensor(3, 3, rng);
      pa.grad = g;
      pb.grad = g;
      oa.step(a);
      ob.step(b);
    }
    CHECK(pa.value == pb.value);
    // A restored optimizer continues identically.
    Optimizer oc({});
    oc.restore(oa.steps(), oa.moments());
    ParameterSet c;
    Parameter& pc = c.add("p", 3, 3);
    pc.value = pa.value;
    const Tensor g = random_tensor(3, 3, rng);
    pa.grad = g;
    pc.grad = g;
    oa.step(a);
    oc.step(c);
    CHECK(pa.value == pc.value);
  }
  SUBCASE("non-finite gradient names the parameter") {
    ParameterSet ps;
    Parameter& ok = ps.add("fine", 1, 1);
    ps.add("broken", 1, 1).grad[0] = std::nan("");
    try {
      Optimizer({}).step(ps);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }
    CHECK(ok.value[0] == 0.0);
  }
}

TEST_CASE("glorot initialization bounds") {
  Rng rng(7);
  ParameterSet ps;
  const Parameter& p = ps.add_glorot("w", 10, 20, rng);
  const double bound = std::sqrt(6.0 / 30.0);
  for (double v : p.value.values()) CHECK(std::abs(v) <= bound);
  CHECK_THROWS_AS(ps.add("w", 1, 1), Error);
}

TEST_CASE("checkpoint container round trip") {
  Rng rng(8);
  CheckpointBlob blob;
  blob.header_json = R"({"k":1})";
  blob.tensors.emplace_back("alpha", random_tensor(3, 2, rng));
  blob.tensors.emplace_back("beta", Tensor::row({1e-300, -0.0, 12345.678}));
  const auto bytes = encode_checkpoint(blob);
  const CheckpointBlob back = decode_checkpoint(bytes);
  CHECK(back.header_json == blob.header_json);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0] == blob.tensors[0]);
  CHECK(std::signbit(back.find("beta")->values()[1]));
  CHECK(encode_checkpoint(back) == bytes);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto magic = bytes;
  magic[0] = 'Z';
  CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);

  avsd::testing::TempDir dir("ckpt");
  write_checkpoint(blob, dir / "x.ckpt");
  CHECK(read_checkpoint(dir / "x.ckpt").tensors == blob.tensors);
}
