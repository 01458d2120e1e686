// tests/numerics_test.cpp

// Copyright 2026  The dgu Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "grad_check.hpp"

using namespace dgu;
using dgu::testing::check_gradients;
using dgu::testing::random_int_matrix;
using dgu::testing::random_matrix;

namespace {

// Direct summation straight from the definition of a centered convolution.
Matrix conv_oracle(const Matrix& x, const Matrix& kernel, const Matrix& bias, int K) {
  const Index L = x.rows(), cin = x.cols(), cout = kernel.cols();
  const Index half = (K - 1) / 2;
  Matrix out(L, cout);
  for (Index l = 0; l < L; ++l)
    for (Index o = 0; o < cout; ++o) {
      double s = 0.0;
      for (Index k = 0; k < K; ++k)
        for (Index c = 0; c < cin; ++c) {
          const Index src = l + k - half;
          if (src < 0 || src >= L) continue;
          s += x(src, c) * kernel(k * cin + c, o);
        }
      out(l, o) = bias(0, o) + s;
    }
  return out;
}

}  // namespace

TEST_SUITE("conv1d") {
  TEST_CASE("width-1 identity kernel returns the input") {
    Rng rng(1);
    const Matrix x = random_matrix(6, 3, rng);
    const Matrix out = conv1d(x, Matrix(Matrix::Identity(3, 3)), Matrix(Matrix::Zero(1, 3)));
    CHECK(out == x);
  }

  TEST_CASE("zero input yields the bias on every row") {
    Matrix bias(1, 2);
    bias << 0.5, -1.25;
    Rng rng(2);
    const Matrix out = conv1d(Matrix(Matrix::Zero(4, 3)), random_matrix(9, 2, rng), bias);
    for (Index l = 0; l < 4; ++l) CHECK(out.row(l) == bias.row(0));
  }

  TEST_CASE("matches direct summation on a 5x2 input with a 3x2x2 kernel") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = random_int_matrix(5, 2, rng);
      const Matrix w = random_int_matrix(6, 2, rng);
      const Matrix b = random_int_matrix(1, 2, rng);
      CHECK(conv1d(x, w, b) == conv_oracle(x, w, b, 3));
    }
    const Matrix x = random_matrix(5, 2, rng), w = random_matrix(6, 2, rng), b = random_matrix(1, 2, rng);
    CHECK((conv1d(x, w, b) - conv_oracle(x, w, b, 3)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("linear in the input") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix x = random_int_matrix(7, 3, rng), z = random_int_matrix(7, 3, rng);
      const Matrix w = random_int_matrix(15, 4, rng);
      const Matrix zero = Matrix::Zero(1, 4);
      const double a = trial % 5 - 2, b = trial % 3 + 1;
      const Matrix lhs = conv1d(Matrix(a * x + b * z), w, zero);
      const Matrix rhs = a * conv1d(x, w, zero) + b * conv1d(z, w, zero);
      CHECK(lhs == rhs);
    }
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(conv1d(Matrix(Matrix::Zero(4, 3)), Matrix(Matrix::Zero(7, 2)), Matrix(Matrix::Zero(1, 2))),
                    DimensionError);
    CHECK_THROWS_AS(conv1d(Matrix(Matrix::Zero(4, 3)), Matrix(Matrix::Zero(6, 2)), Matrix(Matrix::Zero(1, 2))),
                    DimensionError);  // even width
    CHECK_THROWS_AS(conv1d(Matrix(Matrix::Zero(4, 3)), Matrix(Matrix::Zero(9, 2)), Matrix(Matrix::Zero(1, 3))),
                    DimensionError);
  }
}

TEST_SUITE("softmax_rows") {
  TEST_CASE("equal logits are uniform") {
    const Matrix p = softmax_rows(Matrix(Matrix::Constant(1, 4, 3.0)));
    for (Index c = 0; c < 4; ++c) CHECK(p(0, c) == doctest::Approx(0.25).epsilon(1e-15));
  }
  TEST_CASE("large logits do not overflow") {
    Matrix l(1, 2);
    l << 1000.0, 0.0;
    const Matrix p = softmax_rows(l);
    CHECK(p.allFinite());
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(0, 1) < 1e-300);
  }
  TEST_CASE("closed form for log 1, log 2, log 3") {
    Matrix l(1, 3);
    l << std::log(1.0), std::log(2.0), std::log(3.0);
    const Matrix p = softmax_rows(l);
    CHECK(std::abs(p(0, 0) - 1.0 / 6) < 1e-15);
    CHECK(std::abs(p(0, 1) - 2.0 / 6) < 1e-15);
    CHECK(std::abs(p(0, 2) - 3.0 / 6) < 1e-15);
  }
  TEST_CASE("rows sum to one for arbitrary finite logits") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::uniform_int_distribution<int> dim(1, 9);
      const Matrix l = random_matrix(dim(rng), dim(rng), rng, -300.0, 300.0);
      const Matrix p = softmax_rows(l);
      CHECK((p.array() >= 0.0).all());
      CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_SUITE("bce") {
  TEST_CASE("reference values") {
    CHECK(bce(0.5, 0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(bce(1.0 - 1e-7, 1) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::abs(bce(0.9, 0) - 2.302585) < 1e-6);
    CHECK(std::abs(bce(0.9, 0) + std::log(0.1)) < 1e-12);
  }
  TEST_CASE("saturated predictions stay finite") {
    CHECK(std::isfinite(bce(0.0, 1)));
    CHECK(std::isfinite(bce(1.0, 0)));
    CHECK(bce(0.0, 1) == doctest::Approx(-std::log(1e-7)));
  }
}

TEST_SUITE("tape") {
  TEST_CASE("sum of parameters has unit gradient") {
    ParamStore store;
    Rng rng(6);
    store.add("w", random_matrix(3, 4, rng));
    Tape tape;
    tape.backward(sum(tape.param(store, "w")), store);
    CHECK(store.at("w").grad == Matrix::Ones(3, 4));
  }

  TEST_CASE("unused parameter gets zero gradient") {
    ParamStore store;
    store.add("a", Matrix::Ones(2, 2));
    store.add("b", Matrix::Ones(2, 2));
    Tape tape;
    const Var a = tape.param(store, "a");
    tape.param(store, "b");
    tape.backward(sum(mul(a, a)), store);
    CHECK(store.at("b").grad == Matrix::Zero(2, 2));
    CHECK(store.at("a").grad == Matrix::Constant(2, 2, 2.0));
  }

  TEST_CASE("non-scalar loss is a contract error") {
    ParamStore store;
    store.add("a", Matrix::Ones(2, 2));
    Tape tape;
    CHECK_THROWS_AS(tape.backward(tape.param(store, "a"), store), ContractError);
  }

  TEST_CASE("small network matches finite differences") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const std::vector<Matrix> inputs{random_matrix(6, 3, rng), random_matrix(9, 4, rng),
                                       random_matrix(1, 4, rng), random_matrix(12, 2, rng)};
      auto net = [](Tape&, std::span<const Var> in) {
        const Var h = leaky_relu(conv1d(in[0], in[1], in[2]), 0.2);
        const Var z = conv1d(h, in[3], in[3].tape().constant(Matrix::Zero(1, 2)));
        return sum(mul(softmax_rows(z), log_softmax_rows(z)));
      };
      CHECK(check_gradients(net, inputs).max_rel_error < 1e-4);
    }
  }

  TEST_CASE("backward is deterministic") {
    Rng rng(8);
    ParamStore s1;
    s1.add("w", random_matrix(9, 3, rng));
    s1.add("b", random_matrix(1, 3, rng));
    ParamStore s2 = s1;
    const Matrix x = random_matrix(5, 3, rng);
    for (ParamStore* s : {&s1, &s2}) {
      Tape tape;
      const Var y = softmax_rows(conv1d(tape.constant(x), tape.param(*s, "w"), tape.param(*s, "b")));
      tape.backward(sum(mul(y, y)), *s);
    }
    CHECK(s1.at("w").grad == s2.at("w").grad);
    CHECK(s1.at("b").grad == s2.at("b").grad);
  }

  TEST_CASE("gradient of an input-gradient norm matches finite differences") {
    // f(W) = || d/dx sum(sigmoid(conv(x, W))) ||^2: exercises recorded backward rules.
    Rng rng(9);
    const Matrix x = random_matrix(5, 2, rng);
    const std::vector<Matrix> inputs{random_matrix(6, 3, rng), random_matrix(1, 3, rng)};
    auto f = [x](Tape& tape, std::span<const Var> in) {
      const Var xv = tape.leaf(x);
      const Var score = sum(sigmoid(leaky_relu(conv1d(xv, in[0], in[1]), 0.2)));
      const Var gx = tape.grad(score, std::span<const Var>(&xv, 1), true)[0];
      return sum(mul(gx, gx));
    };
    CHECK(check_gradients(f, inputs).max_rel_error < 1e-4);
  }

  TEST_CASE("grad without create_graph records no differentiable nodes") {
    Tape tape;
    const Var x = tape.leaf(Matrix::Constant(2, 2, 0.3));
    const Var y = sum(exp(x));
    const Var g = tape.grad(y, std::span<const Var>(&x, 1), false)[0];
    CHECK_FALSE(g.requires_grad());
    CHECK((g.value() - Matrix::Constant(2, 2, std::exp(0.3))).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradients leave values unchanged") {
    ParamStore s;
    s.add("w", Matrix::Constant(2, 3, 1.5));
    adam_step(s, {});
    CHECK(s.value("w") == Matrix::Constant(2, 3, 1.5));
    CHECK(s.step_count() == 1);
  }

  TEST_CASE("first step equals lr * g / (|g| + eps)") {
    ParamStore s;
    Matrix w(1, 3);
    w << 1.0, -2.0, 0.5;
    s.add("w", w);
    Matrix g(1, 3);
    g << 2.0, -0.25, 1e-3;
    s.at("w").grad = g;
    AdamOptions opt;
    opt.lr = 0.1;
    adam_step(s, opt);
    for (Index i = 0; i < 3; ++i) {
      const double expected = w(0, i) - 0.1 * g(0, i) / (std::abs(g(0, i)) + opt.eps);
      CHECK(std::abs(s.value("w")(0, i) - expected) < 1e-15);
    }
    CHECK(s.at("w").grad == Matrix::Zero(1, 3));
  }

  TEST_CASE("constant gradient approaches lr * sign(g) per step") {
    ParamStore s;
    s.add("w", Matrix::Zero(1, 2));
    AdamOptions opt;
    opt.lr = 0.01;
    double last_step = 0.0;
    for (int i = 0; i < 300; ++i) {
      const double before = s.value("w")(0, 0);
      s.at("w").grad << 3.0, -0.2;
      adam_step(s, opt);
      last_step = s.value("w")(0, 0) - before;
    }
    CHECK(last_step == doctest::Approx(-0.01).epsilon(1e-6));
  }
}

TEST_SUITE("weights file") {
  TEST_CASE("round trip at float32 precision and header checks") {
    const auto dir = std::filesystem::temp_directory_path() / "dgu_numerics_test";
    std::filesystem::create_directories(dir);
    Rng rng(10);
    ParamStore s;
    s.add("gen.conv.w", random_matrix(5, 4, rng));
    s.add("gen.conv.b", random_matrix(1, 4, rng));
    save_weights(dir / "w.dguw", s);
    const ParamStore back = load_weights(dir / "w.dguw");
    CHECK(back.size() == 2);
    CHECK((back.value("gen.conv.w") - s.value("gen.conv.w")).cwiseAbs().maxCoeff() < 1e-6);

    std::ifstream in(dir / "w.dguw", std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "DGUW");

    std::ofstream(dir / "bad.dguw", std::ios::binary) << "XXXX";
    CHECK_THROWS_AS(load_weights(dir / "bad.dguw"), FormatError);
  }
}
