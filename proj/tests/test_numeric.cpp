#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"

#include "amrnn/rng.hpp"
#include "amrnn/tensor.hpp"

using namespace amrnn;

namespace {

Tensor random_vec(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros({n});
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("numeric-core");

TEST_CASE("affine basics") {
  Tape tape;
  const Tensor identity = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor x = Tensor::vec({3, 4});

  CHECK(tape.affine(identity, x, Tensor::vec({0, 0})).values == std::vector<double>{3, 4});
  CHECK(tape.affine(Tensor::matrix(2, 2, {0, 0, 0, 0}), x, Tensor::vec({1, 2})).values ==
        std::vector<double>{1, 2});
  CHECK(tape.affine(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::vec({1, 1}),
                    Tensor::vec({0, 0})).values == std::vector<double>{3, 7});
}

TEST_CASE("affine shape mismatch names both shapes") {
  Tape tape;
  try {
    tape.affine(Tensor::matrix(2, 3, std::vector<double>(6, 0.0)), Tensor::vec({1, 1}),
                Tensor::vec({0, 0}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
  }
}

TEST_CASE("concat definition and empty left operand") {
  Tape tape;
  CHECK(tape.concat(Tensor::vec({1, 2}), Tensor::vec({3})).values ==
        std::vector<double>{1, 2, 3});
  CHECK(tape.concat(Tensor::vec({}), Tensor::vec({5})).values == std::vector<double>{5});
  CHECK_THROWS_AS(tape.concat(Tensor::matrix(1, 1, {1}), Tensor::vec({1})), ShapeError);
}

TEST_CASE("concat gradient splits back to inputs") {
  Tape tape;
  const Tensor a = tape.leaf(Tensor::vec({1, 2, 3}));
  const Tensor b = tape.leaf(Tensor::vec({4, 5}));
  const Tensor s = tape.sum(tape.concat(a, b));
  tape.backward(s);
  CHECK(tape.grad(a).values == std::vector<double>{1, 1, 1});
  CHECK(tape.grad(b).values == std::vector<double>{1, 1});
  CHECK(tape.grad(a).shape == a.shape);
  CHECK(tape.grad(b).shape == b.shape);
}

TEST_CASE("activations") {
  Tape tape;
  CHECK(tape.sigmoid(Tensor::scalar(0.0)).scalar_value() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tape.tanh(Tensor::scalar(0.0)).scalar_value() == 0.0);
  CHECK(tape.sigmoid(Tensor::scalar(std::log(3.0))).scalar_value() ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("cosine similarity values") {
  Tape tape;
  CHECK(tape.cosine_similarity(Tensor::vec({2, 0}), Tensor::vec({2, 0})).scalar_value() ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tape.cosine_similarity(Tensor::vec({1, 0}), Tensor::vec({0, 1})).scalar_value() == 0.0);
  CHECK(tape.cosine_similarity(Tensor::vec({1, 0}), Tensor::vec({1, 1})).scalar_value() ==
        doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("cosine degenerate input gives zero value and zero gradient") {
  Tape tape;
  const Tensor a = tape.leaf(Tensor::vec({0, 0}));
  const Tensor b = tape.leaf(Tensor::vec({1, 2}));
  const Tensor c = tape.cosine_similarity(a, b);
  CHECK(c.scalar_value() == 0.0);
  tape.backward(c);
  CHECK(tape.grad(a).values == std::vector<double>{0, 0});
  CHECK(tape.grad(b).values == std::vector<double>{0, 0});
}

TEST_CASE("cosine properties: range, symmetry, scale invariance") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.range_int(1, 8);
    const Tensor a = random_vec(n, rng, -2.0, 2.0);
    const Tensor b = random_vec(n, rng, -2.0, 2.0);
    const double c = cosine_similarity_value(a.values, b.values);
    CHECK(c >= -1.0 - 1e-12);
    CHECK(c <= 1.0 + 1e-12);
    CHECK(cosine_similarity_value(b.values, a.values) == c);

    for (double k : {0.1, 10.0}) {
      std::vector<double> ka = a.values;
      for (double& v : ka) v *= k;
      CHECK(cosine_similarity_value(ka, b.values) == doctest::Approx(c).epsilon(1e-9));
    }
  }
}

TEST_CASE("normalize_attention examples") {
  CHECK(normalize_attention_values({0.3}, {1}) == std::vector<double>{1.0});

  const auto equal = normalize_attention_values({0.7, 0.7, 0.7, 0.7}, {1, 1, 1, 1});
  for (double w : equal) CHECK(w == doctest::Approx(0.25).epsilon(1e-15));

  const auto direct = normalize_attention_values({0.0, std::log(3.0)}, {1, 1});
  CHECK(direct[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(direct[1] == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(normalize_attention_values({1.0, 2.0}, {0, 0}), PreconditionError);
}

TEST_CASE("normalize_attention invariants") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.range_int(1, 12);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<char> active(static_cast<std::size_t>(n), 0);
    for (double& s : scores) s = rng.uniform(-3.0, 3.0);
    const int n_active = rng.range_int(1, n);
    for (int i = 0; i < n_active; ++i) active[static_cast<std::size_t>(i)] = 1;
    rng.shuffle(active);

    const auto w = normalize_attention_values(scores, active);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(w[static_cast<std::size_t>(i)] >= 0.0);
      if (!active[static_cast<std::size_t>(i)]) CHECK(w[static_cast<std::size_t>(i)] == 0.0);
      total += w[static_cast<std::size_t>(i)];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // shift invariance over the active scores
    const double shift = rng.uniform(-5.0, 5.0);
    std::vector<double> shifted = scores;
    for (double& s : shifted) s += shift;
    const auto w2 = normalize_attention_values(shifted, active);
    for (int i = 0; i < n; ++i) {
      CHECK(w2[static_cast<std::size_t>(i)] ==
            doctest::Approx(w[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("backward examples") {
  {
    // f(x) = x^2 at x = 3
    Tape tape;
    const Tensor x = tape.leaf(Tensor::scalar(3.0));
    const Tensor y = tape.mul(x, x);
    tape.backward(y);
    CHECK(tape.grad(x).scalar_value() == doctest::Approx(6.0).epsilon(1e-15));
  }
  {
    // cosine is maximal at parallel vectors: gradient vanishes at a = b
    Tape tape;
    const Tensor a = tape.leaf(Tensor::vec({0.4, -1.2, 2.0}));
    const Tensor b = tape.leaf(Tensor::vec({0.4, -1.2, 2.0}));
    const Tensor c = tape.cosine_similarity(a, b);
    tape.backward(c);
    for (double g : tape.grad(a).values) CHECK(std::abs(g) < 1e-12);

    const double fd = finite_diff_check(
        [&](Tape& t, const Tensor& x) {
          return t.cosine_similarity(x, t.leaf(Tensor::vec({0.4, -1.2, 2.0})));
        },
        Tensor::vec({0.4, -1.2, 2.0}), 1e-5);
    CHECK(fd < 1e-4);
  }
  {
    // sigmoid'(0) = 0.25
    Tape tape;
    const Tensor x = tape.leaf(Tensor::scalar(0.0));
    const Tensor y = tape.sigmoid(x);
    tape.backward(y);
    CHECK(tape.grad(x).scalar_value() == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("backward rejects non-scalar seed and off-tape tensors") {
  Tape tape;
  const Tensor v = tape.leaf(Tensor::vec({1, 2}));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
  CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), PreconditionError);
}

TEST_CASE("finite_diff_check on sum is tiny") {
  Rng rng(3);
  const double err = finite_diff_check(
      [](Tape& t, const Tensor& x) { return t.sum(x); }, random_vec(6, rng), 1e-5);
  CHECK(err < 1e-10);
}

TEST_CASE("finite_diff_check across every differentiable op") {
  Rng rng(2024);
  // 20 random points per op
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.range_int(2, 6);
    const Tensor x = random_vec(n, rng);
    const Tensor other = random_vec(n, rng);
    const Tensor w_mat = random_vec(3 * n, rng);
    const Tensor bias = random_vec(3, rng);
    const int m = 3;

    const std::vector<std::function<Tensor(Tape&, const Tensor&)>> cases = {
        [&](Tape& t, const Tensor& v) {
          return t.sum(t.affine(t.leaf(Tensor::matrix(m, n, w_mat.values)), v, t.leaf(bias)));
        },
        [&](Tape& t, const Tensor& v) {
          return t.sum(t.matvec(t.leaf(Tensor::matrix(m, n, w_mat.values)), v));
        },
        [&](Tape& t, const Tensor& v) { return t.sum(t.add(v, t.leaf(other))); },
        [&](Tape& t, const Tensor& v) { return t.sum(t.sub(t.leaf(other), v)); },
        [&](Tape& t, const Tensor& v) { return t.sum(t.mul(v, v)); },
        [&](Tape& t, const Tensor& v) { return t.sum(t.sigmoid(v)); },
        [&](Tape& t, const Tensor& v) { return t.sum(t.tanh(v)); },
        [&](Tape& t, const Tensor& v) { return t.sum(t.concat(v, t.leaf(other))); },
        [&](Tape& t, const Tensor& v) { return t.cosine_similarity(v, t.leaf(other)); },
        [&](Tape& t, const Tensor& v) { return t.dot(v, t.leaf(other)); },
        [&](Tape& t, const Tensor& v) {
          std::vector<Tensor> scalars;
          for (int i = 0; i < v.numel(); ++i) scalars.push_back(t.pick(v, i));
          return t.sum(t.mul(t.stack(scalars), t.leaf(other)));
        },
        [&](Tape& t, const Tensor& v) {
          const std::vector<char> active(static_cast<std::size_t>(v.numel()), 1);
          return t.pick(t.normalize_attention(v, active), 0);
        },
        [&](Tape& t, const Tensor& v) {
          return t.sum(t.weighted_sum(
              v, std::vector<Tensor>(static_cast<std::size_t>(v.numel()), t.leaf(other))));
        },
        [&](Tape& t, const Tensor& v) { return t.sum(t.log(t.sigmoid(v))); },
    };
    for (const auto& f : cases) CHECK(finite_diff_check(f, x, 1e-5) < 1e-4);

    // embed / embed_bag differentiate through the table itself
    const Tensor table = random_vec(2 * n, rng);
    const double emb_err = finite_diff_check(
        [&](Tape& t, const Tensor& v) {
          return t.sum(t.add(t.embed(v, 0), t.embed_bag(v, {n - 1, n - 1, 0})));
        },
        Tensor::matrix(2, n, table.values), 1e-5);
    CHECK(emb_err < 1e-4);
  }
}

TEST_CASE("weighted_sum matches manual expansion") {
  Tape tape;
  const Tensor w = tape.leaf(Tensor::vec({0.25, 0.75}));
  const std::vector<Tensor> vs = {tape.leaf(Tensor::vec({1, 2})), tape.leaf(Tensor::vec({3, 4}))};
  const Tensor out = tape.weighted_sum(w, vs);
  CHECK(out(0) == doctest::Approx(0.25 * 1 + 0.75 * 3).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(0.25 * 2 + 0.75 * 4).epsilon(1e-15));
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0}), ShapeError);
  CHECK(Tensor::zeros({3, 2}).numel() == 6);
  CHECK(Tensor::scalar(1.5).scalar_value() == 1.5);
  CHECK_THROWS_AS(Tensor::vec({1, 2}).scalar_value(), ShapeError);
  CHECK(Tensor::vec({1, 2}).all_finite());
  Tensor bad = Tensor::vec({1, 2});
  bad(0) = std::nan("");
  CHECK(!bad.all_finite());
}

TEST_SUITE_END();
