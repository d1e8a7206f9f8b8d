#include <cmath>

#include "doctest.h"

#include "amrnn/attention.hpp"
#include "amrnn/rng.hpp"

using namespace amrnn;

namespace {

// Story encoding built directly from values: one vector per position plus an
// eos mask, bypassing the GRU encoder.
StoryEncoding make_encoding(Tape& tape, const std::vector<std::vector<double>>& vectors,
                            std::vector<char> eos) {
  StoryEncoding enc;
  for (const auto& v : vectors) enc.word_vectors.push_back(tape.leaf(Tensor::vec(v)));
  enc.eos_mask = std::move(eos);
  return enc;
}

StoryEncoding random_encoding(Tape& tape, int n_positions, int dim, Rng& rng,
                              bool all_single_word = false) {
  std::vector<std::vector<double>> vectors;
  for (int t = 0; t < n_positions; ++t) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.uniform(-1.5, 1.5);
    vectors.push_back(std::move(v));
  }
  std::vector<char> eos(static_cast<std::size_t>(n_positions), 0);
  if (all_single_word) {
    std::fill(eos.begin(), eos.end(), 1);
  } else {
    // random utterance boundaries; the last position always closes one
    for (char& e : eos) e = rng.bernoulli(0.3) ? 1 : 0;
    eos.back() = 1;
  }
  return make_encoding(tape, vectors, std::move(eos));
}

}  // namespace

TEST_SUITE_BEGIN("attention-hop");

TEST_CASE("attention_values") {
  Tape tape;

  SUBCASE("cosine extremes") {
    const StoryEncoding se =
        make_encoding(tape, {{0, 1}, {0, -1}, {2, 0}, {-1, 1}}, {0, 0, 0, 1});
    const Tensor alphas = attention_values(tape, se, tape.leaf(Tensor::vec({5, 0})));
    CHECK(alphas(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(alphas(0) == 0.0);
    CHECK(alphas(1) == 0.0);
  }

  SUBCASE("zero question vector hits the degenerate-cosine rule") {
    const StoryEncoding se = make_encoding(tape, {{1, 2}, {3, 4}}, {0, 1});
    const Tensor alphas = attention_values(tape, se, tape.leaf(Tensor::vec({0, 0})));
    CHECK(alphas.values == std::vector<double>{0, 0});
  }

  SUBCASE("hand cosines") {
    const StoryEncoding se = make_encoding(tape, {{1, 0}, {1, 1}}, {0, 1});
    const Tensor alphas = attention_values(tape, se, tape.leaf(Tensor::vec({1, 0})));
    CHECK(alphas(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(alphas(1) == doctest::Approx(0.70710678).epsilon(1e-8));
  }

  SUBCASE("dimension mismatch raises") {
    const StoryEncoding se = make_encoding(tape, {{1, 0}}, {1});
    CHECK_THROWS_AS(attention_values(tape, se, tape.leaf(Tensor::vec({1, 0, 0}))), ShapeError);
  }
}

TEST_CASE("story_vector") {
  Tape tape;

  SUBCASE("single-word story forces weight 1 under both levels") {
    const StoryEncoding se = make_encoding(tape, {{0.3, -0.8}}, {1});
    const Tensor alphas = tape.leaf(Tensor::vec({0.123}));
    for (AttentionLevel level : {AttentionLevel::word, AttentionLevel::sentence}) {
      const StoryVector sv = story_vector(tape, se, alphas, level);
      CHECK(sv.weights.values == std::vector<double>{1.0});
      CHECK(sv.vs.values == std::vector<double>{0.3, -0.8});
    }
  }

  SUBCASE("two 4-word sentences use only positions 4 and 8 at sentence level") {
    std::vector<std::vector<double>> vectors;
    for (int t = 0; t < 8; ++t) vectors.push_back({static_cast<double>(t + 1), 1.0});
    const StoryEncoding se = make_encoding(tape, vectors, {0, 0, 0, 1, 0, 0, 0, 1});
    const Tensor alphas = tape.leaf(Tensor::vec({0.9, 0.8, 0.7, 0.2, 0.5, 0.4, 0.3, 0.6}));
    const StoryVector sv = story_vector(tape, se, alphas, AttentionLevel::sentence);

    for (int t : {0, 1, 2, 4, 5, 6}) CHECK(sv.weights(t) == 0.0);
    const double w4 = std::exp(0.2) / (std::exp(0.2) + std::exp(0.6));
    const double w8 = std::exp(0.6) / (std::exp(0.2) + std::exp(0.6));
    CHECK(sv.weights(3) == doctest::Approx(w4).epsilon(1e-12));
    CHECK(sv.weights(7) == doctest::Approx(w8).epsilon(1e-12));
    CHECK(sv.vs(0) == doctest::Approx(w4 * 4.0 + w8 * 8.0).epsilon(1e-12));
    CHECK(sv.vs(1) == doctest::Approx(w4 + w8).epsilon(1e-12));
  }

  SUBCASE("equal scores at word level average the positions") {
    const StoryEncoding se =
        make_encoding(tape, {{4, 0}, {0, 4}, {2, 2}, {-2, 2}}, {0, 0, 0, 1});
    const Tensor alphas = tape.leaf(Tensor::vec({0.5, 0.5, 0.5, 0.5}));
    const StoryVector sv = story_vector(tape, se, alphas, AttentionLevel::word);
    CHECK(sv.vs(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sv.vs(1) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("hop") {
  Tape tape;

  SUBCASE("zero story encodings leave the question vector unchanged") {
    const StoryEncoding se = make_encoding(tape, {{0, 0}, {0, 0}, {0, 0}}, {0, 1, 1});
    const Tensor v_q = tape.leaf(Tensor::vec({0.4, -1.1}));
    const HopResult h = hop(tape, v_q, se, AttentionLevel::word);
    CHECK(h.v_q_next.values == v_q.values);
  }

  SUBCASE("one-word story adds S_1") {
    const StoryEncoding se = make_encoding(tape, {{2, 3}}, {1});
    const Tensor v_q = tape.leaf(Tensor::vec({1, 1}));
    const HopResult h = hop(tape, v_q, se, AttentionLevel::sentence);
    CHECK(h.v_q_next.values == std::vector<double>{3, 4});
  }

  SUBCASE("two positions match the softmax-weighted sum computed by hand") {
    const std::vector<double> s1 = {1, 0};
    const std::vector<double> s2 = {3, 4};
    const std::vector<double> vq = {1, 1};
    const StoryEncoding se = make_encoding(tape, {s1, s2}, {0, 1});
    const HopResult h = hop(tape, tape.leaf(Tensor::vec(vq)), se, AttentionLevel::word);

    const double a1 = (s1[0] * vq[0] + s1[1] * vq[1]) /
                      (std::hypot(s1[0], s1[1]) * std::hypot(vq[0], vq[1]));
    const double a2 = (s2[0] * vq[0] + s2[1] * vq[1]) /
                      (std::hypot(s2[0], s2[1]) * std::hypot(vq[0], vq[1]));
    const double w1 = std::exp(a1) / (std::exp(a1) + std::exp(a2));
    const double w2 = std::exp(a2) / (std::exp(a1) + std::exp(a2));

    CHECK(h.trace.raw[0] == doctest::Approx(a1).epsilon(1e-12));
    CHECK(h.trace.raw[1] == doctest::Approx(a2).epsilon(1e-12));
    CHECK(h.v_q_next(0) == doctest::Approx(vq[0] + w1 * s1[0] + w2 * s2[0]).epsilon(1e-12));
    CHECK(h.v_q_next(1) == doctest::Approx(vq[1] + w1 * s1[1] + w2 * s2[1]).epsilon(1e-12));
  }
}

TEST_CASE("run_hops") {
  Tape tape;
  Rng rng(8);

  SUBCASE("n=1 equals a single hop") {
    const StoryEncoding se = random_encoding(tape, 5, 3, rng);
    const Tensor v_q = tape.leaf(Tensor::vec({0.2, -0.4, 0.9}));
    const HopsResult r = run_hops(tape, v_q, se, {1, AttentionLevel::word});
    const HopResult single = hop(tape, v_q, se, AttentionLevel::word);
    CHECK(r.v_q_final.values == single.v_q_next.values);
    CHECK(r.trace.hops.size() == 1);
  }

  SUBCASE("zero story, n=3, returns the input") {
    const StoryEncoding se = make_encoding(tape, {{0, 0}, {0, 0}}, {1, 1});
    const Tensor v_q = tape.leaf(Tensor::vec({1.5, -2.5}));
    const HopsResult r = run_hops(tape, v_q, se, {3, AttentionLevel::word});
    CHECK(r.v_q_final.values == v_q.values);
    CHECK(r.trace.hops.size() == 3);
  }

  SUBCASE("n hops plus one more equals n+1 hops, bit-exact") {
    for (int n = 1; n <= 3; ++n) {
      const StoryEncoding se = random_encoding(tape, 6, 4, rng);
      const Tensor v_q = tape.leaf(Tensor::vec({0.1, 0.2, 0.3, 0.4}));
      for (AttentionLevel level : {AttentionLevel::word, AttentionLevel::sentence}) {
        const HopsResult shorter = run_hops(tape, v_q, se, {n, level});
        const HopResult extra = hop(tape, shorter.v_q_final, se, level);
        const HopsResult longer = run_hops(tape, v_q, se, {n + 1, level});
        CHECK(extra.v_q_next.values == longer.v_q_final.values);
      }
    }
  }

  SUBCASE("manual two-step composition") {
    const StoryEncoding se = random_encoding(tape, 4, 2, rng);
    const Tensor v_q = tape.leaf(Tensor::vec({0.6, -0.3}));
    const HopsResult r = run_hops(tape, v_q, se, {2, AttentionLevel::word});
    const HopResult h1 = hop(tape, v_q, se, AttentionLevel::word);
    const HopResult h2 = hop(tape, h1.v_q_next, se, AttentionLevel::word);
    CHECK(r.v_q_final.values == h2.v_q_next.values);
  }

  SUBCASE("invalid hop count") {
    const StoryEncoding se = make_encoding(tape, {{1, 0}}, {1});
    CHECK_THROWS_AS(run_hops(tape, tape.leaf(Tensor::vec({1, 0})), se, {0, AttentionLevel::word}),
                    ConfigError);
  }
}

TEST_CASE("per-hop weights sum to one and respect the eos set") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    Tape tape;
    const int n = rng.range_int(1, 20);
    const bool single_words = trial % 5 == 0;
    const StoryEncoding se = random_encoding(tape, n, 4, rng, single_words);
    Tensor v_q = Tensor::zeros({4});
    for (double& v : v_q.values) v = rng.uniform(-1, 1);

    const HopConfig cfg{rng.range_int(1, 3),
                        rng.bernoulli(0.5) ? AttentionLevel::word : AttentionLevel::sentence};
    const HopsResult r = run_hops(tape, tape.leaf(v_q), se, cfg);
    for (const HopTrace& hop_trace : r.trace.hops) {
      double total = 0.0;
      for (std::size_t t = 0; t < hop_trace.weights.size(); ++t) {
        if (cfg.level == AttentionLevel::sentence && !se.eos_mask[t]) {
          CHECK(hop_trace.weights[t] == 0.0);
        }
        total += hop_trace.weights[t];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("all-one-word utterances make sentence level equal word level") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const int n = rng.range_int(1, 10);
    const StoryEncoding se = random_encoding(tape, n, 3, rng, /*all_single_word=*/true);
    Tensor v_q = Tensor::zeros({3});
    for (double& v : v_q.values) v = rng.uniform(-1, 1);
    const Tensor leaf_q = tape.leaf(v_q);

    const Tensor alphas = attention_values(tape, se, leaf_q);
    const StoryVector word = story_vector(tape, se, alphas, AttentionLevel::word);
    const StoryVector sentence = story_vector(tape, se, alphas, AttentionLevel::sentence);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(word.vs(i) - sentence.vs(i)) < 1e-12);
    }
  }
}

TEST_CASE("answer_select") {
  Tape tape;

  SUBCASE("cosine extremes pick the parallel choice") {
    const Tensor v_q = tape.leaf(Tensor::vec({0, 3}));
    const std::array<Tensor, 4> choices = {
        tape.leaf(Tensor::vec({1, 0})), tape.leaf(Tensor::vec({-1, 0})),
        tape.leaf(Tensor::vec({0, 7})), tape.leaf(Tensor::vec({2, 0}))};
    const AnswerSelection sel = answer_select(tape, v_q, choices);
    CHECK(sel.chosen == 2);
    CHECK(sel.scores[2].scalar_value() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sel.scores[0].scalar_value() == 0.0);
  }

  SUBCASE("all identical choices tie-break to index 0") {
    const Tensor v_q = tape.leaf(Tensor::vec({1, 2}));
    const Tensor same = tape.leaf(Tensor::vec({2, 1}));
    const AnswerSelection sel = answer_select(tape, v_q, {same, same, same, same});
    CHECK(sel.chosen == 0);
  }

  SUBCASE("hand-built score ladder") {
    const Tensor v_q = tape.leaf(Tensor::vec({1, 0}));
    auto unit_at = [&](double c) {
      return tape.leaf(Tensor::vec({c, std::sqrt(1.0 - c * c)}));
    };
    const AnswerSelection sel =
        answer_select(tape, v_q, {unit_at(0.1), unit_at(0.7071), unit_at(0.5), unit_at(-0.2)});
    CHECK(sel.chosen == 1);
    CHECK(sel.scores[1].scalar_value() == doctest::Approx(0.7071).epsilon(1e-9));
    CHECK(sel.scores[3].scalar_value() == doctest::Approx(-0.2).epsilon(1e-9));
  }

  SUBCASE("chosen index is invariant under positive rescaling of any choice") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      std::array<Tensor, 4> choices;
      Tensor v_q = Tensor::zeros({3});
      for (double& v : v_q.values) v = rng.uniform(-1, 1);
      for (auto& c : choices) {
        Tensor t = Tensor::zeros({3});
        for (double& v : t.values) v = rng.uniform(-1, 1);
        c = tape.leaf(t);
      }
      const int base = answer_select(tape, tape.leaf(v_q), choices).chosen;
      for (int which = 0; which < 4; ++which) {
        for (double k : {0.1, 10.0}) {
          std::array<Tensor, 4> scaled = choices;
          Tensor t = tape.value(choices[static_cast<std::size_t>(which)].node);
          for (double& v : t.values) v *= k;
          scaled[static_cast<std::size_t>(which)] = tape.leaf(t);
          CHECK(answer_select(tape, tape.leaf(v_q), scaled).chosen == base);
        }
      }
    }
  }
}

TEST_CASE("end-to-end gradient through hops and answer selection") {
  Rng rng(55);
  // 6-word story, two utterances
  std::vector<std::vector<double>> vectors;
  for (int t = 0; t < 6; ++t) {
    std::vector<double> v(4);
    for (double& x : v) x = rng.uniform(-1, 1);
    vectors.push_back(std::move(v));
  }
  const std::vector<char> eos = {0, 0, 1, 0, 0, 1};
  std::array<std::vector<double>, 4> choice_values;
  for (auto& c : choice_values) {
    c.resize(4);
    for (double& x : c) x = rng.uniform(-1, 1);
  }
  Tensor v_q0 = Tensor::zeros({4});
  for (double& v : v_q0.values) v = rng.uniform(-1, 1);

  for (AttentionLevel level : {AttentionLevel::word, AttentionLevel::sentence}) {
    for (int correct = 0; correct < 4; ++correct) {
      // loss = 1 - score_correct, differentiated w.r.t. the initial question vector
      const double err_q = finite_diff_check(
          [&](Tape& t, const Tensor& v) {
            StoryEncoding se = make_encoding(t, vectors, eos);
            const HopsResult r = run_hops(t, v, se, {2, level});
            std::array<Tensor, 4> choices;
            for (int i = 0; i < 4; ++i) {
              choices[static_cast<std::size_t>(i)] =
                  t.leaf(Tensor::vec(choice_values[static_cast<std::size_t>(i)]));
            }
            const AnswerSelection sel = answer_select(t, r.v_q_final, choices);
            return t.sub(t.leaf(Tensor::scalar(1.0)),
                         sel.scores[static_cast<std::size_t>(correct)]);
          },
          v_q0, 1e-5);
      CHECK(err_q < 1e-4);

      // ... and w.r.t. one story position vector
      const double err_s = finite_diff_check(
          [&](Tape& t, const Tensor& v) {
            std::vector<std::vector<double>> rest = vectors;
            StoryEncoding se;
            se.word_vectors.push_back(v);
            for (std::size_t i = 1; i < rest.size(); ++i) {
              se.word_vectors.push_back(t.leaf(Tensor::vec(rest[i])));
            }
            se.eos_mask = eos;
            const HopsResult r = run_hops(t, t.leaf(v_q0), se, {2, level});
            std::array<Tensor, 4> choices;
            for (int i = 0; i < 4; ++i) {
              choices[static_cast<std::size_t>(i)] =
                  t.leaf(Tensor::vec(choice_values[static_cast<std::size_t>(i)]));
            }
            const AnswerSelection sel = answer_select(t, r.v_q_final, choices);
            return t.sub(t.leaf(Tensor::scalar(1.0)),
                         sel.scores[static_cast<std::size_t>(correct)]);
          },
          Tensor::vec(vectors[0]), 1e-5);
      CHECK(err_s < 1e-4);
    }
  }
}

TEST_SUITE_END();
