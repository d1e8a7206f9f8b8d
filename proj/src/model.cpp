#include "amrnn/model.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace amrnn {

namespace {

Tensor dropout_mask(int n, double rate, Rng& rng) {
  Tensor mask = Tensor::zeros({n});
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int i = 0; i < n; ++i) mask(i) = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

AmrnnModel AmrnnModel::init(const std::vector<std::string>& words, int hidden, int input_dim,
                            HopConfig hops, std::uint64_t seed) {
  AmrnnModel model;
  model.encoder = BiGruEncoder::init(words, hidden, input_dim, seed);
  model.hops = hops;
  return model;
}

std::vector<std::pair<std::string, Tensor*>> AmrnnModel::parameters() {
  return encoder.parameters();
}

std::vector<std::pair<std::string, const Tensor*>> AmrnnModel::parameters() const {
  return encoder.parameters();
}

AmrnnModel::Forward AmrnnModel::forward(Tape& tape, const Example& example) const {
  return forward(tape, example, DropoutSpec{});
}

AmrnnModel::Forward AmrnnModel::forward(Tape& tape, const Example& example,
                                        const DropoutSpec& dropout) const {
  const BoundEncoder enc = bind(tape, encoder);

  Tensor v_q = question_vector(tape, enc, example.question);
  StoryEncoding story_enc = story_word_vectors(tape, enc, example.story);
  std::array<Tensor, 4> choice_vectors;
  for (int i = 0; i < 4; ++i) {
    choice_vectors[static_cast<std::size_t>(i)] =
        question_vector(tape, enc, example.choices[static_cast<std::size_t>(i)]);
  }

  if (dropout.rate > 0.0 && dropout.rng != nullptr) {
    v_q = tape.mul(v_q, tape.leaf(dropout_mask(v_q.shape[0], dropout.rate, *dropout.rng)));
    for (Tensor& s_t : story_enc.word_vectors) {
      s_t = tape.mul(s_t, tape.leaf(dropout_mask(s_t.shape[0], dropout.rate, *dropout.rng)));
    }
  }

  const HopsResult hops_result = run_hops(tape, v_q, story_enc, hops);
  const AnswerSelection selection = answer_select(tape, hops_result.v_q_final, choice_vectors);

  Forward out;
  out.scores = selection.scores;
  out.chosen = selection.chosen;
  out.trace = hops_result.trace;
  return out;
}

void AmrnnModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);

  out << "amrnn-checkpoint 1\n";
  out << "hidden_size " << encoder.hidden_size << '\n';
  out << "input_dim " << encoder.input_dim << '\n';
  out << "n_hops " << hops.n_hops << '\n';
  out << "level " << to_string(hops.level) << '\n';
  out << "vocab " << encoder.vocab.size() << '\n';
  for (const std::string& w : encoder.vocab) out << w << '\n';
  for (const auto& [name, tensor] : parameters()) {
    out << "tensor " << name << ' ' << tensor->rank();
    for (int d : tensor->shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < tensor->values.size(); ++i) {
      if (i > 0) out << ' ';
      out << hexfloat(tensor->values[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing checkpoint " + path);
}

AmrnnModel AmrnnModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);

  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError("checkpoint " + path + ": " + what);
  };

  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "amrnn-checkpoint" || version != 1) throw fail("unrecognized header");

  int hidden = 0, input_dim = 0, n_hops = 0;
  std::string key, level_name;
  std::size_t vocab_size = 0;
  in >> key >> hidden;
  if (key != "hidden_size") throw fail("expected hidden_size");
  in >> key >> input_dim;
  if (key != "input_dim") throw fail("expected input_dim");
  in >> key >> n_hops;
  if (key != "n_hops") throw fail("expected n_hops");
  in >> key >> level_name;
  if (key != "level") throw fail("expected level");
  in >> key >> vocab_size;
  if (key != "vocab") throw fail("expected vocab");

  AmrnnModel model;
  model.hops.n_hops = n_hops;
  model.hops.level = attention_level_from_string(level_name);
  model.encoder.hidden_size = hidden;
  model.encoder.input_dim = input_dim;
  model.encoder.vocab.resize(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!(in >> model.encoder.vocab[i])) throw fail("truncated vocabulary");
    model.encoder.vocab_index[model.encoder.vocab[i]] = static_cast<int>(i);
  }

  // Shapes come from the file; names must match the parameter registry.
  model.encoder.embedding = Tensor::zeros({input_dim, static_cast<int>(vocab_size)});
  model.encoder.fwd = GruParams::zeros(hidden, input_dim);
  model.encoder.bwd = GruParams::zeros(hidden, input_dim);

  auto params = model.parameters();
  for (auto& [name, tensor] : params) {
    std::string tag, got_name;
    int rank = 0;
    if (!(in >> tag >> got_name >> rank) || tag != "tensor" || got_name != name) {
      throw fail("expected tensor " + name);
    }
    std::vector<int> shape(static_cast<std::size_t>(rank));
    for (int& d : shape) {
      if (!(in >> d)) throw fail("truncated shape for " + name);
    }
    if (shape != tensor->shape) {
      throw fail("tensor " + name + " has shape " + shape_str(shape) + ", expected " +
                 shape_str(tensor->shape));
    }
    for (double& v : tensor->values) {
      std::string tok;
      if (!(in >> tok)) throw fail("truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw fail("bad value '" + tok + "' in " + name);
    }
  }
  return model;
}

}  // namespace amrnn
