#include "amrnn/encoder.hpp"

#include <cmath>

namespace amrnn {

void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
}

GruParams GruParams::init(int hidden, int input, Rng& rng) {
  GruParams p = zeros(hidden, input);
  glorot_fill(p.W_z, input, hidden, rng);
  glorot_fill(p.U_z, hidden, hidden, rng);
  glorot_fill(p.W_r, input, hidden, rng);
  glorot_fill(p.U_r, hidden, hidden, rng);
  glorot_fill(p.W_h, input, hidden, rng);
  glorot_fill(p.U_h, hidden, hidden, rng);
  return p;
}

GruParams GruParams::zeros(int hidden, int input) {
  GruParams p;
  p.W_z = Tensor::zeros({hidden, input});
  p.U_z = Tensor::zeros({hidden, hidden});
  p.b_z = Tensor::zeros({hidden});
  p.W_r = Tensor::zeros({hidden, input});
  p.U_r = Tensor::zeros({hidden, hidden});
  p.b_r = Tensor::zeros({hidden});
  p.W_h = Tensor::zeros({hidden, input});
  p.U_h = Tensor::zeros({hidden, hidden});
  p.b_h = Tensor::zeros({hidden});
  return p;
}

std::vector<Tensor*> GruParams::parameters() {
  return {&W_z, &U_z, &b_z, &W_r, &U_r, &b_r, &W_h, &U_h, &b_h};
}

std::vector<const Tensor*> GruParams::parameters() const {
  return {&W_z, &U_z, &b_z, &W_r, &U_r, &b_r, &W_h, &U_h, &b_h};
}

GruParams bind(Tape& tape, const GruParams& params) {
  GruParams bound;
  bound.W_z = tape.leaf(params.W_z);
  bound.U_z = tape.leaf(params.U_z);
  bound.b_z = tape.leaf(params.b_z);
  bound.W_r = tape.leaf(params.W_r);
  bound.U_r = tape.leaf(params.U_r);
  bound.b_r = tape.leaf(params.b_r);
  bound.W_h = tape.leaf(params.W_h);
  bound.U_h = tape.leaf(params.U_h);
  bound.b_h = tape.leaf(params.b_h);
  return bound;
}

Tensor gru_step(Tape& tape, const GruParams& p, const Tensor& x, const Tensor& h_prev) {
  const Tensor z = tape.sigmoid(tape.add(tape.affine(p.W_z, x, p.b_z), tape.matvec(p.U_z, h_prev)));
  const Tensor r = tape.sigmoid(tape.add(tape.affine(p.W_r, x, p.b_r), tape.matvec(p.U_r, h_prev)));
  const Tensor h_tilde =
      tape.tanh(tape.add(tape.affine(p.W_h, x, p.b_h), tape.matvec(p.U_h, tape.mul(r, h_prev))));
  // (1-z) o h_prev + z o h_tilde, written as h_prev + z o (h_tilde - h_prev)
  return tape.add(h_prev, tape.mul(z, tape.sub(h_tilde, h_prev)));
}

BiGruEncoder BiGruEncoder::init(const std::vector<std::string>& words, int hidden, int input_dim,
                                std::uint64_t seed) {
  if (hidden < 1 || input_dim < 1) {
    throw ConfigError("encoder sizes must be positive");
  }
  BiGruEncoder enc;
  enc.hidden_size = hidden;
  enc.input_dim = input_dim;
  enc.vocab.reserve(words.size() + 1);
  enc.vocab.push_back("<unk>");
  for (const std::string& w : words) enc.vocab.push_back(w);
  for (std::size_t i = 0; i < enc.vocab.size(); ++i) {
    if (!enc.vocab_index.emplace(enc.vocab[i], static_cast<int>(i)).second) {
      throw ConfigError("duplicate vocabulary word '" + enc.vocab[i] + "'");
    }
  }

  Rng rng(seed);
  enc.embedding = Tensor::zeros({input_dim, static_cast<int>(enc.vocab.size())});
  glorot_fill(enc.embedding, static_cast<int>(enc.vocab.size()), input_dim, rng);
  enc.fwd = GruParams::init(hidden, input_dim, rng);
  enc.bwd = GruParams::init(hidden, input_dim, rng);
  return enc;
}

int BiGruEncoder::word_index(const std::string& word) const {
  auto it = vocab_index.find(word);
  return it == vocab_index.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, Tensor*>> BiGruEncoder::parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("embedding", &embedding);
  const char* names[] = {"W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h"};
  auto f = fwd.parameters();
  auto b = bwd.parameters();
  for (std::size_t i = 0; i < f.size(); ++i) out.emplace_back(std::string("fwd.") + names[i], f[i]);
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back(std::string("bwd.") + names[i], b[i]);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> BiGruEncoder::parameters() const {
  auto mutable_params = const_cast<BiGruEncoder*>(this)->parameters();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_params.size());
  for (auto& [name, t] : mutable_params) out.emplace_back(name, t);
  return out;
}

BoundEncoder bind(Tape& tape, const BiGruEncoder& encoder) {
  BoundEncoder bound;
  bound.src = &encoder;
  bound.embedding = tape.leaf(encoder.embedding);
  bound.fwd = bind(tape, encoder.fwd);
  bound.bwd = bind(tape, encoder.bwd);
  return bound;
}

BiStates encode_bidirectional(Tape& tape, const BoundEncoder& enc,
                              const std::vector<std::string>& words) {
  if (words.empty()) throw PreconditionError("encode_bidirectional: empty word sequence");
  const int n = static_cast<int>(words.size());
  const int h = enc.src->hidden_size;

  std::vector<Tensor> inputs;
  inputs.reserve(static_cast<std::size_t>(n));
  for (const std::string& w : words) {
    inputs.push_back(tape.embed(enc.embedding, enc.src->word_index(w)));
  }

  BiStates states;
  states.fwd.reserve(static_cast<std::size_t>(n));
  states.bwd.resize(static_cast<std::size_t>(n));

  Tensor hf = tape.leaf(Tensor::zeros({h}));
  for (int t = 0; t < n; ++t) {
    hf = gru_step(tape, enc.fwd, inputs[static_cast<std::size_t>(t)], hf);
    states.fwd.push_back(hf);
  }
  Tensor hb = tape.leaf(Tensor::zeros({h}));
  for (int t = n - 1; t >= 0; --t) {
    hb = gru_step(tape, enc.bwd, inputs[static_cast<std::size_t>(t)], hb);
    states.bwd[static_cast<std::size_t>(t)] = hb;
  }
  return states;
}

Tensor question_vector(Tape& tape, const BoundEncoder& enc, const std::vector<std::string>& words) {
  const BiStates states = encode_bidirectional(tape, enc, words);
  return tape.concat(states.fwd.back(), states.bwd.front());
}

StoryEncoding story_word_vectors(Tape& tape, const BoundEncoder& enc, const Story& story) {
  if (story.utterances.empty()) throw PreconditionError("story_word_vectors: empty story");
  const std::vector<std::string> words = story.flat_tokens();
  const BiStates states = encode_bidirectional(tape, enc, words);

  StoryEncoding out;
  out.word_vectors.reserve(words.size());
  for (std::size_t t = 0; t < words.size(); ++t) {
    out.word_vectors.push_back(tape.concat(states.fwd[t], states.bwd[t]));
  }
  out.eos_mask = story.eos_mask();
  return out;
}

}  // namespace amrnn
