#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "amrnn/data.hpp"
#include "amrnn/rng.hpp"
#include "amrnn/tensor.hpp"

namespace amrnn {

// One direction's GRU parameters. Gate equations (Cho-style, update convention
// h_t = (1-z) o h_prev + z o h_tilde):
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   h_tilde = tanh(W_h x + U_h (r o h) + b_h)
struct GruParams {
  Tensor W_z, U_z, b_z;
  Tensor W_r, U_r, b_r;
  Tensor W_h, U_h, b_h;

  static GruParams init(int hidden, int input, Rng& rng);
  static GruParams zeros(int hidden, int input);

  int hidden_size() const { return W_z.shape[0]; }
  int input_size() const { return W_z.shape[1]; }

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
};

// Glorot-uniform fill: uniform(-sqrt(6/(fan_in+fan_out)), +...).
void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng);

// Registers every parameter as a tape leaf so a forward pass can read them.
GruParams bind(Tape& tape, const GruParams& params);

Tensor gru_step(Tape& tape, const GruParams& params, const Tensor& x, const Tensor& h_prev);

// Word embedding plus one shared forward/backward GRU pair. Vocabulary slot 0
// is reserved for unknown words.
struct BiGruEncoder {
  int hidden_size = 0;
  int input_dim = 0;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> vocab_index;
  Tensor embedding;  // input_dim x vocab.size()
  GruParams fwd, bwd;

  // `words` must not contain duplicates; the unknown slot is prepended here.
  static BiGruEncoder init(const std::vector<std::string>& words, int hidden, int input_dim,
                           std::uint64_t seed);

  int word_index(const std::string& word) const;
  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;
};

// Tape-bound view of an encoder for one forward pass.
struct BoundEncoder {
  const BiGruEncoder* src = nullptr;
  Tensor embedding;
  GruParams fwd, bwd;
};

BoundEncoder bind(Tape& tape, const BiGruEncoder& encoder);

struct BiStates {
  std::vector<Tensor> fwd;  // y_f(t), left-to-right
  std::vector<Tensor> bwd;  // y_b(t), computed right-to-left, stored by position
};

BiStates encode_bidirectional(Tape& tape, const BoundEncoder& enc,
                              const std::vector<std::string>& words);

// V_Q = [y_f(T) || y_b(1)]; also used verbatim to encode each answer choice.
Tensor question_vector(Tape& tape, const BoundEncoder& enc, const std::vector<std::string>& words);

// Per-word story representations over the flattened story.
struct StoryEncoding {
  std::vector<Tensor> word_vectors;  // S_t = [y_f(t) || y_b(t)], each 2h
  std::vector<char> eos_mask;        // true at utterance-final positions
};

StoryEncoding story_word_vectors(Tape& tape, const BoundEncoder& enc, const Story& story);

}  // namespace amrnn
