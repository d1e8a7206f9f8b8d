#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amrnn/attention.hpp"
#include "amrnn/data.hpp"
#include "amrnn/encoder.hpp"

namespace amrnn {

// The full multi-hop attention model: one shared bidirectional GRU encoder for
// question, story and choices, plus the hop configuration.
struct AmrnnModel {
  BiGruEncoder encoder;
  HopConfig hops;

  static AmrnnModel init(const std::vector<std::string>& words, int hidden, int input_dim,
                         HopConfig hops, std::uint64_t seed);

  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::vector<std::pair<std::string, const Tensor*>> parameters() const;

  // Inverted dropout on V_Q and every S_t; active only when rate > 0 and an
  // rng is supplied (training). Mask draw order: V_Q first, then S_t by
  // position.
  struct DropoutSpec {
    double rate = 0.0;
    Rng* rng = nullptr;
  };

  struct Forward {
    std::array<Tensor, 4> scores;
    int chosen = 0;
    AttentionTrace trace;
  };

  Forward forward(Tape& tape, const Example& example, const DropoutSpec& dropout) const;
  Forward forward(Tape& tape, const Example& example) const;

  // Self-describing text checkpoint; doubles are written as hex floats so that
  // write/read round-trips bit-exactly.
  void save(const std::string& path) const;
  static AmrnnModel load(const std::string& path);
};

}  // namespace amrnn
