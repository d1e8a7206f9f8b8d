#pragma once

#include <array>
#include <string>
#include <vector>

#include "amrnn/encoder.hpp"
#include "amrnn/tensor.hpp"

namespace amrnn {

enum class AttentionLevel { word, sentence };

std::string to_string(AttentionLevel level);
AttentionLevel attention_level_from_string(const std::string& name);

struct HopConfig {
  int n_hops = 1;
  AttentionLevel level = AttentionLevel::word;
};

// Everything one hop computed, recorded as plain values for export.
struct HopTrace {
  std::vector<double> raw;              // alpha_t per flattened position
  std::vector<double> weights;          // normalized; 0 off the active set
  std::vector<double> story_vector;     // V_S
  std::vector<double> question_vector;  // V_Q after this hop
};

struct AttentionTrace {
  AttentionLevel level = AttentionLevel::word;
  std::vector<HopTrace> hops;
};

// alpha_t = cosine(S_t, v_q), stacked into one rank-1 tensor over positions.
Tensor attention_values(Tape& tape, const StoryEncoding& story_enc, const Tensor& v_q);

struct StoryVector {
  Tensor vs;       // weighted sum of the S_t
  Tensor weights;  // normalized attention, full story length
};

// Word level normalizes over every position; sentence level only over the
// utterance-final positions (weights elsewhere are exactly zero).
StoryVector story_vector(Tape& tape, const StoryEncoding& story_enc, const Tensor& alphas,
                         AttentionLevel level);

struct HopResult {
  Tensor v_q_next;  // v_q + V_S
  HopTrace trace;
};

HopResult hop(Tape& tape, const Tensor& v_q, const StoryEncoding& story_enc, AttentionLevel level);

struct HopsResult {
  Tensor v_q_final;
  AttentionTrace trace;
};

HopsResult run_hops(Tape& tape, const Tensor& v_q0, const StoryEncoding& story_enc,
                    const HopConfig& cfg);

struct AnswerSelection {
  std::array<Tensor, 4> scores;  // cosine(v_q_n, choice i)
  int chosen = 0;                // argmax, lowest index on ties
};

AnswerSelection answer_select(Tape& tape, const Tensor& v_q_n,
                              const std::array<Tensor, 4>& choice_vectors);

}  // namespace amrnn
