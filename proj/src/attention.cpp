#include "amrnn/attention.hpp"

namespace amrnn {

std::string to_string(AttentionLevel level) {
  return level == AttentionLevel::word ? "word" : "sentence";
}

AttentionLevel attention_level_from_string(const std::string& name) {
  if (name == "word") return AttentionLevel::word;
  if (name == "sentence") return AttentionLevel::sentence;
  throw ConfigError("unknown attention level '" + name + "' (expected word or sentence)");
}

Tensor attention_values(Tape& tape, const StoryEncoding& story_enc, const Tensor& v_q) {
  if (story_enc.word_vectors.empty()) {
    throw PreconditionError("attention_values: empty story encoding");
  }
  std::vector<Tensor> scores;
  scores.reserve(story_enc.word_vectors.size());
  for (const Tensor& s_t : story_enc.word_vectors) {
    scores.push_back(tape.cosine_similarity(s_t, v_q));
  }
  return tape.stack(scores);
}

StoryVector story_vector(Tape& tape, const StoryEncoding& story_enc, const Tensor& alphas,
                         AttentionLevel level) {
  if (static_cast<std::size_t>(alphas.numel()) != story_enc.word_vectors.size()) {
    throw ShapeError("story_vector: " + std::to_string(story_enc.word_vectors.size()) +
                     " positions vs alphas " + shape_str(alphas.shape));
  }
  std::vector<char> active;
  if (level == AttentionLevel::word) {
    active.assign(story_enc.word_vectors.size(), 1);
  } else {
    active = story_enc.eos_mask;
  }
  StoryVector out;
  out.weights = tape.normalize_attention(alphas, active);
  out.vs = tape.weighted_sum(out.weights, story_enc.word_vectors);
  return out;
}

HopResult hop(Tape& tape, const Tensor& v_q, const StoryEncoding& story_enc,
              AttentionLevel level) {
  const Tensor alphas = attention_values(tape, story_enc, v_q);
  const StoryVector sv = story_vector(tape, story_enc, alphas, level);

  HopResult result;
  result.v_q_next = tape.add(v_q, sv.vs);
  result.trace.raw = alphas.values;
  result.trace.weights = sv.weights.values;
  result.trace.story_vector = sv.vs.values;
  result.trace.question_vector = result.v_q_next.values;
  return result;
}

HopsResult run_hops(Tape& tape, const Tensor& v_q0, const StoryEncoding& story_enc,
                    const HopConfig& cfg) {
  if (cfg.n_hops < 1) {
    throw ConfigError("run_hops: n_hops must be >= 1, got " + std::to_string(cfg.n_hops));
  }
  HopsResult result;
  result.trace.level = cfg.level;
  Tensor v_q = v_q0;
  for (int k = 0; k < cfg.n_hops; ++k) {
    HopResult h = hop(tape, v_q, story_enc, cfg.level);
    v_q = h.v_q_next;
    result.trace.hops.push_back(std::move(h.trace));
  }
  result.v_q_final = v_q;
  return result;
}

AnswerSelection answer_select(Tape& tape, const Tensor& v_q_n,
                              const std::array<Tensor, 4>& choice_vectors) {
  AnswerSelection out;
  for (int i = 0; i < 4; ++i) {
    out.scores[static_cast<std::size_t>(i)] =
        tape.cosine_similarity(v_q_n, choice_vectors[static_cast<std::size_t>(i)]);
  }
  out.chosen = 0;
  for (int i = 1; i < 4; ++i) {
    if (out.scores[static_cast<std::size_t>(i)].scalar_value() >
        out.scores[static_cast<std::size_t>(out.chosen)].scalar_value()) {
      out.chosen = i;
    }
  }
  return out;
}

}  // namespace amrnn
